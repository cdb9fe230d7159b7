//! Seeded generators for random test instances.
//!
//! Every generator takes an explicit RNG; [`seeded`] returns a ChaCha8 stream so
//! instances are reproducible across platforms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{trace, ComplexMatrix, DensityMatrix, HermitianOperator};

pub type InstanceRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn instance_rng(seed: u64, stream: u64) -> InstanceRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with independent standard complex normal entries.
pub fn random_matrix(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    DMatrix::from_fn(dim, dim, |_, _| Complex64::new(normal(rng), normal(rng)))
}

/// GUE-like Hermitian matrix `(A + A†)/2`.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> HermitianOperator {
    let a = random_matrix(rng, dim);
    HermitianOperator::new((&a + a.adjoint()).scale(0.5)).expect("symmetrised matrix is Hermitian")
}

/// Full-rank density matrix `A A† / Tr(A A†)` (Ginibre ensemble).
pub fn random_density_matrix(rng: &mut impl Rng, dim: usize) -> DensityMatrix {
    let a = random_matrix(rng, dim);
    let m = &a * a.adjoint();
    let tr = trace(&m).re;
    DensityMatrix::new(m.unscale(tr)).expect("Ginibre state is a density matrix")
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let qr = random_matrix(rng, dim).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut col = u.column_mut(j);
        col *= phase;
    }
    u
}
