use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{general_eigenvalues, tol, trace, ComplexMatrix, DensityMatrix, Superoperator};

/// Eigenvalues within this distance of 1 (channels) or 0 (generators) span the
/// fixed space.
pub const FIXED_SPACE_TOL: f64 = 1e-8;
const REPRESENTATIVE_CLIP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointMode {
    /// `Φ[ρ] = ρ`.
    Channel,
    /// `L[ρ] = 0`.
    Generator,
}

#[derive(Debug, Clone)]
pub struct FixedPointReport {
    pub state: DensityMatrix,
    pub unique: bool,
    /// Channel: `1 − max |λ|` over the other eigenvalues. Generator: smallest
    /// `|Re λ|` over the other eigenvalues. Infinite if there are none.
    pub spectral_gap: f64,
    pub eigenvalue_one_multiplicity: usize,
}

/// Stationary state of a channel or generator.
///
/// The fixed space is read off the singular vectors of `op − target·I`; the
/// reported state is the normalised Hermitian part of the projection of the
/// identity onto that space.
pub fn fixed_point(op: &Superoperator, mode: FixedPointMode) -> Result<FixedPointReport> {
    let scale = op.max_norm().max(1.0);
    let target = match mode {
        FixedPointMode::Channel => {
            let err = op.trace_preservation_error();
            if err > tol::TRACE_PRESERVATION * scale {
                return Err(Error::Precondition(format!(
                    "channel is not trace preserving ({err:e})"
                )));
            }
            1.0
        }
        FixedPointMode::Generator => {
            let err = op.traceless_output_error();
            if err > tol::TRACE_PRESERVATION * scale {
                return Err(Error::Precondition(format!(
                    "generator output is not traceless ({err:e})"
                )));
            }
            0.0
        }
    };
    let eigenvalues = general_eigenvalues(op.matrix())?;
    let target_c = Complex64::new(target, 0.0);
    let (fixed, others): (Vec<Complex64>, Vec<Complex64>) = eigenvalues
        .iter()
        .partition(|z| (**z - target_c).norm() <= FIXED_SPACE_TOL);
    let multiplicity = fixed.len().max(1);

    let spectral_gap = match mode {
        FixedPointMode::Channel => others.iter().map(|z| 1.0 - z.norm()).fold(f64::INFINITY, f64::min),
        FixedPointMode::Generator => others.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min),
    };

    let n = op.matrix().nrows();
    let shifted = op.matrix() - ComplexMatrix::identity(n, n).scale(target);
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));

    let d = op.dim();
    let mut representative = ComplexMatrix::zeros(d, d);
    let mut weight = 0.0;
    for &k in order.iter().take(multiplicity) {
        let v = v_t.row(k).adjoint();
        let x = ComplexMatrix::from_column_slice(d, d, v.as_slice());
        let t = trace(&x);
        representative += x.map(|z| z * t.conj());
        weight += t.norm_sqr();
    }
    if weight <= 1e-24 {
        return Err(Error::NoStateInFixedSpace);
    }
    let state =
        DensityMatrix::from_numerical(representative, REPRESENTATIVE_CLIP).map_err(|_| Error::NoStateInFixedSpace)?;

    Ok(FixedPointReport {
        state,
        unique: multiplicity == 1,
        spectral_gap,
        eigenvalue_one_multiplicity: multiplicity,
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::random_setup;
    use super::super::{collision_channel, CollisionSetup};
    use super::*;
    use crate::linalg::{max_abs_diff, HermitianOperator};
    use crate::random::{random_density_matrix, seeded};

    #[test]
    fn replacer_channel() {
        let sigma = random_density_matrix(&mut seeded(400), 3);
        let replacer = Superoperator::from_action(3, |x| sigma.matrix().map(|z| z * trace(x)));
        let r = fixed_point(&replacer, FixedPointMode::Channel).unwrap();
        assert!(r.unique);
        assert_eq!(r.eigenvalue_one_multiplicity, 1);
        assert!((r.spectral_gap - 1.0).abs() < 1e-12);
        assert!(max_abs_diff(r.state.matrix(), sigma.matrix()) < 1e-12);
    }

    #[test]
    fn free_evolution_conserves_populations() {
        let s = random_setup(&mut seeded(401), 3, 2, 0.3);
        let free = CollisionSetup::new(s.h_s().clone(), s.h_a().clone(), HermitianOperator::zero(6), 1.0, 0.3).unwrap();
        let r = fixed_point(&collision_channel(&free), FixedPointMode::Channel).unwrap();
        assert_eq!(r.eigenvalue_one_multiplicity, 3);
        assert!(!r.unique);
    }

    #[test]
    fn unique_fixed_point_is_invariant() {
        let mut rng = seeded(402);
        for _ in 0..10 {
            let s = random_setup(&mut rng, 2, 3, 0.4);
            let phi = collision_channel(&s);
            let r = fixed_point(&phi, FixedPointMode::Channel).unwrap();
            assert!(r.unique);
            assert!(r.spectral_gap > 0.0);
            assert!(max_abs_diff(&phi.apply(r.state.matrix()), r.state.matrix()) <= 1e-9);
        }
    }

    #[test]
    fn rejects_mode_mismatch() {
        let id = Superoperator::identity(2);
        assert!(matches!(
            fixed_point(&id, FixedPointMode::Generator),
            Err(Error::Precondition(_))
        ));
        let doubled = id.scale(2.0);
        assert!(matches!(
            fixed_point(&doubled, FixedPointMode::Channel),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn rotation_generator_keeps_commutant() {
        // −i[σ_x, ·] annihilates I and σ_x.
        let l = Superoperator::commutator_generator(&crate::linalg::pauli_x());
        let r = fixed_point(&l, FixedPointMode::Generator).unwrap();
        assert_eq!(r.eigenvalue_one_multiplicity, 2);
        assert!(max_abs_diff(r.state.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-12);
    }
}
