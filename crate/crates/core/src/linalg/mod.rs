//! Dense complex linear algebra for small open-system problems.
//!
//! Conventions used throughout the crate:
//!
//! - Operators are [`ComplexMatrix`] values (`nalgebra::DMatrix<Complex64>`). Row-major
//!   import/export is available through [`from_row_major`] and [`to_row_major`].
//! - Tensor products put the left factor on the slower index: for `A ⊗ B` the
//!   composite index is `i_A * dim(B) + i_B`.
//! - Superoperators act on column-stacked operators: `vec(X)[i + j * d] = X[(i, j)]`,
//!   so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

mod density;
mod hermitian;
mod matfun;
mod superop;

pub use density::DensityMatrix;
pub use hermitian::HermitianOperator;
pub use matfun::{general_eigenvalues, is_normal, matrix_exponential, principal_matrix_logarithm};
pub use superop::Superoperator;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Named tolerances. Tests may pass their own values to the `*_tol` variants.
pub mod tol {
    /// Hermiticity check at construction of Hermitian operators and states.
    pub const HERMITIAN: f64 = 1e-12;
    /// Unit-trace check for density matrices.
    pub const TRACE: f64 = 1e-12;
    /// Lowest admissible eigenvalue of a density matrix.
    pub const POSITIVITY: f64 = 1e-12;
    /// Distance to the negative real axis at which the principal logarithm is refused.
    pub const BRANCH: f64 = 1e-10;
    /// Trace preservation of channels, tracelessness of generators.
    pub const TRACE_PRESERVATION: f64 = 1e-10;
}

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(dim, dim)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Operator exchanging the two factors of `C^d ⊗ C^d`.
pub fn swap_operator(dim: usize) -> ComplexMatrix {
    let mut s = zeros(dim * dim);
    for a in 0..dim {
        for b in 0..dim {
            s[(a * dim + b, b * dim + a)] = ONE;
        }
    }
    s
}

/// Diagonal matrix from real entries.
pub fn diag(entries: &[f64]) -> ComplexMatrix {
    let mut m = zeros(entries.len());
    for (i, &e) in entries.iter().enumerate() {
        m[(i, i)] = c(e);
    }
    m
}

/// Builds a square matrix from row-major entries.
pub fn from_row_major(dim: usize, entries: &[Complex64]) -> Result<ComplexMatrix> {
    if entries.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            actual: entries.len(),
        });
    }
    Ok(ComplexMatrix::from_row_slice(dim, dim, entries))
}

pub fn to_row_major(m: &ComplexMatrix) -> Vec<Complex64> {
    m.transpose().as_slice().to_vec()
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Largest absolute entry.
pub fn max_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Elementwise comparison within an absolute tolerance.
pub fn approx_eq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs_diff(a, b) <= tol
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Kronecker product `a ⊗ b`, left factor on the slower index.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Which factor of a bipartite operator survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    Left,
    Right,
}

/// Partial trace of an operator on `C^{d_left} ⊗ C^{d_right}`.
pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (dl, dr) = dims;
    if !m.is_square() || m.nrows() != dl * dr {
        return Err(Error::DimensionMismatch {
            expected: dl * dr,
            actual: m.nrows(),
        });
    }
    let out = match keep {
        Keep::Left => ComplexMatrix::from_fn(dl, dl, |i, j| (0..dr).map(|k| m[(i * dr + k, j * dr + k)]).sum()),
        Keep::Right => ComplexMatrix::from_fn(dr, dr, |i, j| (0..dl).map(|k| m[(k * dr + i, k * dr + j)]).sum()),
    };
    Ok(out)
}

/// Largest singular value.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Trace distance ½‖a − b‖₁ between Hermitian operators.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let diff = hermitian_part(&(a - b));
    let eig = nalgebra::SymmetricEigen::new(diff);
    0.5 * eig.eigenvalues.iter().map(|e| e.abs()).sum::<f64>()
}
