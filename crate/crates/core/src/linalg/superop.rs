use std::ops::{Add, Mul, Sub};

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{
    c, matrix_exponential, max_abs_diff, principal_matrix_logarithm, tensor_product, tol, trace, ComplexMatrix, ONE,
};
use crate::error::{Error, Result};

/// Linear map on `d × d` operators, stored as a `d² × d²` matrix acting on
/// column-stacked operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: matrix.nrows(),
            });
        }
        Ok(Self { dim, matrix })
    }

    /// Materialises a linear action by applying it to every matrix unit `E_ij`.
    ///
    /// Linearity of `action` is the caller's contract.
    pub fn from_action(dim: usize, action: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let n = dim * dim;
        let mut matrix = ComplexMatrix::zeros(n, n);
        let mut unit = ComplexMatrix::zeros(dim, dim);
        for j in 0..dim {
            for i in 0..dim {
                unit[(i, j)] = ONE;
                let image = action(&unit);
                assert_eq!(image.shape(), (dim, dim), "action changed the operator dimension");
                matrix.column_mut(i + j * dim).copy_from_slice(image.as_slice());
                unit[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Self { dim, matrix }
    }

    /// `X ↦ Σ_k K_k X K_k†`.
    pub fn from_kraus<'a>(dim: usize, kraus: impl IntoIterator<Item = &'a ComplexMatrix>) -> Self {
        let mut matrix = ComplexMatrix::zeros(dim * dim, dim * dim);
        for k in kraus {
            matrix += tensor_product(&k.map(|z| z.conj()), k);
        }
        Self { dim, matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::identity(dim * dim, dim * dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::zeros(dim * dim, dim * dim),
        }
    }

    /// `X ↦ −i[H, X]`.
    pub fn commutator_generator(h: &ComplexMatrix) -> Self {
        let d = h.nrows();
        Self::from_action(d, |x| (h * x - x * h).map(|z| z * Complex64::new(0.0, -1.0)))
    }

    /// Operator dimension `d` (the matrix is `d² × d²`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.shape(), (self.dim, self.dim), "operator dimension mismatch");
        let v = DVector::from_column_slice(x.as_slice());
        let out = &self.matrix * v;
        ComplexMatrix::from_column_slice(self.dim, self.dim, out.as_slice())
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "superoperator dimension mismatch");
        Self {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            matrix: self.matrix.scale(factor),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    pub fn max_norm(&self) -> f64 {
        super::max_norm(&self.matrix)
    }

    /// `exp(t · self)`.
    pub fn exp(&self, t: f64) -> Self {
        Self {
            dim: self.dim,
            matrix: matrix_exponential(&self.matrix.scale(t)),
        }
    }

    /// Principal logarithm of the superoperator matrix.
    pub fn log(&self) -> Result<Self> {
        Ok(Self {
            dim: self.dim,
            matrix: principal_matrix_logarithm(&self.matrix)?,
        })
    }

    /// Choi matrix `Σ_ij E_ij ⊗ Φ(E_ij)`.
    pub fn choi(&self) -> ComplexMatrix {
        let d = self.dim;
        let mut choi = ComplexMatrix::zeros(d * d, d * d);
        let mut unit = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                unit[(i, j)] = ONE;
                let image = self.apply(&unit);
                choi += tensor_product(&unit, &image);
                unit[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        choi
    }

    /// Smallest eigenvalue of the Hermitian part of the Choi matrix.
    pub fn min_choi_eigenvalue(&self) -> f64 {
        let choi = super::hermitian_part(&self.choi());
        SymmetricEigen::new(choi)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_ij |Tr Φ(E_ij) − δ_ij|`.
    pub fn trace_preservation_error(&self) -> f64 {
        self.trace_defect(1.0)
    }

    /// `max_ij |Tr Φ(E_ij)|`; zero for generators of trace-preserving semigroups.
    pub fn traceless_output_error(&self) -> f64 {
        self.trace_defect(0.0)
    }

    fn trace_defect(&self, diagonal_target: f64) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        let mut unit = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                unit[(i, j)] = ONE;
                let target = if i == j { c(diagonal_target) } else { c(0.0) };
                worst = worst.max((trace(&self.apply(&unit)) - target).norm());
                unit[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        worst
    }

    /// Completely positive (Choi PSD to `-1e-10`) and trace preserving (to `1e-10`).
    pub fn is_cptp(&self) -> bool {
        self.min_choi_eigenvalue() >= -1e-10 && self.trace_preservation_error() <= tol::TRACE_PRESERVATION
    }
}

impl Add for &Superoperator {
    type Output = Superoperator;

    fn add(self, rhs: Self) -> Superoperator {
        assert_eq!(self.dim, rhs.dim, "superoperator dimension mismatch");
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &Superoperator {
    type Output = Superoperator;

    fn sub(self, rhs: Self) -> Superoperator {
        assert_eq!(self.dim, rhs.dim, "superoperator dimension mismatch");
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Superoperator {
    type Output = Superoperator;

    fn mul(self, rhs: Self) -> Superoperator {
        self.compose(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, pauli_x, tensor_product, I};
    use crate::random::{random_hermitian, random_matrix, seeded};

    #[test]
    fn identity_action_gives_identity() {
        let s = Superoperator::from_action(3, |x| x.clone());
        assert_eq!(s, Superoperator::identity(3));
    }

    #[test]
    fn bit_flip_channel_matrix() {
        let x = pauli_x();
        let s = Superoperator::from_action(2, |m| &x * m * &x);
        // vec(X M X) = (Xᵀ ⊗ X) vec(M); Xᵀ = X.
        assert!(max_abs_diff(s.matrix(), &tensor_product(&x, &x)) == 0.0);
        // Matrix units map to flipped matrix units.
        let mut e00 = ComplexMatrix::zeros(2, 2);
        e00[(0, 0)] = ONE;
        let out = s.apply(&e00);
        assert_eq!(out[(1, 1)], ONE);
        assert_eq!(out[(0, 0)], c(0.0));
    }

    #[test]
    fn commutator_generator_column_stacking_identity() {
        let mut rng = seeded(41);
        for d in 2..=4 {
            let h = random_hermitian(&mut rng, d);
            let s = Superoperator::commutator_generator(h.matrix());
            let id = identity(d);
            // Column stacking: vec(HX) = (I ⊗ H) vec X, vec(XH) = (Hᵀ ⊗ I) vec X.
            let expected =
                (tensor_product(&id, h.matrix()) - tensor_product(&h.matrix().transpose(), &id)).map(|z| -I * z);
            assert!(max_abs_diff(s.matrix(), &expected) <= 1e-14);
        }
    }

    #[test]
    fn action_is_linear_on_random_operators() {
        let mut rng = seeded(42);
        let a = random_matrix(&mut rng, 3);
        let b = random_matrix(&mut rng, 3);
        let action = |x: &ComplexMatrix| &a * x * &b + x.transpose();
        let s = Superoperator::from_action(3, action);
        for _ in 0..100 {
            let x = random_matrix(&mut rng, 3);
            assert!(max_abs_diff(&s.apply(&x), &action(&x)) <= 1e-10);
        }
    }

    #[test]
    fn unitary_channel_is_cptp() {
        let mut rng = seeded(43);
        let u = random_hermitian(&mut rng, 3).propagator(0.8);
        let s = Superoperator::from_kraus(3, [&u]);
        assert!(s.is_cptp());
        assert!(s.min_choi_eigenvalue() > -1e-12);
        let direct = Superoperator::from_action(3, |x| &u * x * u.adjoint());
        assert!(s.max_abs_diff(&direct) <= 1e-14);
    }

    #[test]
    fn transpose_map_is_not_completely_positive() {
        let t = Superoperator::from_action(2, |x| x.transpose());
        assert!(t.trace_preservation_error() < 1e-15);
        assert!(t.min_choi_eigenvalue() < -0.5);
        assert!(!t.is_cptp());
    }

    #[test]
    fn composition_order() {
        let x = pauli_x();
        let flip = Superoperator::from_action(2, |m| &x * m * &x);
        let keep_upper = Superoperator::from_action(2, |m| {
            let mut out = ComplexMatrix::zeros(2, 2);
            out[(0, 0)] = m[(0, 0)];
            out
        });
        let mut e11 = ComplexMatrix::zeros(2, 2);
        e11[(1, 1)] = ONE;
        // flip first, then project: E11 -> E00 -> E00
        assert_eq!(keep_upper.compose(&flip).apply(&e11)[(0, 0)], ONE);
        assert_eq!(flip.compose(&keep_upper).apply(&e11)[(0, 0)], c(0.0));
    }
}
