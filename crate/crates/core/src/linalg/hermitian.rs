use nalgebra::{DVector, SymmetricEigen};

use super::{max_abs_diff, tol, ComplexMatrix};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Hermitian matrix together with its spectral decomposition.
///
/// Eigenvalues are stored in ascending order; column `n` of
/// [`eigenvectors`](Self::eigenvectors) is the matching eigenvector.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        let asym = max_abs_diff(&matrix, &matrix.adjoint());
        if asym > tol::HERMITIAN {
            return Err(Error::NotHermitian(asym));
        }
        let matrix = super::hermitian_part(&matrix);
        let eig = SymmetricEigen::new(matrix.clone());
        let mut order: Vec<usize> = (0..matrix.nrows()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors =
            ComplexMatrix::from_fn(matrix.nrows(), matrix.nrows(), |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(Self {
            matrix,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: super::zeros(dim),
            eigenvalues: vec![0.0; dim],
            eigenvectors: super::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    /// Multiplies the operator by a positive factor, reusing the eigenbasis.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::param("factor", format!("must be finite and > 0, got {factor}")));
        }
        Ok(Self {
            matrix: self.matrix.scale(factor),
            eigenvalues: self.eigenvalues.iter().map(|e| e * factor).collect(),
            eigenvectors: self.eigenvectors.clone(),
        })
    }

    /// `Σ f(E_n) |n⟩⟨n|`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let values = DVector::from_iterator(self.dim(), self.eigenvalues.iter().map(|&e| f(e)));
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= values[j];
        }
        scaled * v.adjoint()
    }

    /// `exp(-i t H)`.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        self.map_spectrum(|e| Complex64::from_polar(1.0, -t * e))
    }

    /// Largest |eigenvalue|, i.e. the operator norm.
    pub fn norm(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e.abs()).fold(0.0, f64::max)
    }

    /// Diagonal of `m` in this operator's eigenbasis.
    pub fn diagonal_in_eigenbasis(&self, m: &ComplexMatrix) -> Vec<Complex64> {
        let rotated = self.eigenvectors.adjoint() * m * &self.eigenvectors;
        rotated.diagonal().iter().copied().collect()
    }

    /// `m` expressed in this operator's eigenbasis, `⟨n|m|k⟩`.
    pub fn in_eigenbasis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.eigenvectors.adjoint() * m * &self.eigenvectors
    }
}

impl std::ops::Add for &HermitianOperator {
    type Output = HermitianOperator;

    fn add(self, rhs: Self) -> HermitianOperator {
        HermitianOperator::new(self.matrix() + rhs.matrix()).expect("sum of Hermitian operators")
    }
}
