use nalgebra::SymmetricEigen;

use super::{hermitian_part, max_abs_diff, tol, trace, ComplexMatrix};
use crate::error::{Error, Result};

/// Positive semidefinite, unit-trace operator.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
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
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::InvalidTrace(tr.re));
        }
        let matrix = hermitian_part(&matrix);
        let min_eig = SymmetricEigen::new(matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -tol::POSITIVITY {
            return Err(Error::NotPositive(min_eig));
        }
        Ok(Self { matrix })
    }

    /// Hermitian part of `m` rescaled to unit trace, with eigenvalues in
    /// `[-clip, 0)` set to zero. Absorbs round-off from repeated channel
    /// applications and null-space solves.
    pub(crate) fn from_numerical(matrix: ComplexMatrix, clip: f64) -> Result<Self> {
        let h = hermitian_part(&matrix);
        let tr = trace(&h).re;
        if !(tr.is_finite() && tr.abs() > f64::EPSILON) {
            return Err(Error::InvalidTrace(tr));
        }
        let h = h.unscale(tr);
        let eig = SymmetricEigen::new(h.clone());
        let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -clip {
            return Err(Error::NotPositive(min_eig));
        }
        if min_eig >= 0.0 {
            return Ok(Self { matrix: h });
        }
        let values = eig.eigenvalues.map(|e| e.max(0.0));
        let total: f64 = values.iter().sum();
        let v = &eig.eigenvectors;
        let mut scaled = v.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= num_complex::Complex64::new(values[j] / total, 0.0);
        }
        Ok(Self {
            matrix: hermitian_part(&(scaled * v.adjoint())),
        })
    }

    /// `I / d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: super::identity(dim).scale(1.0 / dim as f64),
        }
    }

    /// Projector onto the normalised vector `psi`.
    pub fn pure(psi: &nalgebra::DVector<num_complex::Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::param("psi", "zero vector"));
        }
        let v = psi.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    /// Convex mixture `w · self + (1 − w) · other`.
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::param("weight", format!("must lie in [0, 1], got {weight}")));
        }
        Self::new(self.matrix.scale(weight) + other.matrix.scale(1.0 - weight))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Eigenvalues (ascending) and eigenvectors of the state.
    pub fn spectrum(&self) -> (Vec<f64>, ComplexMatrix) {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }

    pub fn trace_distance(&self, other: &Self) -> f64 {
        super::trace_distance(&self.matrix, &other.matrix)
    }
}
