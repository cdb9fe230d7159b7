//! How much a system learns about an ancilla's energy scale in one collision.
//!
//! Loki replaces `(H_B, β_B)` by `(H_B/λ, λβ_B)`. The state of B is unchanged,
//! so λ is visible to A only through the dynamics. The quantum Fisher
//! information of `ρ_A(λ, δt)` with respect to λ measures that leak.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{log_log_fit, log_space};
use crate::linalg::{
    hermitian_part, identity, max_abs_diff, partial_trace, tensor_product, trace, ComplexMatrix, DensityMatrix,
    HermitianOperator, Keep,
};
use crate::random::random_hermitian;
use crate::thermal::gibbs;

/// `p_i + p_j` below this marks a kernel pair of the state.
pub const KERNEL_TOL: f64 = 1e-12;
/// Fisher values below this are treated as rounding noise.
pub const FISHER_FLOOR: f64 = 1e-24;
/// Default finite-difference step, relative to λ.
pub const DEFAULT_RELATIVE_STEP: f64 = 1e-2;
/// Largest `δt · ‖H‖` accepted by [`fisher_scan`].
pub const RAPID_REGIME: f64 = 0.3;

fn check_derivative(rho: &DensityMatrix, drho: &ComplexMatrix) -> Result<()> {
    if drho.shape() != (rho.dim(), rho.dim()) {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: drho.nrows(),
        });
    }
    let asym = max_abs_diff(drho, &drho.adjoint());
    if asym > 1e-10 {
        return Err(Error::NotHermitian(asym));
    }
    let tr = trace(drho).norm();
    if tr > 1e-10 {
        return Err(Error::Precondition(format!("derivative has trace {tr:e}")));
    }
    Ok(())
}

/// `drho` in the eigenbasis of `rho`, with the eigenvalues.
fn in_state_basis(rho: &DensityMatrix, drho: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix, ComplexMatrix) {
    let (p, v) = rho.spectrum();
    let d = v.adjoint() * drho * &v;
    (p, d, v)
}

/// Solves `ρL + Lρ = 2 ∂ρ`.
///
/// Pairs with `p_i + p_j < KERNEL_TOL` get `L_ij = 0` when `|∂ρ_ij|` is below the
/// same threshold and are rejected otherwise.
pub fn symmetric_log_derivative(rho: &DensityMatrix, drho: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_derivative(rho, drho)?;
    let (p, d, v) = in_state_basis(rho, drho);
    let n = p.len();
    let mut l = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let s = p[i] + p[j];
            if s < KERNEL_TOL {
                if d[(i, j)].norm() >= KERNEL_TOL {
                    return Err(Error::UnsupportedDirection(d[(i, j)].norm()));
                }
            } else {
                l[(i, j)] = d[(i, j)] * (2.0 / s);
            }
        }
    }
    Ok(&v * l * v.adjoint())
}

/// `F = Tr(L² ρ) = Σ_ij 2|∂ρ_ij|² / (p_i + p_j)`.
pub fn fisher_information(rho: &DensityMatrix, drho: &ComplexMatrix) -> Result<f64> {
    check_derivative(rho, drho)?;
    let (p, d, _) = in_state_basis(rho, drho);
    let n = p.len();
    let mut f = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = p[i] + p[j];
            let w = d[(i, j)].norm();
            if s < KERNEL_TOL {
                if w >= KERNEL_TOL {
                    return Err(Error::UnsupportedDirection(w));
                }
            } else {
                f += 2.0 * w * w / s;
            }
        }
    }
    Ok(f.max(0.0))
}

/// Two systems A and B, thermal with respect to their own Hamiltonians, coupled
/// by `H_AB`.
#[derive(Debug, Clone)]
pub struct PairModel {
    h_a: HermitianOperator,
    h_b: HermitianOperator,
    h_ab: HermitianOperator,
    beta_a: f64,
    beta_b: f64,
    rho_a: DensityMatrix,
    rho_b: DensityMatrix,
}

impl PairModel {
    /// Temperatures must be finite: pure ancillas make the SLD ill-posed.
    pub fn new(
        h_a: HermitianOperator,
        h_b: HermitianOperator,
        h_ab: HermitianOperator,
        beta_a: f64,
        beta_b: f64,
    ) -> Result<Self> {
        if h_ab.dim() != h_a.dim() * h_b.dim() {
            return Err(Error::DimensionMismatch {
                expected: h_a.dim() * h_b.dim(),
                actual: h_ab.dim(),
            });
        }
        for (name, b) in [("beta_a", beta_a), ("beta_b", beta_b)] {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {b}")));
            }
        }
        let rho_a = gibbs(&h_a, beta_a);
        let rho_b = gibbs(&h_b, beta_b);
        Ok(Self {
            h_a,
            h_b,
            h_ab,
            beta_a,
            beta_b,
            rho_a,
            rho_b,
        })
    }

    /// GUE-like qubit pair: every Hamiltonian drawn independently.
    pub fn random_qubits(rng: &mut impl rand::Rng, beta_a: f64, beta_b: f64) -> Result<Self> {
        let h_a = random_hermitian(rng, 2);
        let h_b = random_hermitian(rng, 2);
        let h_ab = random_hermitian(rng, 4);
        Self::new(h_a, h_b, h_ab, beta_a, beta_b)
    }

    pub fn with_coupling(&self, h_ab: HermitianOperator) -> Result<Self> {
        Self::new(self.h_a.clone(), self.h_b.clone(), h_ab, self.beta_a, self.beta_b)
    }

    pub fn h_a(&self) -> &HermitianOperator {
        &self.h_a
    }

    pub fn h_b(&self) -> &HermitianOperator {
        &self.h_b
    }

    pub fn h_ab(&self) -> &HermitianOperator {
        &self.h_ab
    }

    pub fn beta_a(&self) -> f64 {
        self.beta_a
    }

    pub fn beta_b(&self) -> f64 {
        self.beta_b
    }

    pub fn initial_a(&self) -> &DensityMatrix {
        &self.rho_a
    }

    pub fn initial_b(&self) -> &DensityMatrix {
        &self.rho_b
    }

    /// `H(λ) = H_A ⊗ I + I ⊗ H_B/λ + H_AB`.
    pub fn total_hamiltonian(&self, lambda: f64) -> Result<HermitianOperator> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::param("lambda", format!("must be finite and > 0, got {lambda}")));
        }
        let (da, db) = (self.h_a.dim(), self.h_b.dim());
        let m = tensor_product(self.h_a.matrix(), &identity(db))
            + tensor_product(&identity(da), self.h_b.matrix()).scale(1.0 / lambda)
            + self.h_ab.matrix();
        HermitianOperator::new(m)
    }

    /// `dt` values with `dt · ‖H(λ)‖` log-spaced over `[lo, hi]`.
    pub fn regime_grid(&self, lambda: f64, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
        let norm = self.total_hamiltonian(lambda)?.norm();
        Ok(log_space(lo, hi, n).into_iter().map(|x| x / norm).collect())
    }
}

/// `U (ρ_A ⊗ ρ_B) U†` with `U = exp(−iδt H(λ))`; `ρ_B` does not depend on λ.
pub fn joint_state(model: &PairModel, lambda: f64, dt: f64) -> Result<ComplexMatrix> {
    let u = model.total_hamiltonian(lambda)?.propagator(dt);
    Ok(&u * tensor_product(model.rho_a.matrix(), model.rho_b.matrix()) * u.adjoint())
}

/// `ρ_A(λ, δt) = Tr_B(U (ρ_A ⊗ ρ_B) U†)`.
pub fn swapped_pair_state(model: &PairModel, lambda: f64, dt: f64) -> Result<DensityMatrix> {
    let joint = joint_state(model, lambda, dt)?;
    let reduced = partial_trace(&joint, (model.h_a.dim(), model.h_b.dim()), Keep::Left)?;
    DensityMatrix::new(hermitian_part(&reduced))
}

/// `(−f(λ+2h) + 8f(λ+h) − 8f(λ−h) + f(λ−2h)) / 12h`, exact for quartics.
pub fn central_difference_4(f: impl Fn(f64) -> Result<ComplexMatrix>, lambda: f64, step: f64) -> Result<ComplexMatrix> {
    if !(step > 0.0) {
        return Err(Error::param("step", format!("must be > 0, got {step}")));
    }
    let p2 = f(lambda + 2.0 * step)?;
    let p1 = f(lambda + step)?;
    let m1 = f(lambda - step)?;
    let m2 = f(lambda - 2.0 * step)?;
    Ok(((p1 - m1).scale(8.0) - (p2 - m2)).scale(1.0 / (12.0 * step)))
}

/// Hermitian, traceless part of a matrix.
fn clean_derivative(m: ComplexMatrix) -> ComplexMatrix {
    let h = hermitian_part(&m);
    let d = h.nrows();
    let shift = trace(&h) / d as f64;
    h - identity(d).map(|z| z * shift)
}

/// `∂ρ_A/∂λ` by the fourth-order central stencil; requires `λ > 2·step`.
pub fn lambda_derivative(model: &PairModel, lambda: f64, dt: f64, step: f64) -> Result<ComplexMatrix> {
    if !(lambda > 2.0 * step) {
        return Err(Error::param(
            "step",
            format!("stencil leaves λ > 0 only for step < λ/2, got {step}"),
        ));
    }
    let d = central_difference_4(|l| Ok(swapped_pair_state(model, l, dt)?.into_matrix()), lambda, step)?;
    Ok(clean_derivative(d))
}

/// `∂/∂λ` of the joint pre-trace state.
pub fn joint_lambda_derivative(model: &PairModel, lambda: f64, dt: f64, step: f64) -> Result<ComplexMatrix> {
    if !(lambda > 2.0 * step) {
        return Err(Error::param(
            "step",
            format!("stencil leaves λ > 0 only for step < λ/2, got {step}"),
        ));
    }
    let d = central_difference_4(|l| joint_state(model, l, dt), lambda, step)?;
    Ok(clean_derivative(d))
}

/// Fisher information of `ρ_A(λ, δt)` about λ, with the default step.
pub fn pair_fisher(model: &PairModel, lambda: f64, dt: f64) -> Result<f64> {
    let drho = lambda_derivative(model, lambda, dt, DEFAULT_RELATIVE_STEP * lambda)?;
    fisher_information(&swapped_pair_state(model, lambda, dt)?, &drho)
}

/// `F(λ₀, δt)` over a grid and its log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherScan {
    pub lambda0: f64,
    pub dt_grid: Vec<f64>,
    pub f_values: Vec<f64>,
    /// Grid points excluded from the fit for lying below [`FISHER_FLOOR`].
    pub floor_limited: Vec<bool>,
    pub fitted_slope: f64,
    pub fit_r2: f64,
}

pub fn fisher_scan(model: &PairModel, lambda0: f64, dt_grid: &[f64]) -> Result<FisherScan> {
    if dt_grid.is_empty() || dt_grid.iter().any(|&d| !(d > 0.0)) || dt_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(
            "dt_grid",
            "must be non-empty, positive and strictly ascending",
        ));
    }
    let norm = model.total_hamiltonian(lambda0)?.norm();
    let top = dt_grid[dt_grid.len() - 1] * norm;
    if top > RAPID_REGIME * (1.0 + 1e-9) {
        return Err(Error::Precondition(format!(
            "dt·‖H‖ reaches {top:.3}, outside the rapid regime (≤ {RAPID_REGIME})"
        )));
    }
    let f_values = dt_grid
        .par_iter()
        .map(|&dt| pair_fisher(model, lambda0, dt))
        .collect::<Result<Vec<f64>>>()?;
    let floor_limited: Vec<bool> = f_values.iter().map(|&f| f < FISHER_FLOOR).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = dt_grid
        .iter()
        .zip(&f_values)
        .filter(|(_, &f)| f >= FISHER_FLOOR)
        .map(|(&d, &f)| (d, f))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::NoInformation);
    }
    let fit = log_log_fit(&xs, &ys).ok_or(Error::NoInformation)?;
    Ok(FisherScan {
        lambda0,
        dt_grid: dt_grid.to_vec(),
        f_values,
        floor_limited,
        fitted_slope: fit.slope,
        fit_r2: fit.r2,
    })
}

/// `Var(λ) ≥ 1/(N F)`.
pub fn cramer_rao_bound(f: f64, n: u64) -> Result<f64> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::param("f", format!("must be finite and > 0, got {f}")));
    }
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    Ok(1.0 / (n as f64 * f))
}

/// Ratio of Cramér–Rao bounds for `(2N, δt/2)` against `(N, δt)`:
/// `F(δt) / (2 F(δt/2))`.
pub fn split_strategy_factor(f_dt: f64, f_half_dt: f64) -> Result<f64> {
    Ok(cramer_rao_bound(f_half_dt, 2)? / cramer_rao_bound(f_dt, 1)?)
}
