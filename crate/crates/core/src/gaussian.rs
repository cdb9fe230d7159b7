//! Single-mode Gaussian bombardment: a harmonic oscillator S hit by thermal
//! oscillator ancillas through `H_SA = X_Sᵀ G X_A`, `X = (x, p)`.
//!
//! Quadratures are dimensionless with `[x, p] = i`; covariances are
//! `σ_ij = ⟨{ΔX_i, ΔX_j}⟩`, so the vacuum has `σ = I` and a thermal mode has
//! `σ = ν I` with `ν = coth(ωβ/2)`.

use nalgebra::{Matrix2, Matrix4};

use crate::collision::{collision_channel, fixed_point, CollisionSetup, FixedPointMode};
use crate::error::{Error, Result};
use crate::linalg::{c, tensor_product, trace, ComplexMatrix, HermitianOperator, I};

/// Smallest `|det G|` for which the fixed-point formula is evaluated.
pub const DET_TOL: f64 = 1e-12;
/// Collision cap for [`gaussian_fixed_point`].
pub const MAX_COLLISIONS: usize = 10_000_000;
/// Convergence is assessed once per block of this many collisions.
const BLOCK: usize = 64;
/// Symplectic eigenvalues beyond this count as divergence.
const DIVERGENCE_NU: f64 = 1e12;
/// `ν − 1` below this cannot be inverted to a temperature reliably.
pub const NU_BOUNDARY: f64 = 1e-12;

fn symplectic_form() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

/// A zero-mean Gaussian mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMode {
    omega: f64,
    cov: Matrix2<f64>,
}

impl GaussianMode {
    pub fn new(omega: f64, cov: Matrix2<f64>) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::param("omega", format!("must be finite and > 0, got {omega}")));
        }
        if (cov[(0, 1)] - cov[(1, 0)]).abs() > 1e-12 {
            return Err(Error::param("cov", "covariance must be symmetric"));
        }
        let min_eig = uncertainty_min_eigenvalue(&cov);
        if !(min_eig >= -1e-10) {
            return Err(Error::param(
                "cov",
                format!("violates the uncertainty relation ({min_eig:e})"),
            ));
        }
        Ok(Self { omega, cov })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn cov(&self) -> &Matrix2<f64> {
        &self.cov
    }

    /// Symplectic eigenvalue `√det σ`.
    pub fn nu(&self) -> f64 {
        self.cov.determinant().sqrt()
    }
}

/// Smallest eigenvalue of `σ + iΩ`.
pub fn uncertainty_min_eigenvalue(cov: &Matrix2<f64>) -> f64 {
    let (a, b, d) = (cov[(0, 0)], 0.5 * (cov[(0, 1)] + cov[(1, 0)]), cov[(1, 1)]);
    0.5 * (a + d - ((a - d).powi(2) + 4.0 * (b * b + 1.0)).sqrt())
}

/// Real 2×2 coupling `G` in `H_SA = X_Sᵀ G X_A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingMatrix {
    g: Matrix2<f64>,
}

impl CouplingMatrix {
    pub fn new(g_xx: f64, g_xp: f64, g_px: f64, g_pp: f64) -> Self {
        Self {
            g: Matrix2::new(g_xx, g_xp, g_px, g_pp),
        }
    }

    pub fn from_matrix(g: Matrix2<f64>) -> Self {
        Self { g }
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.g
    }

    pub fn det(&self) -> f64 {
        self.g.determinant()
    }

    /// `Tr(GᵀG) / (2 det G)`.
    pub fn formula_ratio(&self) -> Result<f64> {
        let det = self.det();
        if det.abs() < DET_TOL {
            return Err(Error::param(
                "g",
                format!("|det G| = {:e} is below {DET_TOL:e}", det.abs()),
            ));
        }
        Ok((self.g.transpose() * self.g).trace() / (2.0 * det))
    }

    /// `Tr(GᵀG) = 2 det G`, i.e. `G = [[a, b], [−b, a]]`.
    pub fn is_fine_tuned(&self, tol: f64) -> bool {
        ((self.g.transpose() * self.g).trace() - 2.0 * self.det()).abs() <= tol
    }
}

/// `ν(ω, β) = (e^{ωβ} + 1)/(e^{ωβ} − 1) = coth(ωβ/2)`. Returns `+∞` at `β = 0`.
pub fn nu_of_beta(omega: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return f64::INFINITY;
    }
    1.0 + 2.0 / (omega * beta).exp_m1()
}

/// Inverse of [`nu_of_beta`]. Errors for `ν − 1 < NU_BOUNDARY` (including
/// `ν ≤ 1`); `ν = +∞` maps to `β = 0`.
pub fn beta_of_nu(omega: f64, nu: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::param("omega", format!("must be finite and > 0, got {omega}")));
    }
    if nu == f64::INFINITY {
        return Ok(0.0);
    }
    if !(nu - 1.0 >= NU_BOUNDARY) {
        return Err(Error::param(
            "nu",
            format!("must exceed 1 by at least {NU_BOUNDARY:e}, got {nu}"),
        ));
    }
    Ok((2.0 / (nu - 1.0)).ln_1p() / omega)
}

/// Thermal state `σ = ν(ω, β) I`. `β = ∞` gives the vacuum; `β = 0` is rejected.
pub fn thermal_mode(omega: f64, beta: f64) -> Result<GaussianMode> {
    if !(beta > 0.0) {
        return Err(Error::param(
            "beta",
            format!("must be > 0 for a finite covariance, got {beta}"),
        ));
    }
    GaussianMode::new(omega, Matrix2::identity() * nu_of_beta(omega, beta))
}

/// `S(dt) = exp(dt Ω₄ M)` with `H = ½ Xᵀ M X` over `X = (x_S, p_S, x_A, p_A)`.
pub fn symplectic_propagator(omega_s: f64, omega_a: f64, g: &CouplingMatrix, dt: f64) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0)
        .copy_from(&(Matrix2::identity() * omega_s));
    m.fixed_view_mut::<2, 2>(2, 2)
        .copy_from(&(Matrix2::identity() * omega_a));
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&g.g);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&g.g.transpose());
    let mut omega4 = Matrix4::zeros();
    omega4.fixed_view_mut::<2, 2>(0, 0).copy_from(&symplectic_form());
    omega4.fixed_view_mut::<2, 2>(2, 2).copy_from(&symplectic_form());
    (omega4 * m * dt).exp()
}

/// System blocks `(A, B)` of `S(dt)`: `σ_S' = A σ_S Aᵀ + B σ_A Bᵀ`.
fn system_blocks(s: &Matrix4<f64>) -> (Matrix2<f64>, Matrix2<f64>) {
    (
        s.fixed_view::<2, 2>(0, 0).into_owned(),
        s.fixed_view::<2, 2>(0, 2).into_owned(),
    )
}

/// One collision with a fresh ancilla; returns the new system mode.
pub fn gaussian_collision_update(
    s: &GaussianMode,
    ancilla: &GaussianMode,
    g: &CouplingMatrix,
    dt: f64,
) -> GaussianMode {
    let sp = symplectic_propagator(s.omega, ancilla.omega, g, dt);
    let (a, b) = system_blocks(&sp);
    let cov = a * s.cov * a.transpose() + b * ancilla.cov * b.transpose();
    GaussianMode {
        omega: s.omega,
        cov: symmetrize(cov),
    }
}

fn symmetrize(m: Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) * 0.5
}

fn max_abs(m: &Matrix2<f64>) -> f64 {
    m.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Converged system state under repeated collisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFixedPoint {
    pub cov: Matrix2<f64>,
    pub nu_inf: f64,
    pub iterations: usize,
}

/// Iterates collisions from the vacuum until the estimated distance to the
/// limit is below `tol` (max-norm on the covariance).
///
/// Every `BLOCK` collisions the change `Δ_b` over the block is compared with the
/// previous one; with `r = Δ_b / Δ_{b−1} < 1` the remaining distance is bounded
/// by `Δ_b · r / (1 − r)`.
pub fn gaussian_fixed_point(
    omega_s: f64,
    omega_a: f64,
    g: &CouplingMatrix,
    beta_a: f64,
    dt: f64,
    tol: f64,
) -> Result<GaussianFixedPoint> {
    if g.det().abs() < DET_TOL {
        return Err(Error::param(
            "g",
            format!("|det G| = {:e} is below {DET_TOL:e}", g.det().abs()),
        ));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be > 0"));
    }
    let ancilla = thermal_mode(omega_a, beta_a)?;
    GaussianMode::new(omega_s, Matrix2::identity())?;
    let (a, b) = system_blocks(&symplectic_propagator(omega_s, omega_a, g, dt));
    let drive = symmetrize(b * ancilla.cov * b.transpose());
    let at = a.transpose();

    let mut cov = Matrix2::identity();
    let mut block_start = cov;
    let mut previous_change = f64::INFINITY;
    let mut n = 0;
    while n < MAX_COLLISIONS {
        for _ in 0..BLOCK {
            cov = symmetrize(a * cov * at + drive);
        }
        n += BLOCK;
        let nu = cov.determinant().sqrt();
        if !nu.is_finite() || nu > DIVERGENCE_NU {
            return Err(Error::Diverged(n));
        }
        let change = max_abs(&(cov - block_start));
        block_start = cov;
        let converged = change == 0.0
            || (previous_change.is_finite() && {
                let r = change / previous_change;
                r < 1.0 && change * r / (1.0 - r) <= tol
            });
        if converged {
            return Ok(GaussianFixedPoint {
                cov,
                nu_inf: nu,
                iterations: n,
            });
        }
        previous_change = change;
    }
    Err(Error::NotConverged(MAX_COLLISIONS))
}

/// Fixed points at `dt`, `dt/2`, `dt/4` and their Richardson limit `dt → 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrapolatedFixedPoint {
    pub dts: [f64; 3],
    pub nus: [f64; 3],
    pub cov: Matrix2<f64>,
    pub nu_inf: f64,
    pub iterations: usize,
}

/// Richardson extrapolation of the fixed-point covariance in `dt²` (the
/// finite-`dt` offset is even in `dt`).
pub fn extrapolated_fixed_point(
    omega_s: f64,
    omega_a: f64,
    g: &CouplingMatrix,
    beta_a: f64,
    dt: f64,
    tol: f64,
) -> Result<ExtrapolatedFixedPoint> {
    let dts = [dt, dt / 2.0, dt / 4.0];
    let mut fps = Vec::with_capacity(3);
    for &h in &dts {
        fps.push(gaussian_fixed_point(omega_s, omega_a, g, beta_a, h, tol)?);
    }
    let r1a = (fps[1].cov * 4.0 - fps[0].cov) / 3.0;
    let r1b = (fps[2].cov * 4.0 - fps[1].cov) / 3.0;
    let cov = (r1b * 16.0 - r1a) / 15.0;
    Ok(ExtrapolatedFixedPoint {
        dts,
        nus: [fps[0].nu_inf, fps[1].nu_inf, fps[2].nu_inf],
        cov,
        nu_inf: cov.determinant().sqrt(),
        iterations: fps.iter().map(|f| f.iterations).sum(),
    })
}

/// Closed-form prediction `Tr(GᵀG)/(2 det G) · ν_A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormulaPrediction {
    pub ratio: f64,
    pub nu_inf: f64,
    /// `det G > 0` and `ν ≥ 1`.
    pub physical: bool,
}

pub fn predicted_nu_inf(g: &CouplingMatrix, nu_a: f64) -> Result<FormulaPrediction> {
    let ratio = g.formula_ratio()?;
    let nu_inf = ratio * nu_a;
    Ok(FormulaPrediction {
        ratio,
        nu_inf,
        physical: g.det() > 0.0 && nu_inf >= 1.0,
    })
}

/// Settings for [`gaussian_contact_check`].
#[derive(Debug, Clone)]
pub struct GaussianContactSpec {
    pub omega_s: f64,
    pub omega_a: f64,
    pub g: CouplingMatrix,
    pub beta_grid_s: Vec<f64>,
    pub beta_grid_a: Vec<f64>,
    pub dt: f64,
    pub horizon: usize,
    pub thermality_tol: f64,
    pub equality_tol: f64,
    pub stationarity_tol: f64,
    pub fixed_point_tol: f64,
}

impl GaussianContactSpec {
    pub fn with_defaults(omega_s: f64, omega_a: f64, g: CouplingMatrix) -> Self {
        Self {
            omega_s,
            omega_a,
            g,
            beta_grid_s: vec![0.2, 0.5, 1.0, 2.0],
            beta_grid_a: vec![0.2, 0.5, 1.0, 2.0],
            dt: 0.05,
            horizon: 200,
            thermality_tol: 1e-5,
            equality_tol: 1e-4,
            stationarity_tol: 1e-8,
            fixed_point_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianContactCell {
    pub beta_s0: f64,
    pub beta_a: f64,
    pub nu_inf: f64,
    /// `max(|σ_xx − σ_pp|/2, |σ_xp|) / ν` of the limit covariance.
    pub anisotropy: f64,
    pub beta_s_inf: Option<f64>,
    pub thermal: bool,
    pub equal: bool,
    /// Largest covariance change over the horizon from the initial state.
    pub motion: f64,
    pub condition3: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianContactReport {
    pub cells: Vec<GaussianContactCell>,
    pub overall: bool,
}

/// Conditions 1–3 for the oscillator model, with the `dt → 0` limit taken by
/// Richardson extrapolation.
pub fn gaussian_contact_check(spec: &GaussianContactSpec) -> Result<GaussianContactReport> {
    if spec.beta_grid_s.is_empty() || spec.beta_grid_a.is_empty() {
        return Err(Error::param("beta_grid", "grids must be non-empty"));
    }
    let mut limits = Vec::with_capacity(spec.beta_grid_a.len());
    for &ba in &spec.beta_grid_a {
        limits.push(extrapolated_fixed_point(
            spec.omega_s,
            spec.omega_a,
            &spec.g,
            ba,
            spec.dt,
            spec.fixed_point_tol,
        )?);
    }
    let mut cells = Vec::new();
    for &bs in &spec.beta_grid_s {
        for (&ba, lim) in spec.beta_grid_a.iter().zip(&limits) {
            let cov = lim.cov;
            let anisotropy = (0.5 * (cov[(0, 0)] - cov[(1, 1)]).abs()).max(cov[(0, 1)].abs()) / lim.nu_inf;
            let beta_s_inf = beta_of_nu(spec.omega_s, lim.nu_inf).ok();
            let thermal = anisotropy <= spec.thermality_tol && beta_s_inf.is_some();
            let equal = beta_s_inf.is_some_and(|b| (b - ba).abs() <= spec.equality_tol);

            let ancilla = thermal_mode(spec.omega_a, ba)?;
            let start = thermal_mode(spec.omega_s, bs)?;
            let mut state = start;
            let mut motion: f64 = 0.0;
            for _ in 0..spec.horizon {
                state = gaussian_collision_update(&state, &ancilla, &spec.g, spec.dt);
                motion = motion.max(max_abs(&(state.cov - start.cov)));
            }
            let condition3 = if bs == ba {
                motion <= spec.stationarity_tol
            } else {
                motion > spec.stationarity_tol
            };
            cells.push(GaussianContactCell {
                beta_s0: bs,
                beta_a: ba,
                nu_inf: lim.nu_inf,
                anisotropy,
                beta_s_inf,
                thermal,
                equal,
                motion,
                condition3,
            });
        }
    }
    let overall = cells.iter().all(|c| c.thermal && c.equal && c.condition3);
    Ok(GaussianContactReport { cells, overall })
}

/// Truncated Fock-space oracle for the Gaussian fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockCheck {
    pub nu_fock: f64,
    pub nu_gaussian: f64,
    /// Population of the highest retained Fock level in the fixed state.
    pub tail_population: f64,
}

/// Highest-level population allowed in [`fock_cross_check`].
pub const FOCK_TAIL_TOL: f64 = 1e-6;

fn annihilation(dim: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

/// Runs the same collision model on oscillators truncated to `dim` levels and
/// compares the fixed-point symplectic eigenvalue with the Gaussian iteration.
pub fn fock_cross_check(
    omega_s: f64,
    omega_a: f64,
    g: &CouplingMatrix,
    beta_a: f64,
    dt: f64,
    dim: usize,
) -> Result<FockCheck> {
    let a = annihilation(dim);
    let ad = a.adjoint();
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a + &ad).scale(s2);
    let p = (&ad - &a).map(|z| z * I * s2);
    let number = &ad * &a;
    let half = ComplexMatrix::identity(dim, dim).scale(0.5);
    let h_s = HermitianOperator::new((&number + &half).scale(omega_s))?;
    let h_a = HermitianOperator::new((&number + &half).scale(omega_a))?;
    let quads = [&x, &p];
    let mut h_sa = ComplexMatrix::zeros(dim * dim, dim * dim);
    for i in 0..2 {
        for j in 0..2 {
            h_sa += tensor_product(quads[i], quads[j]).scale(g.g[(i, j)]);
        }
    }
    let setup = CollisionSetup::new(h_s, h_a, HermitianOperator::new(h_sa)?, beta_a, dt)?;
    let report = fixed_point(&collision_channel(&setup), FixedPointMode::Channel)?;
    if !report.unique {
        return Err(Error::Precondition(
            "truncated channel has no unique fixed point".into(),
        ));
    }
    let rho = report.state.matrix();
    let tail_population = rho[(dim - 1, dim - 1)].re;
    if tail_population >= FOCK_TAIL_TOL {
        return Err(Error::Precondition(format!(
            "top Fock level holds population {tail_population:e}; raise the truncation"
        )));
    }
    let expect = |m: &ComplexMatrix| -> f64 { trace(&(m * rho)).re };
    let sxx = 2.0 * expect(&(&x * &x)) - 2.0 * expect(&x).powi(2);
    let spp = 2.0 * expect(&(&p * &p)) - 2.0 * expect(&p).powi(2);
    let sxp = expect(&(&x * &p + &p * &x)) - 2.0 * expect(&x) * expect(&p);
    let nu_fock = (sxx * spp - sxp * sxp).sqrt();
    let nu_gaussian = gaussian_fixed_point(omega_s, omega_a, g, beta_a, dt, 1e-12)?.nu_inf;
    Ok(FockCheck {
        nu_fock,
        nu_gaussian,
        tail_population,
    })
}
