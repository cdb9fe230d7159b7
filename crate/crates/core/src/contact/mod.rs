//! Thermal-contact certification and the Loki swap-out attack.
//!
//! A protocol is checked on a finite grid of initial temperatures against three
//! conditions: both final reduced states are thermal, their temperatures agree,
//! and the joint state is stationary exactly when the initial temperatures are
//! equal. The grid is a sample; a passing report does not quantify over all
//! temperatures.

mod protocols;

use rayon::prelude::*;

pub use protocols::{
    bundled_protocols, BareSwap, Evolution, HamiltonianUse, PartialSwapCollision, Protocol, ProtocolInput, Replacer,
    TunedReservoir,
};

use crate::collision::{collision_channel, fixed_point, FixedPointMode};
use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, partial_trace, tensor_product, DensityMatrix, HermitianOperator, Keep};
use crate::thermal::{fit_temperature, gibbs};

pub const DEFAULT_BETA_GRID: [f64; 4] = [0.2, 0.5, 1.0, 2.0];
pub const DEFAULT_HORIZON: usize = 1000;
pub const DEFAULT_THERMALITY_TOL: f64 = 1e-5;
pub const DEFAULT_EQUALITY_TOL: f64 = 1e-4;
pub const DEFAULT_STATIONARITY_TOL: f64 = 1e-8;
const FINAL_STATE_CLIP: f64 = 1e-9;

/// The two parties and how hard to look at them.
#[derive(Debug, Clone)]
pub struct ContactScenario {
    pub h_a: HermitianOperator,
    pub h_b: HermitianOperator,
    pub beta_grid_a: Vec<f64>,
    pub beta_grid_b: Vec<f64>,
    /// Steps sampled for stationarity, and the budget for channel families to settle.
    pub horizon: usize,
    pub thermality_tol: f64,
    pub equality_tol: f64,
    pub stationarity_tol: f64,
}

impl ContactScenario {
    pub fn new(h_a: HermitianOperator, h_b: HermitianOperator) -> Self {
        Self {
            h_a,
            h_b,
            beta_grid_a: DEFAULT_BETA_GRID.to_vec(),
            beta_grid_b: DEFAULT_BETA_GRID.to_vec(),
            horizon: DEFAULT_HORIZON,
            thermality_tol: DEFAULT_THERMALITY_TOL,
            equality_tol: DEFAULT_EQUALITY_TOL,
            stationarity_tol: DEFAULT_STATIONARITY_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [("beta_grid_a", &self.beta_grid_a), ("beta_grid_b", &self.beta_grid_b)] {
            if grid.is_empty() {
                return Err(Error::param(name, "must not be empty"));
            }
            if let Some(b) = grid.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
                return Err(Error::param(name, format!("entries must be finite and >= 0, got {b}")));
            }
        }
        for (name, tol) in [
            ("thermality_tol", self.thermality_tol),
            ("equality_tol", self.equality_tol),
            ("stationarity_tol", self.stationarity_tol),
        ] {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::param(name, format!("must be > 0, got {tol}")));
            }
        }
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be >= 1"));
        }
        Ok(())
    }

    /// `A` replaced by `Λ_A[A]`: same state, Hamiltonian `H_A/λ`.
    fn with_swapped_a(&self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            h_a: self.h_a.scaled(1.0 / lambda)?,
            ..self.clone()
        })
    }
}

/// One `(β_A(0), β_B(0))` grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactCell {
    pub beta_a0: f64,
    pub beta_b0: f64,
    /// Set when no equilibrium could be read off; such a cell never passes.
    pub inconclusive: Option<String>,
    pub beta_a_inf: Option<f64>,
    pub beta_b_inf: Option<f64>,
    /// Condition 1.
    pub thermal: bool,
    pub temperature_gap: Option<f64>,
    /// Condition 2.
    pub equal: bool,
    /// Largest `‖ρ(t) − ρ(0)‖_max` over the horizon.
    pub max_motion: f64,
    /// Condition 3: still iff the initial temperatures agree.
    pub condition3: bool,
}

impl ContactCell {
    pub fn passes(&self) -> bool {
        self.inconclusive.is_none() && self.thermal && self.equal && self.condition3
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactReport {
    pub protocol: String,
    pub cells: Vec<ContactCell>,
    pub overall: bool,
    pub notes: String,
}

impl ContactReport {
    pub fn condition1(&self) -> bool {
        self.cells.iter().all(|c| c.thermal)
    }

    pub fn condition2(&self) -> bool {
        self.cells.iter().all(|c| c.equal)
    }

    pub fn condition3(&self) -> bool {
        self.cells.iter().all(|c| c.condition3)
    }

    pub fn inconclusive_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.inconclusive.is_some()).count()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be finite and > 0, got {lambda}")));
    }
    Ok(())
}

fn build(protocol: &dyn Protocol, h_a: &HermitianOperator, h_b: &HermitianOperator, beta_b: f64) -> Result<Evolution> {
    let input = ProtocolInput {
        dim_a: h_a.dim(),
        h_a: match protocol.hamiltonian_use() {
            HamiltonianUse::Blind => None,
            _ => Some(h_a),
        },
        h_b,
        beta_b,
    };
    let evolution = protocol.build(&input)?;
    let (da, db) = (h_a.dim(), h_b.dim());
    let ok = match &evolution {
        Evolution::Collision(s) => s.system_dim() == da,
        Evolution::Channel(c) => c.dim() == da * db,
    };
    if !ok {
        return Err(Error::Precondition(format!(
            "{} built an evolution of the wrong size",
            protocol.name()
        )));
    }
    Ok(evolution)
}

struct Run {
    final_a: Option<DensityMatrix>,
    final_b: Option<DensityMatrix>,
    inconclusive: Option<String>,
    max_motion: f64,
}

/// Evolves `ρ_A(0) ⊗ ρ_B(0)`, tracking motion and reading off an equilibrium.
fn run(
    scenario: &ContactScenario,
    evolution: &Evolution,
    rho_a0: &DensityMatrix,
    rho_b0: &DensityMatrix,
) -> Result<Run> {
    let tol = scenario.stationarity_tol;
    match evolution {
        Evolution::Collision(setup) => {
            let channel = collision_channel(setup);
            let mut rho = rho_a0.matrix().clone();
            let mut max_motion: f64 = 0.0;
            for _ in 0..scenario.horizon {
                rho = channel.apply(&rho);
                max_motion = max_motion.max(max_abs_diff(&rho, rho_a0.matrix()));
            }
            let fp = fixed_point(&channel, FixedPointMode::Channel)?;
            let (final_a, inconclusive) = if fp.unique {
                (Some(fp.state), None)
            } else {
                (
                    None,
                    Some(format!("fixed space has dimension {}", fp.eigenvalue_one_multiplicity)),
                )
            };
            Ok(Run {
                final_a,
                // Every collision meets a fresh ancilla, so B never changes.
                final_b: Some(setup.ancilla_state().clone()),
                inconclusive,
                max_motion,
            })
        }
        Evolution::Channel(channel) => {
            let (da, db) = (rho_a0.dim(), rho_b0.dim());
            let start = tensor_product(rho_a0.matrix(), rho_b0.matrix());
            let mut rho = start.clone();
            let mut max_motion: f64 = 0.0;
            let mut settled = false;
            for _ in 0..scenario.horizon {
                let next = channel.apply(&rho);
                max_motion = max_motion.max(max_abs_diff(&next, &start));
                let step = max_abs_diff(&next, &rho);
                rho = next;
                if step <= tol {
                    settled = true;
                    break;
                }
            }
            if !settled {
                return Ok(Run {
                    final_a: None,
                    final_b: None,
                    inconclusive: Some(format!("no stationarity within {} steps", scenario.horizon)),
                    max_motion,
                });
            }
            let reduce = |keep| -> Result<DensityMatrix> {
                DensityMatrix::from_numerical(partial_trace(&rho, (da, db), keep)?, FINAL_STATE_CLIP)
            };
            Ok(Run {
                final_a: Some(reduce(Keep::Left)?),
                final_b: Some(reduce(Keep::Right)?),
                inconclusive: None,
                max_motion,
            })
        }
    }
}

fn fitted_beta(rho: Option<&DensityMatrix>, h: &HermitianOperator, tol: f64) -> (Option<f64>, bool) {
    match rho.map(|r| fit_temperature(r, h)) {
        Some(Ok(fit)) => (Some(fit.beta_hat), fit.is_thermal(tol)),
        _ => (None, false),
    }
}

fn same_temperature(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn evaluate_cell(
    scenario: &ContactScenario,
    protocol: &dyn Protocol,
    beta_a0: f64,
    beta_b0: f64,
) -> Result<ContactCell> {
    let rho_a0 = gibbs(&scenario.h_a, beta_a0);
    let rho_b0 = gibbs(&scenario.h_b, beta_b0);
    let evolution = build(protocol, &scenario.h_a, &scenario.h_b, beta_b0)?;
    let outcome = run(scenario, &evolution, &rho_a0, &rho_b0)?;
    let (beta_a_inf, thermal_a) = fitted_beta(outcome.final_a.as_ref(), &scenario.h_a, scenario.thermality_tol);
    let (beta_b_inf, thermal_b) = fitted_beta(outcome.final_b.as_ref(), &scenario.h_b, scenario.thermality_tol);
    let temperature_gap = beta_a_inf.zip(beta_b_inf).map(|(a, b)| (a - b).abs());
    let moved = outcome.max_motion > scenario.stationarity_tol;
    Ok(ContactCell {
        beta_a0,
        beta_b0,
        inconclusive: outcome.inconclusive,
        beta_a_inf,
        beta_b_inf,
        thermal: thermal_a && thermal_b,
        temperature_gap,
        equal: temperature_gap.is_some_and(|g| g <= scenario.equality_tol),
        max_motion: outcome.max_motion,
        condition3: moved != same_temperature(beta_a0, beta_b0),
    })
}

/// Runs every grid cell (in parallel) and assembles the report in grid order.
pub fn check_thermal_contact(scenario: &ContactScenario, protocol: &dyn Protocol) -> Result<ContactReport> {
    scenario.validate()?;
    let grid: Vec<(f64, f64)> = scenario
        .beta_grid_a
        .iter()
        .flat_map(|&a| scenario.beta_grid_b.iter().map(move |&b| (a, b)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(a, b)| evaluate_cell(scenario, protocol, a, b))
        .collect::<Result<Vec<_>>>()?;
    let overall = cells.iter().all(ContactCell::passes);
    let inconclusive = cells.iter().filter(|c| c.inconclusive.is_some()).count();
    let notes = format!(
        "{} grid cells ({} x {}), {} inconclusive; verdicts hold on this grid only",
        cells.len(),
        scenario.beta_grid_a.len(),
        scenario.beta_grid_b.len(),
        inconclusive
    );
    Ok(ContactReport {
        protocol: protocol.name().to_string(),
        cells,
        overall,
        notes,
    })
}

/// What the protocol says about two parties it believes to be at equal temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackVerdict {
    pub max_motion: f64,
    /// No heat flows within the horizon.
    pub reports_equal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackRecord {
    pub protocol: String,
    pub lambda: f64,
    pub true_beta_a: f64,
    pub true_beta_c: f64,
    pub before: AttackVerdict,
    pub after: AttackVerdict,
    /// The verdict changed when A was swapped for `Λ_A[A]`.
    pub detected: bool,
}

fn equal_start_verdict(
    scenario: &ContactScenario,
    protocol: &dyn Protocol,
    beta_a: f64,
    beta_b: f64,
) -> Result<AttackVerdict> {
    let rho_a0 = gibbs(&scenario.h_a, beta_a);
    let rho_b0 = gibbs(&scenario.h_b, beta_b);
    let evolution = build(protocol, &scenario.h_a, &scenario.h_b, beta_b)?;
    let outcome = run(scenario, &evolution, &rho_a0, &rho_b0)?;
    Ok(AttackVerdict {
        max_motion: outcome.max_motion,
        reports_equal: outcome.max_motion <= scenario.stationarity_tol,
    })
}

/// Puts A and B in contact at a common `β`, then repeats with A swapped for
/// `C = Λ_A[A]`, whose state is identical but whose true inverse temperature
/// is `λβ`.
pub fn loki_attack(
    scenario: &ContactScenario,
    protocol: &dyn Protocol,
    beta: f64,
    lambda: f64,
) -> Result<AttackRecord> {
    scenario.validate()?;
    check_lambda(lambda)?;
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::param("beta", format!("must be finite and >= 0, got {beta}")));
    }
    let before = equal_start_verdict(scenario, protocol, beta, beta)?;
    let swapped = scenario.with_swapped_a(lambda)?;
    let after = equal_start_verdict(&swapped, protocol, lambda * beta, beta)?;
    Ok(AttackRecord {
        protocol: protocol.name().to_string(),
        lambda,
        true_beta_a: beta,
        true_beta_c: lambda * beta,
        detected: before.reports_equal != after.reports_equal,
        before,
        after,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceProbe {
    pub lambda: f64,
    pub beta_a_inf: f64,
    pub beta_a_inf_swapped: f64,
    pub beta_b_inf: f64,
    pub beta_b_inf_swapped: f64,
    pub beta_a_inf_ratio: f64,
    pub beta_b_inf_delta: f64,
}

/// Runs a Hamiltonian-blind protocol on `(A, B)` and on `(Λ_A[A], B)` and
/// compares the fitted equilibrium temperatures.
pub fn lambda_a_covariance_probe(
    scenario: &ContactScenario,
    protocol: &dyn Protocol,
    beta_a0: f64,
    beta_b0: f64,
    lambda: f64,
) -> Result<CovarianceProbe> {
    scenario.validate()?;
    if protocol.hamiltonian_use() != HamiltonianUse::Blind {
        return Err(Error::Precondition(format!(
            "{} reads H_A; the probe needs a blind protocol",
            protocol.name()
        )));
    }
    let swapped = scenario.with_swapped_a(lambda)?;
    let plain = evaluate_cell(scenario, protocol, beta_a0, beta_b0)?;
    let attacked = evaluate_cell(&swapped, protocol, lambda * beta_a0, beta_b0)?;
    let read = |cell: &ContactCell| -> Result<(f64, f64)> {
        match (&cell.inconclusive, cell.beta_a_inf, cell.beta_b_inf) {
            (None, Some(a), Some(b)) => Ok((a, b)),
            (Some(why), ..) => Err(Error::Precondition(format!("no equilibrium: {why}"))),
            _ => Err(Error::Precondition("final state has no fitted temperature".into())),
        }
    };
    let (a, b) = read(&plain)?;
    let (a_s, b_s) = read(&attacked)?;
    if a == 0.0 {
        return Err(Error::DivisionHazard(0.0));
    }
    Ok(CovarianceProbe {
        lambda,
        beta_a_inf: a,
        beta_a_inf_swapped: a_s,
        beta_b_inf: b,
        beta_b_inf_swapped: b_s,
        beta_a_inf_ratio: a_s / a,
        beta_b_inf_delta: (b_s - b).abs(),
    })
}
