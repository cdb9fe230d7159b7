//! Gibbs states, the Loki rescaling and temperature read-out from populations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::linalg::{DensityMatrix, HermitianOperator};

/// Default joint threshold on fit residual and coherences.
pub const DEFAULT_THERMALITY_TOL: f64 = 1e-6;
/// Eigenvalues closer than this are treated as one degenerate level.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Populations at or below this are left out of the fit.
pub const POPULATION_FLOOR: f64 = 1e-300;
/// Smallest admissible log-population gap in a spacing-ratio denominator.
pub const SPACING_DENOMINATOR_TOL: f64 = 1e-10;

/// Hamiltonian and inverse temperature.
#[derive(Debug, Clone)]
pub struct ThermalSpec {
    hamiltonian: HermitianOperator,
    beta: f64,
}

impl ThermalSpec {
    pub fn new(hamiltonian: HermitianOperator, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::param("beta", format!("must be finite and >= 0, got {beta}")));
        }
        Ok(Self { hamiltonian, beta })
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `exp(−βH)/Z`, with the ground energy shifted out before exponentiating.
pub fn gibbs_state(spec: &ThermalSpec) -> DensityMatrix {
    gibbs(&spec.hamiltonian, spec.beta)
}

pub(crate) fn gibbs(h: &HermitianOperator, beta: f64) -> DensityMatrix {
    let e0 = h.eigenvalues().first().copied().unwrap_or(0.0);
    let z: f64 = h.eigenvalues().iter().map(|e| (-beta * (e - e0)).exp()).sum();
    let m = h.map_spectrum(|e| Complex64::new((-beta * (e - e0)).exp() / z, 0.0));
    DensityMatrix::new(m).expect("Gibbs state satisfies density-matrix invariants")
}

/// `(H, β) ↦ (H/λ, λβ)`; leaves the Gibbs state unchanged.
pub fn loki_transform(spec: &ThermalSpec, lambda: f64) -> Result<ThermalSpec> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be finite and > 0, got {lambda}")));
    }
    Ok(ThermalSpec {
        hamiltonian: spec.hamiltonian.scaled(1.0 / lambda)?,
        beta: spec.beta * lambda,
    })
}

/// Outcome of a detailed-balance temperature fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureFit {
    pub beta_hat: f64,
    /// Largest deviation of `−ln p` from the fitted line.
    pub residual: f64,
    /// Largest coherence between distinct energy levels.
    pub offdiag_norm: f64,
}

impl TemperatureFit {
    pub fn is_thermal(&self, tol: f64) -> bool {
        self.residual <= tol && self.offdiag_norm <= tol
    }
}

/// Index ranges of eigenvalues that coincide within [`DEGENERACY_TOL`].
fn degenerate_blocks(energies: &[f64]) -> Vec<std::ops::Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for k in 1..=energies.len() {
        if k == energies.len() || energies[k] - energies[k - 1] > DEGENERACY_TOL {
            blocks.push(start..k);
            start = k;
        }
    }
    blocks
}

/// Least-squares fit of `−ln⟨n|ρ|n⟩` against `E_n`.
///
/// Degenerate levels are merged (populations averaged) and coherences inside a
/// degenerate block are ignored. A negative `beta_hat` signals inversion.
pub fn fit_temperature(rho: &DensityMatrix, h: &HermitianOperator) -> Result<TemperatureFit> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            actual: rho.dim(),
        });
    }
    let energies = h.eigenvalues();
    let blocks = degenerate_blocks(energies);
    if blocks.len() < 2 {
        return Err(Error::FullyDegenerate);
    }
    let r = h.in_eigenbasis(rho.matrix());

    let mut xs = Vec::with_capacity(blocks.len());
    let mut ys = Vec::with_capacity(blocks.len());
    for b in &blocks {
        let size = b.len() as f64;
        let p = b.clone().map(|k| r[(k, k)].re).sum::<f64>() / size;
        if p > POPULATION_FLOOR {
            xs.push(b.clone().map(|k| energies[k]).sum::<f64>() / size);
            ys.push(-p.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientSupport);
    }
    let fit = linear_fit(&xs, &ys).ok_or(Error::InsufficientSupport)?;

    let mut block_of = vec![0; energies.len()];
    for (bi, b) in blocks.iter().enumerate() {
        for k in b.clone() {
            block_of[k] = bi;
        }
    }
    let mut offdiag_norm: f64 = 0.0;
    for i in 0..r.nrows() {
        for j in 0..r.ncols() {
            if block_of[i] != block_of[j] {
                offdiag_norm = offdiag_norm.max(r[(i, j)].norm());
            }
        }
    }

    Ok(TemperatureFit {
        beta_hat: fit.slope,
        residual: fit.max_residual,
        offdiag_norm,
    })
}

/// `(E_n − E_m)/(E_j − E_k)` read off the state alone.
///
/// Indices label eigenvectors of `rho` ordered by decreasing population, so for
/// a Gibbs state at positive temperature index 0 is the ground level.
pub fn eigenvalue_spacing_ratios(rho: &DensityMatrix, indices: (usize, usize, usize, usize)) -> Result<f64> {
    let (values, _) = rho.spectrum();
    let d = values.len();
    let (n, m, j, k) = indices;
    if [n, m, j, k].iter().any(|&i| i >= d) {
        return Err(Error::param("indices", format!("must be < {d}")));
    }
    let log_pop = |i: usize| -> Result<f64> {
        let p = values[d - 1 - i];
        if p > POPULATION_FLOOR {
            Ok(p.ln())
        } else {
            Err(Error::InsufficientSupport)
        }
    };
    let den = log_pop(j)? - log_pop(k)?;
    if den.abs() < SPACING_DENOMINATOR_TOL {
        return Err(Error::DivisionHazard(den));
    }
    Ok((log_pop(n)? - log_pop(m)?) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag, max_abs_diff, pauli_z, trace, ComplexMatrix, DensityMatrix};
    use crate::random::{random_hermitian, seeded};
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn h(m: ComplexMatrix) -> HermitianOperator {
        HermitianOperator::new(m).unwrap()
    }

    #[test]
    fn infinite_temperature_is_maximally_mixed() {
        let mut rng = seeded(100);
        let spec = ThermalSpec::new(random_hermitian(&mut rng, 4), 0.0).unwrap();
        let rho = gibbs_state(&spec);
        assert!(max_abs_diff(rho.matrix(), DensityMatrix::maximally_mixed(4).matrix()) < 1e-15);
    }

    #[test]
    fn qubit_population_ratio() {
        let spec = ThermalSpec::new(h(pauli_z()), 1.0).unwrap();
        let rho = gibbs_state(&spec);
        // +1 eigenstate is index 0 of σ_z.
        let ratio = rho.matrix()[(0, 0)].re / rho.matrix()[(1, 1)].re;
        assert!((ratio - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_beta_and_lambda() {
        assert!(ThermalSpec::new(h(pauli_z()), -0.1).is_err());
        assert!(ThermalSpec::new(h(pauli_z()), f64::NAN).is_err());
        let spec = ThermalSpec::new(h(pauli_z()), 1.0).unwrap();
        assert!(loki_transform(&spec, 0.0).is_err());
        assert!(loki_transform(&spec, -2.0).is_err());
    }

    #[test]
    fn overflow_safe_at_large_beta() {
        let spec = ThermalSpec::new(h(diag(&[1000.0, 1001.0, 1500.0])), 50.0).unwrap();
        let rho = gibbs_state(&spec);
        assert!((trace(rho.matrix()).re - 1.0).abs() < 1e-12);
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-20);
    }

    #[test]
    fn loki_keeps_gibbs_state() {
        let mut rng = seeded(101);
        let spec = ThermalSpec::new(random_hermitian(&mut rng, 3), 0.7).unwrap();
        let moved = loki_transform(&spec, 3.2).unwrap();
        assert!((moved.beta() - 0.7 * 3.2).abs() < 1e-15);
        assert!(max_abs_diff(gibbs_state(&moved).matrix(), gibbs_state(&spec).matrix()) <= 1e-12);
        let same = loki_transform(&spec, 1.0).unwrap();
        assert_eq!(same.hamiltonian().matrix(), spec.hamiltonian().matrix());
        assert_eq!(same.beta(), spec.beta());
    }

    #[test]
    fn energy_expectation_scales_inversely() {
        let mut rng = seeded(102);
        let spec = ThermalSpec::new(random_hermitian(&mut rng, 4), 0.9).unwrap();
        let moved = loki_transform(&spec, 2.0).unwrap();
        let rho = gibbs_state(&spec);
        let e = trace(&(spec.hamiltonian().matrix() * rho.matrix())).re;
        let e2 = trace(&(moved.hamiltonian().matrix() * rho.matrix())).re;
        assert!((e2 - e / 2.0).abs() < 1e-12);
    }

    #[test]
    fn fit_round_trip() {
        let mut rng = seeded(103);
        let ham = random_hermitian(&mut rng, 5);
        let rho = gibbs_state(&ThermalSpec::new(ham.clone(), 0.9).unwrap());
        let fit = fit_temperature(&rho, &ham).unwrap();
        assert!((fit.beta_hat - 0.9).abs() < 1e-9);
        assert!(fit.residual <= 1e-10);
        assert!(fit.is_thermal(DEFAULT_THERMALITY_TOL));
    }

    #[test]
    fn fit_infinite_temperature() {
        let ham = h(diag(&[0.0, 0.4, 1.3]));
        let fit = fit_temperature(&DensityMatrix::maximally_mixed(3), &ham).unwrap();
        assert!(fit.beta_hat.abs() < 1e-10);
    }

    #[test]
    fn fit_flags_coherent_mixture() {
        let zero = DensityMatrix::pure(&DVector::from_vec(vec![c(1.0), c(0.0)])).unwrap();
        let plus = DensityMatrix::pure(&DVector::from_vec(vec![c(1.0), c(1.0)])).unwrap();
        let rho = plus.mix(&zero, 0.3).unwrap();
        let fit = fit_temperature(&rho, &h(pauli_z())).unwrap();
        assert!(fit.residual > 1e-3 || fit.offdiag_norm > 1e-3);
        assert!(!fit.is_thermal(DEFAULT_THERMALITY_TOL));
    }

    #[test]
    fn fit_reports_inversion() {
        let rho = DensityMatrix::new(diag(&[0.2, 0.8])).unwrap();
        let fit = fit_temperature(&rho, &h(diag(&[0.0, 1.0]))).unwrap();
        assert!(fit.beta_hat < 0.0);
    }

    #[test]
    fn fit_errors() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert_eq!(
            fit_temperature(&rho, &h(diag(&[1.0, 1.0]))),
            Err(Error::FullyDegenerate)
        );
        let pure = DensityMatrix::new(diag(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(
            fit_temperature(&pure, &h(diag(&[0.0, 1.0, 2.0]))),
            Err(Error::InsufficientSupport)
        );
    }

    #[test]
    fn degenerate_block_is_averaged() {
        // Levels 0, 0, 1 at β = 2: any basis of the degenerate pair is thermal.
        let ham = h(diag(&[0.0, 0.0, 1.0]));
        let rho = gibbs_state(&ThermalSpec::new(ham.clone(), 2.0).unwrap());
        let fit = fit_temperature(&rho, &ham).unwrap();
        assert!((fit.beta_hat - 2.0).abs() < 1e-10);
        assert!(fit.offdiag_norm < 1e-15);
    }

    #[test]
    fn spacing_ratio_examples() {
        let spec = ThermalSpec::new(h(diag(&[0.0, 1.0, 3.0])), 1.0).unwrap();
        let rho = gibbs_state(&spec);
        let r = eigenvalue_spacing_ratios(&rho, (1, 0, 2, 0)).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-12);
        assert!((eigenvalue_spacing_ratios(&rho, (2, 1, 2, 1)).unwrap() - 1.0).abs() < 1e-15);
        for lambda in [0.3, 2.0, 7.5] {
            let moved = gibbs_state(&loki_transform(&spec, lambda).unwrap());
            let rl = eigenvalue_spacing_ratios(&moved, (1, 0, 2, 0)).unwrap();
            assert!((rl - r).abs() < 1e-10);
        }
    }

    #[test]
    fn spacing_ratio_division_hazard() {
        let rho = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            eigenvalue_spacing_ratios(&rho, (1, 0, 2, 0)),
            Err(Error::DivisionHazard(_))
        ));
        assert!(eigenvalue_spacing_ratios(&rho, (3, 0, 1, 0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn gibbs_loki_invariance(seed in any::<u64>(), dim in 2usize..=6, beta in 0.0f64..5.0, lambda in 0.05f64..20.0) {
            let ham = random_hermitian(&mut seeded(seed), dim);
            let spec = ThermalSpec::new(ham, beta).unwrap();
            let moved = loki_transform(&spec, lambda).unwrap();
            prop_assert!(max_abs_diff(gibbs_state(&moved).matrix(), gibbs_state(&spec).matrix()) <= 1e-12);
        }

        #[test]
        fn fit_round_trip_any_beta(energies in proptest::collection::vec(-3.0f64..3.0, 2..=6), beta in 0.0f64..=20.0) {
            // Diagonal H keeps populations exact down to e^{-120}.
            prop_assume!(energies.iter().any(|e| (e - energies[0]).abs() > 1e-3));
            let ham = h(diag(&energies));
            let rho = gibbs_state(&ThermalSpec::new(ham.clone(), beta).unwrap());
            let fit = fit_temperature(&rho, &ham).unwrap();
            prop_assert!((fit.beta_hat - beta).abs() <= 1e-9, "beta_hat {} vs {}", fit.beta_hat, beta);
        }

        #[test]
        fn fit_round_trip_dense(seed in any::<u64>(), dim in 2usize..=6, beta in 0.0f64..=5.0) {
            let raw = random_hermitian(&mut seeded(seed), dim);
            let ham = raw.scaled(1.0 / raw.norm()).unwrap();
            let rho = gibbs_state(&ThermalSpec::new(ham.clone(), beta).unwrap());
            let fit = fit_temperature(&rho, &ham).unwrap();
            prop_assert!((fit.beta_hat - beta).abs() <= 1e-9, "beta_hat {} vs {}", fit.beta_hat, beta);
        }

        #[test]
        fn fitted_beta_rescales_with_hamiltonian(seed in any::<u64>(), beta in 0.1f64..3.0, lambda in 0.2f64..5.0) {
            let ham = random_hermitian(&mut seeded(seed), 3);
            let rho = gibbs_state(&ThermalSpec::new(ham.clone(), beta).unwrap());
            let fit = fit_temperature(&rho, &ham.scaled(1.0 / lambda).unwrap()).unwrap();
            prop_assert!((fit.beta_hat - lambda * beta).abs() <= 1e-9);
        }

        #[test]
        fn spacing_ratios_match_spectrum(seed in any::<u64>(), beta in 0.2f64..2.0) {
            let ham = random_hermitian(&mut seeded(seed), 4);
            let e = ham.eigenvalues().to_vec();
            let rho = gibbs_state(&ThermalSpec::new(ham, beta).unwrap());
            let got = eigenvalue_spacing_ratios(&rho, (3, 1, 2, 0)).unwrap();
            let want = (e[3] - e[1]) / (e[2] - e[0]);
            prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
    }
}
