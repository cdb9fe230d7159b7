//! Repeated-interaction (collision) dynamics of a system bombarded by identical
//! thermal ancillas.
//!
//! One collision acts as `φ(δt)[ρ] = Tr_A(U (ρ ⊗ ρ_A) U†)` with
//! `U = exp(−iδt H)` and `H = H_S ⊗ I + I ⊗ H_A + H_SA`.

mod fixed_point;
mod presets;
mod series;

pub use fixed_point::{fixed_point, FixedPointMode, FixedPointReport, FIXED_SPACE_TOL};
pub use presets::partial_swap_preset;
pub use series::{
    audit_ancilla_dependence, effective_liouvillian, liouvillian_series, phi_series_term, series_partial_sum,
    AncillaAudit, LiouvillianSeries,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{identity, tensor_product, ComplexMatrix, DensityMatrix, HermitianOperator, Superoperator};
use crate::random::random_hermitian;
use crate::thermal::gibbs;

/// Trajectories longer than this are subsampled.
pub const MAX_STORED_STATES: usize = 100_000;
/// Eigenvalues of a propagated state down to `-CLIP` are treated as round-off.
pub(crate) const CLIP: f64 = 1e-10;

/// One bombardment scenario: `(H_S, H_A, H_SA, β_E, δt)`.
#[derive(Debug, Clone)]
pub struct CollisionSetup {
    h_s: HermitianOperator,
    h_a: HermitianOperator,
    h_sa: HermitianOperator,
    beta_e: f64,
    dt: f64,
    rho_a: DensityMatrix,
    h_total: HermitianOperator,
}

impl CollisionSetup {
    pub fn new(
        h_s: HermitianOperator,
        h_a: HermitianOperator,
        h_sa: HermitianOperator,
        beta_e: f64,
        dt: f64,
    ) -> Result<Self> {
        let (ds, da) = (h_s.dim(), h_a.dim());
        if h_sa.dim() != ds * da {
            return Err(Error::DimensionMismatch {
                expected: ds * da,
                actual: h_sa.dim(),
            });
        }
        if !(beta_e.is_finite() && beta_e >= 0.0) {
            return Err(Error::param("beta_e", format!("must be finite and >= 0, got {beta_e}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")));
        }
        let rho_a = gibbs(&h_a, beta_e);
        let local = tensor_product(h_s.matrix(), &identity(da)) + tensor_product(&identity(ds), h_a.matrix());
        let h_total = HermitianOperator::new(local + h_sa.matrix())?;
        Ok(Self {
            h_s,
            h_a,
            h_sa,
            beta_e,
            dt,
            rho_a,
            h_total,
        })
    }

    /// GUE-like Hamiltonians and `β_E` uniform in `[0.3, 1.5)`.
    pub fn random(rng: &mut impl rand::Rng, ds: usize, da: usize, dt: f64) -> Result<Self> {
        let h_s = random_hermitian(rng, ds);
        let h_a = random_hermitian(rng, da);
        let h_sa = random_hermitian(rng, ds * da);
        let beta = rng.random_range(0.3..1.5);
        Self::new(h_s, h_a, h_sa, beta, dt)
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")));
        }
        Ok(Self { dt, ..self.clone() })
    }

    /// Same setup with a different ancilla Hamiltonian and temperature.
    pub fn with_ancilla(&self, h_a: HermitianOperator, beta_e: f64) -> Result<Self> {
        Self::new(self.h_s.clone(), h_a, self.h_sa.clone(), beta_e, self.dt)
    }

    pub fn with_system_hamiltonian(&self, h_s: HermitianOperator) -> Result<Self> {
        Self::new(h_s, self.h_a.clone(), self.h_sa.clone(), self.beta_e, self.dt)
    }

    pub fn h_s(&self) -> &HermitianOperator {
        &self.h_s
    }

    pub fn h_a(&self) -> &HermitianOperator {
        &self.h_a
    }

    pub fn h_sa(&self) -> &HermitianOperator {
        &self.h_sa
    }

    pub fn beta_e(&self) -> f64 {
        self.beta_e
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `ρ_A(0) = exp(−β_E H_A)/Z`.
    pub fn ancilla_state(&self) -> &DensityMatrix {
        &self.rho_a
    }

    /// `H_S ⊗ I + I ⊗ H_A + H_SA`.
    pub fn total_hamiltonian(&self) -> &HermitianOperator {
        &self.h_total
    }

    pub fn system_dim(&self) -> usize {
        self.h_s.dim()
    }

    pub fn ancilla_dim(&self) -> usize {
        self.h_a.dim()
    }
}

/// Exact one-collision channel `φ(δt)` on the system.
pub fn collision_channel(setup: &CollisionSetup) -> Superoperator {
    let (ds, da) = (setup.system_dim(), setup.ancilla_dim());
    let u = setup.h_total.propagator(setup.dt);
    let (pops, basis) = setup.rho_a.spectrum();

    // K_{jk} = √p_k (I ⊗ ⟨j|) U (I ⊗ |a_k⟩)
    let mut kraus = Vec::with_capacity(da * da);
    for (k, &p) in pops.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let amp = p.sqrt();
        let a = basis.column(k);
        for j in 0..da {
            let kj = ComplexMatrix::from_fn(ds, ds, |s, t| {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..da {
                    acc += u[(s * da + j, t * da + b)] * a[b];
                }
                acc * amp
            });
            kraus.push(kj);
        }
    }
    Superoperator::from_kraus(ds, kraus.iter())
}

/// States visited by repeated collisions.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Number of collisions between stored states.
    pub stride: usize,
    /// `states[i]` is the state after `i · stride` collisions; the final state
    /// (after `n` collisions) is always stored last.
    pub states: Vec<DensityMatrix>,
    pub collisions: usize,
}

impl Trajectory {
    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// Applies `φ(δt)` `n` times.
///
/// All `n + 1` states are kept for `n ≤ MAX_STORED_STATES`; beyond that every
/// `⌈n / MAX_STORED_STATES⌉`-th state is kept, plus the final one.
pub fn iterate_collisions(setup: &CollisionSetup, rho0: &DensityMatrix, n: usize) -> Result<Trajectory> {
    if rho0.dim() != setup.system_dim() {
        return Err(Error::DimensionMismatch {
            expected: setup.system_dim(),
            actual: rho0.dim(),
        });
    }
    let channel = collision_channel(setup);
    iterate_channel(&channel, rho0, n)
}

pub(crate) fn iterate_channel(channel: &Superoperator, rho0: &DensityMatrix, n: usize) -> Result<Trajectory> {
    let stride = n.div_ceil(MAX_STORED_STATES).max(1);
    let mut states = Vec::with_capacity(n / stride + 2);
    states.push(rho0.clone());
    let mut current = rho0.clone();
    for step in 1..=n {
        current = DensityMatrix::from_numerical(channel.apply(current.matrix()), CLIP)?;
        if step % stride == 0 || step == n {
            states.push(current.clone());
        }
    }
    Ok(Trajectory {
        stride,
        states,
        collisions: n,
    })
}


#[cfg(test)]
mod tests {
    use super::test_support::random_setup;
    use super::*;
    use crate::linalg::{max_abs_diff, partial_trace, Keep};
    use crate::random::{random_density_matrix, seeded};
    use crate::thermal::gibbs;

    fn decoupled(setup: &CollisionSetup) -> CollisionSetup {
        let d = setup.system_dim() * setup.ancilla_dim();
        CollisionSetup::new(
            setup.h_s().clone(),
            setup.h_a().clone(),
            HermitianOperator::zero(d),
            setup.beta_e(),
            setup.dt(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut rng = seeded(200);
        let s = random_setup(&mut rng, 2, 2, 0.1);
        assert!(matches!(
            CollisionSetup::new(s.h_s().clone(), s.h_a().clone(), HermitianOperator::zero(6), 1.0, 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(s.with_dt(0.0).is_err());
        assert!(s.with_ancilla(s.h_a().clone(), -1.0).is_err());
    }

    #[test]
    fn channel_matches_direct_partial_trace() {
        let mut rng = seeded(201);
        for (ds, da) in [(2, 2), (2, 3), (3, 2)] {
            let setup = random_setup(&mut rng, ds, da, 0.37);
            let u = setup.total_hamiltonian().propagator(setup.dt());
            let oracle = Superoperator::from_action(ds, |x| {
                let joint = &u * tensor_product(x, setup.ancilla_state().matrix()) * u.adjoint();
                partial_trace(&joint, (ds, da), Keep::Left).unwrap()
            });
            assert!(collision_channel(&setup).max_abs_diff(&oracle) <= 1e-13);
        }
    }

    #[test]
    fn decoupled_channel_is_free_rotation() {
        let mut rng = seeded(202);
        let setup = decoupled(&random_setup(&mut rng, 3, 2, 0.4));
        let v = setup.h_s().propagator(setup.dt());
        let expected = Superoperator::from_action(3, |x| &v * x * v.adjoint());
        assert!(collision_channel(&setup).max_abs_diff(&expected) <= 1e-13);
    }

    #[test]
    fn channels_are_cptp() {
        let mut rng = seeded(203);
        for k in 0..100 {
            let dims = [(2, 2), (2, 3), (3, 2)][k % 3];
            let dt = rng.random_range(0.01..2.0);
            let setup = random_setup(&mut rng, dims.0, dims.1, dt);
            let phi = collision_channel(&setup);
            assert!(phi.min_choi_eigenvalue() >= -1e-10);
            assert!(phi.trace_preservation_error() <= 1e-10);
        }
    }

    #[test]
    fn empty_trajectory() {
        let mut rng = seeded(204);
        let setup = random_setup(&mut rng, 2, 2, 0.1);
        let rho = random_density_matrix(&mut rng, 2);
        let traj = iterate_collisions(&setup, &rho, 0).unwrap();
        assert_eq!(traj.states.len(), 1);
        assert_eq!(traj.states[0].matrix(), rho.matrix());
    }

    #[test]
    fn free_gibbs_state_is_stationary() {
        let mut rng = seeded(205);
        let setup = decoupled(&random_setup(&mut rng, 3, 2, 0.3));
        let rho = gibbs(setup.h_s(), 0.8);
        let traj = iterate_collisions(&setup, &rho, 200).unwrap();
        assert_eq!(traj.states.len(), 201);
        for s in &traj.states {
            assert!(max_abs_diff(s.matrix(), rho.matrix()) <= 1e-12);
        }
    }

    #[test]
    fn long_trajectories_are_strided() {
        let mut rng = seeded(206);
        let setup = random_setup(&mut rng, 2, 2, 0.05);
        let rho = random_density_matrix(&mut rng, 2);
        let traj = iterate_collisions(&setup, &rho, 250_001).unwrap();
        assert_eq!(traj.stride, 3);
        assert!(traj.states.len() <= MAX_STORED_STATES + 2);
        assert_eq!(traj.collisions, 250_001);
        let direct = collision_channel(&setup);
        let mut rho5 = rho.matrix().clone();
        for _ in 0..6 {
            rho5 = direct.apply(&rho5);
        }
        assert!(max_abs_diff(traj.states[2].matrix(), &rho5) <= 1e-12);
    }

    use rand::Rng;
}
