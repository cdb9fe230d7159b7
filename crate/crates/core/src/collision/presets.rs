use super::CollisionSetup;
use crate::error::Result;
use crate::linalg::{pauli_z, swap_operator, HermitianOperator};

/// Qubit partial-swap model: `H_S = e_s σ_z`, `H_A = e_a σ_z`,
/// `H_SA = J (I + σ_S·σ_A)/2 = J · SWAP`.
///
/// The local terms act during every collision. In the resonant case they commute
/// with the swap, so `U(δt) = e^{−iδt(H_S + H_A)} (cos(Jδt) I − i sin(Jδt) SWAP)`.
pub fn partial_swap_preset(e_s: f64, e_a: f64, j: f64, beta_a: f64, dt: f64) -> Result<CollisionSetup> {
    let h_s = HermitianOperator::new(pauli_z().scale(e_s))?;
    let h_a = HermitianOperator::new(pauli_z().scale(e_a))?;
    let h_sa = HermitianOperator::new(swap_operator(2).scale(j))?;
    CollisionSetup::new(h_s, h_a, h_sa, beta_a, dt)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::super::{collision_channel, fixed_point, iterate_collisions, liouvillian_series, FixedPointMode};
    use super::*;
    use crate::linalg::{max_abs_diff, Superoperator};
    use crate::random::{random_density_matrix, seeded};
    use crate::thermal::fit_temperature;

    #[test]
    fn quarter_period_replaces_state() {
        let s = partial_swap_preset(1.0, 1.0, 1.0, 0.8, PI / 2.0).unwrap();
        let phi = collision_channel(&s);
        let mut rng = seeded(500);
        for _ in 0..10 {
            let rho = random_density_matrix(&mut rng, 2);
            assert!(max_abs_diff(&phi.apply(rho.matrix()), s.ancilla_state().matrix()) <= 1e-12);
        }
    }

    #[test]
    fn half_period_is_free_rotation() {
        let s = partial_swap_preset(1.0, 1.0, 1.0, 0.8, PI).unwrap();
        let v = s.h_s().propagator(PI);
        let free = Superoperator::from_action(2, |x| &v * x * v.adjoint());
        let phi = collision_channel(&s);
        assert!(phi.max_abs_diff(&free) <= 1e-12);
        let r = fixed_point(&phi, FixedPointMode::Channel).unwrap();
        assert!(!r.unique);
        // Without local terms (e_s = e_a = 0) the channel is the identity.
        let bare = partial_swap_preset(0.0, 0.0, 1.0, 0.8, PI).unwrap();
        assert!(collision_channel(&bare).max_abs_diff(&Superoperator::identity(2)) <= 1e-12);
    }

    #[test]
    fn resonant_drives_to_ancilla_state() {
        let s = partial_swap_preset(1.0, 1.0, 1.0, 0.8, 0.3).unwrap();
        let r = fixed_point(&collision_channel(&s), FixedPointMode::Channel).unwrap();
        assert!(r.unique);
        assert!(max_abs_diff(r.state.matrix(), s.ancilla_state().matrix()) <= 1e-8);
        let fit = fit_temperature(&r.state, s.h_s()).unwrap();
        assert!((fit.beta_hat - 0.8).abs() < 1e-8);

        let rho0 = random_density_matrix(&mut seeded(501), 2);
        let traj = iterate_collisions(&s, &rho0, 600).unwrap();
        let dist: Vec<f64> = traj
            .states
            .iter()
            .map(|x| x.trace_distance(s.ancilla_state()))
            .collect();
        assert!(dist.windows(2).all(|w| w[1] <= w[0] + 1e-14));
        assert!(*dist.last().unwrap() < 1e-8);
    }

    #[test]
    fn detuned_fixed_point_rescales_temperature() {
        for dt in [0.01, 0.05] {
            let s = partial_swap_preset(2.0, 1.0, 1.0, 0.8, dt).unwrap();
            let r = fixed_point(&collision_channel(&s), FixedPointMode::Channel).unwrap();
            assert!(r.unique);
            let fit = fit_temperature(&r.state, s.h_s()).unwrap();
            assert!((2.0 * fit.beta_hat - 0.8).abs() < 1e-3, "beta_S = {}", fit.beta_hat);
        }
    }

    #[test]
    fn first_order_generator_fixes_ancilla_state() {
        let s = partial_swap_preset(1.0, 1.0, 1.0, 0.5, 0.05).unwrap();
        let series = liouvillian_series(&s);
        let r = fixed_point(&series.first_order(0.05), FixedPointMode::Generator).unwrap();
        assert!(r.unique);
        assert!(max_abs_diff(r.state.matrix(), s.ancilla_state().matrix()) <= 0.05 * 0.05);
    }
}
