use num_complex::Complex64;

use super::{collision_channel, CollisionSetup};
use crate::error::{Error, Result};
use crate::linalg::{commutator, partial_trace, tensor_product, Keep, Superoperator};

/// `φ_n[X] = (−i)ⁿ/n! · Tr_A(ad_Hⁿ(X ⊗ ρ_A))` for `n ∈ {1, 2, 3}`.
pub fn phi_series_term(setup: &CollisionSetup, order: usize) -> Result<Superoperator> {
    if !(1..=3).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let (ds, da) = (setup.system_dim(), setup.ancilla_dim());
    let h = setup.total_hamiltonian().matrix();
    let rho_a = setup.ancilla_state().matrix();
    let factorial = (1..=order).product::<usize>() as f64;
    let prefactor = Complex64::new(0.0, -1.0).powu(order as u32) / factorial;
    Ok(Superoperator::from_action(ds, |x| {
        let mut y = tensor_product(x, rho_a);
        for _ in 0..order {
            y = commutator(h, &y);
        }
        partial_trace(&y, (ds, da), Keep::Left)
            .expect("dimensions fixed by setup")
            .map(|z| z * prefactor)
    }))
}

/// `I + δt φ₁ + … + δtᵏ φ_k`.
pub fn series_partial_sum(terms: &[Superoperator], dt: f64) -> Superoperator {
    let dim = terms.first().map(|t| t.dim()).expect("at least one series term");
    let mut sum = Superoperator::identity(dim);
    let mut power = 1.0;
    for t in terms {
        power *= dt;
        sum = &sum + &t.scale(power);
    }
    sum
}

/// First three coefficients of `L_δt = L₀ + δt L₁ + δt² L₂ + …`.
#[derive(Debug, Clone)]
pub struct LiouvillianSeries {
    pub l0: Superoperator,
    pub l1: Superoperator,
    pub l2: Superoperator,
}

impl LiouvillianSeries {
    /// `L₀ + δt L₁ + δt² L₂`.
    pub fn truncated(&self, dt: f64) -> Superoperator {
        &(&self.l0 + &self.l1.scale(dt)) + &self.l2.scale(dt * dt)
    }

    /// `L₀ + δt L₁`.
    pub fn first_order(&self, dt: f64) -> Superoperator {
        &self.l0 + &self.l1.scale(dt)
    }
}

/// `L₀ = φ₁`, `L₁ = φ₂ − ½φ₁²`, `L₂ = φ₃ − ½(φ₁φ₂ + φ₂φ₁) + ⅓φ₁³`.
pub fn liouvillian_series(setup: &CollisionSetup) -> LiouvillianSeries {
    let p1 = phi_series_term(setup, 1).expect("order 1");
    let p2 = phi_series_term(setup, 2).expect("order 2");
    let p3 = phi_series_term(setup, 3).expect("order 3");
    let p1p1 = &p1 * &p1;
    let l1 = &p2 - &p1p1.scale(0.5);
    let mixed = &(&p1 * &p2) + &(&p2 * &p1);
    let l2 = &(&p3 - &mixed.scale(0.5)) + &(&p1p1 * &p1).scale(1.0 / 3.0);
    LiouvillianSeries { l0: p1, l1, l2 }
}

/// `L_δt = Log(φ(δt)) / δt` on the principal branch.
pub fn effective_liouvillian(setup: &CollisionSetup) -> Result<Superoperator> {
    Ok(collision_channel(setup).log()?.scale(1.0 / setup.dt()))
}

/// Max-norm changes of the series coefficients under `H_A → H_A/λ`, `β_E → λβ_E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncillaAudit {
    pub lambda: f64,
    pub delta_l0: f64,
    pub delta_l1: f64,
    pub delta_l2: f64,
}

/// Compares the series of `setup` with that of its ancilla-rescaled twin. The
/// ancilla state is the same in both, so any change measures dependence on
/// `H_A` beyond `ρ_A(0)`.
pub fn audit_ancilla_dependence(setup: &CollisionSetup, lambda: f64) -> Result<AncillaAudit> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be finite and > 0, got {lambda}")));
    }
    let twin = setup.with_ancilla(setup.h_a().scaled(1.0 / lambda)?, setup.beta_e() * lambda)?;
    let a = liouvillian_series(setup);
    let b = liouvillian_series(&twin);
    Ok(AncillaAudit {
        lambda,
        delta_l0: a.l0.max_abs_diff(&b.l0),
        delta_l1: a.l1.max_abs_diff(&b.l1),
        delta_l2: a.l2.max_abs_diff(&b.l2),
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::random_setup;
    use super::super::{fixed_point, FixedPointMode};
    use super::*;
    use crate::fit::{log_log_fit, log_space};
    use crate::linalg::{pauli_z, HermitianOperator};
    use crate::random::seeded;
    use proptest::prelude::*;

    fn decoupled(ds: usize, da: usize, seed: u64) -> CollisionSetup {
        let s = random_setup(&mut seeded(seed), ds, da, 0.2);
        CollisionSetup::new(
            s.h_s().clone(),
            s.h_a().clone(),
            HermitianOperator::zero(ds * da),
            0.9,
            0.2,
        )
        .unwrap()
    }

    #[test]
    fn order_out_of_range() {
        let s = decoupled(2, 2, 300);
        assert_eq!(phi_series_term(&s, 0).unwrap_err(), Error::UnsupportedOrder(0));
        assert_eq!(phi_series_term(&s, 4).unwrap_err(), Error::UnsupportedOrder(4));
    }

    #[test]
    fn decoupled_first_term_is_system_commutator() {
        let s = decoupled(3, 2, 301);
        let expected = Superoperator::commutator_generator(s.h_s().matrix());
        assert!(phi_series_term(&s, 1).unwrap().max_abs_diff(&expected) <= 1e-12);
    }

    #[test]
    fn decoupled_series_is_linear() {
        let s = decoupled(2, 3, 302);
        let series = liouvillian_series(&s);
        let gen = Superoperator::commutator_generator(s.h_s().matrix());
        assert!(series.l0.max_abs_diff(&gen) <= 1e-10);
        assert!(series.l1.max_norm() <= 1e-10);
        assert!(series.l2.max_norm() <= 1e-10);
        assert!(effective_liouvillian(&s).unwrap().max_abs_diff(&gen) <= 1e-10);
    }

    #[test]
    fn l0_is_first_term() {
        let s = random_setup(&mut seeded(303), 2, 2, 0.1);
        assert_eq!(liouvillian_series(&s).l0, phi_series_term(&s, 1).unwrap());
    }

    #[test]
    fn series_terms_match_finite_differences() {
        // Independent oracle: Taylor coefficients of the exact channel by
        // central differences in δt around 0 (φ(−δt) from the reversed unitary).
        let s = random_setup(&mut seeded(304), 2, 2, 1.0);
        let h = 1e-2;
        let at = |t: f64| -> Superoperator {
            let u = s.total_hamiltonian().propagator(t);
            Superoperator::from_action(2, |x| {
                let joint = &u * tensor_product(x, s.ancilla_state().matrix()) * u.adjoint();
                partial_trace(&joint, (2, 2), Keep::Left).unwrap()
            })
        };
        let (m2, m1, p1, p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
        let d1 = &(&p1.scale(8.0) - &m1.scale(8.0)) - &(&p2 - &m2);
        let d1 = d1.scale(1.0 / (12.0 * h));
        assert!(d1.max_abs_diff(&phi_series_term(&s, 1).unwrap()) <= 1e-6);
        let id = at(0.0);
        // φ''(0) = 2 φ₂.
        let d2 = &(&(&p1 + &m1).scale(16.0) - &(&p2 + &m2)) - &id.scale(30.0);
        let d2 = d2.scale(0.5 / (12.0 * h * h));
        assert!(d2.max_abs_diff(&phi_series_term(&s, 2).unwrap()) <= 1e-5);
    }

    fn slope_of(errors: &[f64], dts: &[f64]) -> f64 {
        log_log_fit(dts, errors).unwrap().slope
    }

    #[test]
    fn series_remainders_scale() {
        let dts = log_space(1e-3, 1e-1, 7);
        let mut rng = seeded(305);
        for _ in 0..5 {
            let base = random_setup(&mut rng, 2, 2, 0.1);
            let norm = base.total_hamiltonian().norm();
            let terms: Vec<_> = (1..=3).map(|k| phi_series_term(&base, k).unwrap()).collect();
            let series = liouvillian_series(&base);
            let mut rem = vec![vec![]; 4];
            for &dt in &dts {
                let setup = base.with_dt(dt / norm).unwrap();
                let phi = collision_channel(&setup);
                for k in 1..=3 {
                    rem[k - 1].push(phi.max_abs_diff(&series_partial_sum(&terms[..k], dt / norm)));
                }
                let l = effective_liouvillian(&setup).unwrap();
                rem[3].push(l.max_abs_diff(&series.truncated(dt / norm)));
            }
            for (k, expected) in [(0, 2.0), (1, 3.0), (2, 4.0)] {
                let sl = slope_of(&rem[k], &dts);
                assert!((sl - expected).abs() <= 0.2, "order {} slope {sl}", k + 1);
            }
            let sl = slope_of(&rem[3], &dts);
            assert!((sl - 3.0).abs() <= 0.3, "liouvillian slope {sl}");
        }
    }

    #[test]
    fn generators_have_traceless_output() {
        let s = random_setup(&mut seeded(306), 3, 2, 0.1);
        let series = liouvillian_series(&s);
        for l in [&series.l0, &series.l1, &series.l2] {
            assert!(l.traceless_output_error() <= 1e-10);
        }
    }

    #[test]
    fn audit_trivial_and_generic() {
        let s = random_setup(&mut seeded(307), 2, 2, 0.1);
        let same = audit_ancilla_dependence(&s, 1.0).unwrap();
        assert_eq!((same.delta_l0, same.delta_l1, same.delta_l2), (0.0, 0.0, 0.0));
        let a = audit_ancilla_dependence(&s, 2.5).unwrap();
        assert!(a.delta_l0 <= 1e-10 && a.delta_l1 <= 1e-10, "{a:?}");
        assert!(a.delta_l2 > 1e-4, "{a:?}");
        assert!(audit_ancilla_dependence(&s, 0.0).is_err());
    }

    #[test]
    fn audit_vanishes_without_sandwich() {
        // σ_z ⊗ σ_z coupling commutes with I ⊗ σ_z.
        let hz = HermitianOperator::new(pauli_z().scale(0.7)).unwrap();
        let hs = HermitianOperator::new(crate::linalg::pauli_x().scale(0.4)).unwrap();
        let hsa = HermitianOperator::new(tensor_product(&pauli_z(), &pauli_z()).scale(0.9)).unwrap();
        let s = CollisionSetup::new(hs, hz, hsa, 0.6, 0.1).unwrap();
        let a = audit_ancilla_dependence(&s, 2.5).unwrap();
        assert!(
            a.delta_l0 <= 1e-10 && a.delta_l1 <= 1e-10 && a.delta_l2 <= 1e-10,
            "{a:?}"
        );
    }

    #[test]
    fn second_order_depends_on_system_hamiltonian() {
        let mut rng = seeded(308);
        for _ in 0..10 {
            let s = random_setup(&mut rng, 2, 2, 0.1);
            let t = s.with_system_hamiltonian(s.h_s().scaled(1.0 / 2.0).unwrap()).unwrap();
            let (a, b) = (liouvillian_series(&s), liouvillian_series(&t));
            // L₀ moves by exactly the local commutator change.
            let local = Superoperator::commutator_generator(&(s.h_s().matrix() - t.h_s().matrix()));
            assert!((&a.l0 - &b.l0).max_abs_diff(&local) <= 1e-10);
            // L₁ carries no H_S; L₂ does.
            assert!(a.l1.max_abs_diff(&b.l1) <= 1e-10);
            assert!(a.l2.max_abs_diff(&b.l2) > 1e-4);
        }
    }

    #[test]
    fn higher_order_fixed_point_is_perturbatively_close() {
        let mut rng = seeded(309);
        let base = random_setup(&mut rng, 2, 2, 0.1);
        let series = liouvillian_series(&base);
        let dist = |dt: f64| {
            let exact = fixed_point(&collision_channel(&base.with_dt(dt).unwrap()), FixedPointMode::Channel).unwrap();
            let approx = fixed_point(&series.first_order(dt), FixedPointMode::Generator).unwrap();
            assert!(exact.unique && approx.unique);
            crate::linalg::max_abs_diff(exact.state.matrix(), approx.state.matrix())
        };
        let (d1, d2, d3) = (dist(0.04), dist(0.02), dist(0.01));
        let c1 = d1 / 0.04f64.powi(2);
        let c3 = d3 / 0.01f64.powi(2);
        assert!((d1 / d2) > 3.0 && (d1 / d2) < 5.0, "ratio {}", d1 / d2);
        assert!((d2 / d3) > 3.0 && (d2 / d3) < 5.0, "ratio {}", d2 / d3);
        assert!((c1 / c3 - 1.0).abs() < 0.3);
    }

    #[test]
    fn log_exp_duality() {
        let mut rng = seeded(310);
        for _ in 0..20 {
            let s = random_setup(&mut rng, 2, 2, 1.0);
            let s = s.with_dt(0.5 / s.total_hamiltonian().norm()).unwrap();
            let l = effective_liouvillian(&s).unwrap();
            assert!(l.exp(s.dt()).max_abs_diff(&collision_channel(&s)) <= 1e-9);
        }
    }

    #[test]
    fn effective_liouvillian_annihilates_fixed_point() {
        let s = random_setup(&mut seeded(311), 2, 3, 0.2);
        let fp = fixed_point(&collision_channel(&s), FixedPointMode::Channel).unwrap();
        let l = effective_liouvillian(&s).unwrap();
        assert!(crate::linalg::max_norm(&l.apply(fp.state.matrix())) <= 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn low_orders_are_blind_to_ancilla_scale(seed in any::<u64>(), lambda in 0.2f64..6.0) {
            let s = random_setup(&mut seeded(seed), 2, 2, 0.1);
            let a = audit_ancilla_dependence(&s, lambda).unwrap();
            prop_assert!(a.delta_l0 <= 1e-10 && a.delta_l1 <= 1e-10, "{:?}", a);
        }
    }
}
