use serde_json::json;

use lokilab::collision::{
    audit_ancilla_dependence, collision_channel, effective_liouvillian, fixed_point, iterate_collisions,
    liouvillian_series, partial_swap_preset, phi_series_term, series_partial_sum, CollisionSetup, FixedPointMode,
};
use lokilab::contact::{
    bundled_protocols, check_thermal_contact, lambda_a_covariance_probe, loki_attack, BareSwap, ContactScenario,
    HamiltonianUse, PartialSwapCollision, Protocol, Replacer, TunedReservoir,
};
use lokilab::fit::{log_log_fit, log_space};
use lokilab::gaussian::{
    beta_of_nu, extrapolated_fixed_point, fock_cross_check, gaussian_contact_check, nu_of_beta, predicted_nu_inf,
    CouplingMatrix, GaussianContactSpec,
};
use lokilab::linalg::{max_abs_diff, pauli_z};
use lokilab::metrology::{fisher_scan, pair_fisher, split_strategy_factor, PairModel};
use lokilab::random::{instance_rng, random_hermitian};
use lokilab::thermal::{fit_temperature, gibbs_state, loki_transform, ThermalSpec};
use lokilab::timescale::air_estimate;
use lokilab::HermitianOperator;
use rand::Rng;

use crate::config::{Command, ExperimentConfig, SchemaError};
use crate::output::{Cell, Table};
use crate::svg::{Plot, Series};
use crate::CliError;

/// What a command produced before anything touches the disk.
#[derive(Debug, Clone)]
pub struct Report {
    pub table: Table,
    pub results: serde_json::Value,
    pub pass: Option<bool>,
    pub plot: Option<Plot>,
}

fn lib(module: &'static str) -> impl Fn(lokilab::Error) -> CliError {
    move |source| CliError::Numerical { module, source }
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(SchemaError(msg.into()))
}

pub fn dispatch(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    match cfg.command {
        Command::Audit => match cfg.choice("target") {
            "gibbs" => audit_gibbs(cfg),
            _ => audit_ancilla(cfg),
        },
        Command::FisherScan => fisher(cfg),
        Command::PartialSwap => partial_swap(cfg),
        Command::GaussianFp => gaussian(cfg),
        Command::CheckContact => check_contact(cfg),
        Command::LokiAttack => attack(cfg),
        Command::AirEstimate => air(cfg),
        Command::Liouvillian => liouvillian(cfg),
    }
}

fn audit_ancilla(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let n = cfg.count("instances", 1)?;
    let (ds, da) = (cfg.count("ds", 1)?, cfg.count("da", 1)?);
    let lambda = cfg.real("lambda");
    let mut table = Table::new(vec!["instance", "lambda", "delta_l0", "delta_l1", "delta_l2"]);
    let (mut l0, mut l1, mut l2_min) = (0.0f64, 0.0f64, f64::INFINITY);
    for i in 0..n {
        let setup = CollisionSetup::random(&mut instance_rng(cfg.seed, i as u64), ds, da, cfg.real("dt"))
            .map_err(lib("collision"))?;
        let a = audit_ancilla_dependence(&setup, lambda).map_err(lib("collision"))?;
        l0 = l0.max(a.delta_l0);
        l1 = l1.max(a.delta_l1);
        l2_min = l2_min.min(a.delta_l2);
        table.push(vec![
            i.into(),
            lambda.into(),
            a.delta_l0.into(),
            a.delta_l1.into(),
            a.delta_l2.into(),
        ]);
    }
    let pass = l0 <= 1e-10 && l1 <= 1e-10;
    Ok(Report {
        table,
        results: json!({ "max_delta_l0": l0, "max_delta_l1": l1, "min_delta_l2": l2_min }),
        pass: Some(pass),
        plot: None,
    })
}

fn audit_gibbs(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let n = cfg.count("instances", 1)?;
    let dim = cfg.count("ds", 2)?;
    let lambda = cfg.real("lambda");
    let mut table = Table::new(vec![
        "instance",
        "dim",
        "beta",
        "lambda",
        "gibbs_deviation",
        "beta_hat",
        "beta_error",
    ]);
    let (mut worst_dev, mut worst_beta) = (0.0f64, 0.0f64);
    for i in 0..n {
        let mut rng = instance_rng(cfg.seed, i as u64);
        let raw = random_hermitian(&mut rng, dim);
        let h = raw.scaled(1.0 / raw.norm()).map_err(lib("thermal"))?;
        let beta = rng.random_range(0.2..5.0);
        let spec = ThermalSpec::new(h.clone(), beta).map_err(lib("thermal"))?;
        let moved = loki_transform(&spec, lambda).map_err(lib("thermal"))?;
        let rho = gibbs_state(&spec);
        let dev = max_abs_diff(gibbs_state(&moved).matrix(), rho.matrix());
        let fit = fit_temperature(&rho, &h).map_err(lib("thermal"))?;
        let err = (fit.beta_hat - beta).abs();
        worst_dev = worst_dev.max(dev);
        worst_beta = worst_beta.max(err);
        table.push(vec![
            i.into(),
            dim.into(),
            beta.into(),
            lambda.into(),
            dev.into(),
            fit.beta_hat.into(),
            err.into(),
        ]);
    }
    Ok(Report {
        table,
        results: json!({ "max_gibbs_deviation": worst_dev, "max_beta_error": worst_beta }),
        pass: Some(worst_dev <= 1e-12 && worst_beta <= 1e-9),
        plot: None,
    })
}

fn fisher(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let lambda0 = cfg.real("lambda0");
    let points = cfg.count("points", 2)?;
    let model = PairModel::random_qubits(&mut instance_rng(cfg.seed, 0), cfg.real("beta_a"), cfg.real("beta_b"))
        .map_err(lib("metrology"))?;
    let norm = model.total_hamiltonian(lambda0).map_err(lib("metrology"))?.norm();
    let grid = model
        .regime_grid(lambda0, cfg.real("lo"), cfg.real("hi"), points)
        .map_err(lib("metrology"))?;
    let scan = fisher_scan(&model, lambda0, &grid).map_err(lib("metrology"))?;
    let mid = grid[grid.len() / 2];
    let split = split_strategy_factor(
        pair_fisher(&model, lambda0, mid).map_err(lib("metrology"))?,
        pair_fisher(&model, lambda0, mid / 2.0).map_err(lib("metrology"))?,
    )
    .map_err(lib("metrology"))?;
    let mut table = Table::new(vec!["dt", "dt_norm", "fisher", "floor_limited"]);
    for ((&dt, &f), &floor) in scan.dt_grid.iter().zip(&scan.f_values).zip(&scan.floor_limited) {
        table.push(vec![dt.into(), (dt * norm).into(), f.into(), floor.into()]);
    }
    let pass = (scan.fitted_slope - 6.0).abs() <= 0.3 && scan.fit_r2 > 0.999;
    let plot = Plot {
        title: "Fisher information about the ancilla scale".into(),
        x_label: "dt".into(),
        y_label: "F".into(),
        log_x: true,
        log_y: true,
        series: vec![Series {
            label: format!("slope {:.3}", scan.fitted_slope),
            points: scan
                .dt_grid
                .iter()
                .copied()
                .zip(scan.f_values.iter().copied())
                .collect(),
        }],
    };
    Ok(Report {
        table,
        results: json!({
            "hamiltonian_norm": norm,
            "fitted_slope": scan.fitted_slope,
            "fit_r2": scan.fit_r2,
            "split_dt": mid,
            "split_factor": split,
        }),
        pass: Some(pass),
        plot: Some(plot),
    })
}

fn partial_swap(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let (e_s, e_a, beta_a) = (cfg.real("e_s"), cfg.real("e_a"), cfg.real("beta_a"));
    let steps = cfg.count("steps", 1)?;
    let setup = partial_swap_preset(e_s, e_a, cfg.real("j"), beta_a, cfg.real("dt")).map_err(lib("collision"))?;
    let rho0 = gibbs_state(&ThermalSpec::new(setup.h_s().clone(), cfg.real("beta_s0")).map_err(lib("thermal"))?);
    let traj = iterate_collisions(&setup, &rho0, steps).map_err(lib("collision"))?;
    let fp = fixed_point(&collision_channel(&setup), FixedPointMode::Channel).map_err(lib("collision"))?;
    let beta_s = fit_temperature(&fp.state, setup.h_s())
        .map_err(lib("thermal"))?
        .beta_hat;

    let mut table = Table::new(vec!["step", "p_upper", "p_lower", "coherence"]);
    let mut upper = Vec::new();
    for (k, rho) in traj.states.iter().enumerate() {
        let step = k * traj.stride;
        let m = rho.matrix();
        upper.push((step as f64, m[(0, 0)].re));
        table.push(vec![
            step.into(),
            m[(0, 0)].re.into(),
            m[(1, 1)].re.into(),
            m[(0, 1)].norm().into(),
        ]);
    }
    let ancilla_dev = max_abs_diff(fp.state.matrix(), setup.ancilla_state().matrix());
    let plot = Plot {
        title: "Partial-swap trajectory".into(),
        x_label: "collisions".into(),
        y_label: "population of the +σz level".into(),
        log_x: false,
        log_y: false,
        series: vec![Series {
            label: "p_upper".into(),
            points: upper,
        }],
    };
    Ok(Report {
        table,
        results: json!({
            "unique": fp.unique,
            "spectral_gap": fp.spectral_gap,
            "beta_s_inf": beta_s,
            "e_s_beta_s_inf": e_s * beta_s,
            "e_a_beta_a": e_a * beta_a,
            "fixed_point_minus_ancilla_state": ancilla_dev,
        }),
        pass: Some(fp.unique && (e_s * beta_s - e_a * beta_a).abs() <= 1e-3),
        plot: Some(plot),
    })
}

fn gaussian(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let omega = cfg.real("omega");
    let beta_a = cfg.real("beta_a");
    let g = CouplingMatrix::new(cfg.real("gxx"), cfg.real("gxp"), cfg.real("gpx"), cfg.real("gpp"));
    let ex =
        extrapolated_fixed_point(omega, omega, &g, beta_a, cfg.real("dt"), cfg.real("tol")).map_err(lib("gaussian"))?;
    let nu_a = nu_of_beta(omega, beta_a);
    let predicted = predicted_nu_inf(&g, nu_a).map_err(lib("gaussian"))?;
    let contact =
        gaussian_contact_check(&GaussianContactSpec::with_defaults(omega, omega, g)).map_err(lib("gaussian"))?;

    let mut table = Table::new(vec!["kind", "dt", "nu_inf"]);
    for (&dt, &nu) in ex.dts.iter().zip(&ex.nus) {
        table.push(vec!["iterated".into(), dt.into(), nu.into()]);
    }
    table.push(vec!["extrapolated".into(), 0.0.into(), ex.nu_inf.into()]);
    let fock_dim = cfg.count("fock_dim", 0)?;
    let fock = if fock_dim > 0 {
        let dt = ex.dts[0];
        let check = fock_cross_check(omega, omega, &g, beta_a, dt, fock_dim).map_err(lib("gaussian"))?;
        table.push(vec!["fock".into(), dt.into(), check.nu_fock.into()]);
        Some(check)
    } else {
        None
    };
    let error = (ex.nu_inf - predicted.nu_inf).abs();
    let mut pass = error <= 1e-4;
    let fock_json = fock.map(|c| {
        let diff = (c.nu_fock - c.nu_gaussian).abs();
        pass &= diff <= 1e-2;
        json!({ "nu_fock": c.nu_fock, "nu_gaussian": c.nu_gaussian, "difference": diff, "tail_population": c.tail_population })
    });
    Ok(Report {
        table,
        results: json!({
            "det_g": g.det(),
            "nu_a": nu_a,
            "nu_inf": ex.nu_inf,
            "predicted_nu_inf": predicted.nu_inf,
            "formula_ratio": predicted.ratio,
            "abs_error": error,
            "beta_s_inf": beta_of_nu(omega, ex.nu_inf).ok(),
            "fine_tuned": g.is_fine_tuned(1e-12),
            "thermal_contact": contact.overall,
            "fock": fock_json,
        }),
        pass: Some(pass),
        plot: None,
    })
}

fn qubit(e: f64) -> Result<HermitianOperator, CliError> {
    HermitianOperator::new(pauli_z().scale(e)).map_err(lib("linalg"))
}

fn build_protocol(name: &str, cfg: &ExperimentConfig) -> Box<dyn Protocol> {
    let param = |k: &str, default: f64| {
        if cfg.params.contains_key(k) {
            cfg.real(k)
        } else {
            default
        }
    };
    match name {
        "bare-swap" => Box::new(BareSwap {
            j: param("j", 1.0),
            dt: param("dt", 0.3),
        }),
        "replacer" => Box::new(Replacer),
        "tuned-reservoir" => Box::new(TunedReservoir {
            rate: param("rate", 0.5),
        }),
        _ => Box::new(PartialSwapCollision {
            j: param("j", 1.0),
            dt: param("dt", 0.3),
        }),
    }
}

fn use_name(u: HamiltonianUse) -> &'static str {
    match u {
        HamiltonianUse::Blind => "blind",
        HamiltonianUse::LocalTermsOnly => "local-terms-only",
        HamiltonianUse::Dynamical => "dynamical",
    }
}

fn check_contact(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let protocol = build_protocol(cfg.choice("protocol"), cfg);
    let mut scenario = ContactScenario::new(qubit(cfg.real("e_a"))?, qubit(cfg.real("e_b"))?);
    scenario.horizon = cfg.count("horizon", 1)?;
    let report = check_thermal_contact(&scenario, protocol.as_ref()).map_err(lib("contact"))?;
    let mut table = Table::new(vec![
        "beta_a0",
        "beta_b0",
        "beta_a_inf",
        "beta_b_inf",
        "thermal",
        "equal",
        "max_motion",
        "condition3",
        "inconclusive",
    ]);
    for c in &report.cells {
        table.push(vec![
            c.beta_a0.into(),
            c.beta_b0.into(),
            c.beta_a_inf.into(),
            c.beta_b_inf.into(),
            c.thermal.into(),
            c.equal.into(),
            c.max_motion.into(),
            c.condition3.into(),
            c.inconclusive.as_deref().unwrap_or("").into(),
        ]);
    }
    Ok(Report {
        table,
        results: json!({
            "protocol": report.protocol,
            "hamiltonian_use": use_name(protocol.hamiltonian_use()),
            "condition1": report.condition1(),
            "condition2": report.condition2(),
            "condition3": report.condition3(),
            "inconclusive_cells": report.inconclusive_cells(),
            "overall": report.overall,
            "notes": report.notes,
        }),
        pass: Some(report.overall),
        plot: None,
    })
}

fn attack(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let protocols = match cfg.choice("protocol") {
        "all" => bundled_protocols(),
        name => vec![build_protocol(name, cfg)],
    };
    let scenario = ContactScenario::new(qubit(cfg.real("e_a"))?, qubit(cfg.real("e_b"))?);
    let lambda = cfg.real("lambda");
    let mut table = Table::new(vec![
        "protocol",
        "hamiltonian_use",
        "lambda",
        "true_beta_a",
        "true_beta_c",
        "motion_before",
        "motion_after",
        "reports_equal_before",
        "reports_equal_after",
        "detected",
        "beta_a_inf_ratio",
        "beta_b_inf_delta",
    ]);
    let mut records = Vec::new();
    for p in &protocols {
        let r = loki_attack(&scenario, p.as_ref(), cfg.real("beta"), lambda).map_err(lib("contact"))?;
        let probe = if p.hamiltonian_use() == HamiltonianUse::Blind {
            Some(
                lambda_a_covariance_probe(
                    &scenario,
                    p.as_ref(),
                    cfg.real("probe_beta_a0"),
                    cfg.real("probe_beta_b0"),
                    lambda,
                )
                .map_err(lib("contact"))?,
            )
        } else {
            None
        };
        table.push(vec![
            p.name().into(),
            use_name(p.hamiltonian_use()).into(),
            lambda.into(),
            r.true_beta_a.into(),
            r.true_beta_c.into(),
            r.before.max_motion.into(),
            r.after.max_motion.into(),
            r.before.reports_equal.into(),
            r.after.reports_equal.into(),
            r.detected.into(),
            probe.map(|x| x.beta_a_inf_ratio).into(),
            probe.map(|x| x.beta_b_inf_delta).into(),
        ]);
        records.push(json!({
            "protocol": p.name(),
            "hamiltonian_use": use_name(p.hamiltonian_use()),
            "detected": r.detected,
            "beta_a_inf_ratio": probe.map(|x| x.beta_a_inf_ratio),
        }));
    }
    Ok(Report {
        table,
        results: json!({ "lambda": lambda, "protocols": records }),
        pass: None,
        plot: None,
    })
}

fn air(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let inputs = ["t_kelvin", "mass_amu", "radius_angstrom", "energy_joule"].map(|k| cfg.real(k));
    let e = air_estimate(inputs[0], inputs[1], inputs[2], inputs[3]).map_err(lib("timescale"))?;
    let mut table = Table::new(vec![
        "t_kelvin",
        "mass_amu",
        "radius_angstrom",
        "energy_joule",
        "v_rms",
        "dt_s",
        "dt_ps",
        "dimensionless",
    ]);
    let mut row: Vec<Cell> = inputs.iter().map(|&x| x.into()).collect();
    row.extend([
        e.v_rms.into(),
        e.dt.into(),
        (e.dt * 1e12).into(),
        e.dimensionless.into(),
    ]);
    table.push(row);
    Ok(Report {
        table,
        results: json!({
            "v_rms_m_per_s": e.v_rms,
            "dt_s": e.dt,
            "dt_ps": e.dt * 1e12,
            "dt_energy_over_hbar": e.dimensionless,
        }),
        pass: None,
        plot: None,
    })
}

fn liouvillian(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let n = cfg.count("instances", 1)?;
    let (ds, da) = (cfg.count("ds", 1)?, cfg.count("da", 1)?);
    let points = cfg.count("points", 2)?;
    let (lo, hi) = (cfg.real("dt_lo"), cfg.real("dt_hi"));
    if !(lo > 0.0 && hi > lo) {
        return Err(schema(format!("need 0 < dt_lo < dt_hi, got {lo} and {hi}")));
    }
    let dts = log_space(lo, hi, points);
    let mut table = Table::new(vec![
        "instance",
        "dt",
        "rem_phi1",
        "rem_phi2",
        "rem_phi3",
        "rem_liouvillian",
    ]);
    let mut slopes = Vec::new();
    let mut plot_series = Vec::new();
    for i in 0..n {
        let base =
            CollisionSetup::random(&mut instance_rng(cfg.seed, i as u64), ds, da, hi).map_err(lib("collision"))?;
        let terms = (1..=3)
            .map(|k| phi_series_term(&base, k))
            .collect::<Result<Vec<_>, _>>()
            .map_err(lib("collision"))?;
        let series = liouvillian_series(&base);
        let mut rem = vec![Vec::new(); 4];
        for &dt in &dts {
            let setup = base.with_dt(dt).map_err(lib("collision"))?;
            let phi = collision_channel(&setup);
            for k in 1..=3 {
                rem[k - 1].push(phi.max_abs_diff(&series_partial_sum(&terms[..k], dt)));
            }
            let l = effective_liouvillian(&setup).map_err(lib("collision"))?;
            rem[3].push(l.max_abs_diff(&series.truncated(dt)));
            let j = rem[0].len() - 1;
            table.push(vec![
                i.into(),
                dt.into(),
                rem[0][j].into(),
                rem[1][j].into(),
                rem[2][j].into(),
                rem[3][j].into(),
            ]);
        }
        let s: Vec<Option<f64>> = rem.iter().map(|r| log_log_fit(&dts, r).map(|f| f.slope)).collect();
        if i == 0 {
            for (label, r) in ["φ order 1", "φ order 2", "φ order 3", "L_δt"].iter().zip(&rem) {
                plot_series.push(Series {
                    label: label.to_string(),
                    points: dts.iter().copied().zip(r.iter().copied()).collect(),
                });
            }
        }
        slopes.push(s);
    }
    let expected = [(2.0, 0.2), (3.0, 0.2), (4.0, 0.2), (3.0, 0.3)];
    let pass = slopes.iter().all(|s| {
        s.iter()
            .zip(expected)
            .all(|(got, (want, tol))| got.is_some_and(|g| (g - want).abs() <= tol))
    });
    Ok(Report {
        table,
        results: json!({ "slopes": slopes, "expected": [2.0, 3.0, 4.0, 3.0] }),
        pass: Some(pass),
        plot: Some(Plot {
            title: "Series remainders".into(),
            x_label: "dt".into(),
            y_label: "max-norm remainder".into(),
            log_x: true,
            log_y: true,
            series: plot_series,
        }),
    })
}
