//! Collision time of a gas molecule, the one place the library works in SI.
//!
//! Pinned constants: `k_B = 1.380649e-23 J/K`, `ħ = 1.054572e-34 J·s`,
//! `amu = 1.660539e-27 kg`.

use crate::error::{Error, Result};

pub const BOLTZMANN: f64 = 1.380649e-23;
pub const HBAR: f64 = 1.054572e-34;
pub const AMU: f64 = 1.660539e-27;
pub const ANGSTROM: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirEstimate {
    /// `√(3kT/m)` in m/s.
    pub v_rms: f64,
    /// `2r / v_rms` in seconds.
    pub dt: f64,
    /// `δt · E / ħ`.
    pub dimensionless: f64,
}

pub fn air_estimate(t_kelvin: f64, mass_amu: f64, radius_angstrom: f64, energy_joule: f64) -> Result<AirEstimate> {
    for (name, v) in [
        ("t_kelvin", t_kelvin),
        ("mass_amu", mass_amu),
        ("radius_angstrom", radius_angstrom),
        ("energy_joule", energy_joule),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
        }
    }
    let v_rms = (3.0 * BOLTZMANN * t_kelvin / (mass_amu * AMU)).sqrt();
    let dt = 2.0 * radius_angstrom * ANGSTROM / v_rms;
    Ok(AirEstimate {
        v_rms,
        dt,
        dimensionless: dt * energy_joule / HBAR,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nitrogen_at_room_temperature() {
        let e = air_estimate(300.0, 28.0, 2.25, 1e-20).unwrap();
        assert!((e.v_rms - 516.96).abs() < 0.01, "{}", e.v_rms);
        assert!((e.dt - 0.87e-12).abs() <= 0.01e-12, "{}", e.dt);
        assert!((e.dimensionless - 83.0).abs() <= 1.0, "{}", e.dimensionless);
    }

    #[test]
    fn quadrupling_temperature_halves_dt() {
        let a = air_estimate(300.0, 28.0, 2.25, 1e-20).unwrap();
        let b = air_estimate(1200.0, 28.0, 2.25, 1e-20).unwrap();
        assert!((a.dt / b.dt - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(air_estimate(0.0, 28.0, 2.25, 1e-20).is_err());
        assert!(air_estimate(300.0, -1.0, 2.25, 1e-20).is_err());
        assert!(air_estimate(300.0, 28.0, f64::NAN, 1e-20).is_err());
        assert!(air_estimate(300.0, 28.0, 2.25, 0.0).is_err());
    }
}
