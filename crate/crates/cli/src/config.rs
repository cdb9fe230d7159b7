use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Command {
    Audit,
    FisherScan,
    PartialSwap,
    GaussianFp,
    CheckContact,
    LokiAttack,
    AirEstimate,
    Liouvillian,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Audit,
        Command::FisherScan,
        Command::PartialSwap,
        Command::GaussianFp,
        Command::CheckContact,
        Command::LokiAttack,
        Command::AirEstimate,
        Command::Liouvillian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Audit => "audit",
            Command::FisherScan => "fisher-scan",
            Command::PartialSwap => "partial-swap",
            Command::GaussianFp => "gaussian-fp",
            Command::CheckContact => "check-contact",
            Command::LokiAttack => "loki-attack",
            Command::AirEstimate => "air-estimate",
            Command::Liouvillian => "liouvillian",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Real,
    Int,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn real(key: &'static str, default: &'static str, doc: &'static str) -> Param {
    Param {
        key,
        kind: Kind::Real,
        default,
        doc,
    }
}

const fn int(key: &'static str, default: &'static str, doc: &'static str) -> Param {
    Param {
        key,
        kind: Kind::Int,
        default,
        doc,
    }
}

const PROTOCOLS: &[&str] = &["partial-swap", "bare-swap", "replacer", "tuned-reservoir"];
const PROTOCOLS_OR_ALL: &[&str] = &["all", "partial-swap", "bare-swap", "replacer", "tuned-reservoir"];

pub fn schema(command: Command) -> &'static [Param] {
    match command {
        Command::Audit => {
            const P: &[Param] = &[
                Param {
                    key: "target",
                    kind: Kind::Choice(&["ancilla", "gibbs"]),
                    default: "ancilla",
                    doc: "ancilla: series audit under H_A -> H_A/λ; gibbs: Λ-invariance and temperature round trip",
                },
                int("instances", "1", "random instances"),
                int("ds", "2", "system dimension"),
                int("da", "2", "ancilla dimension"),
                real("dt", "0.1", "collision time"),
                real("lambda", "2", "rescaling factor"),
            ];
            P
        }
        Command::FisherScan => {
            const P: &[Param] = &[
                real("lambda0", "1", "true ancilla scale"),
                real("beta_a", "0.7", "inverse temperature of A"),
                real("beta_b", "1.1", "inverse temperature of B"),
                real("lo", "0.01", "smallest dt·‖H‖"),
                real("hi", "0.3", "largest dt·‖H‖"),
                int("points", "10", "grid points"),
            ];
            P
        }
        Command::PartialSwap => {
            const P: &[Param] = &[
                real("e_s", "1", "system level splitting (H_S = e_s σ_z)"),
                real("e_a", "1", "ancilla level splitting"),
                real("j", "1", "swap coupling"),
                real("beta_a", "0.8", "ancilla inverse temperature"),
                real("beta_s0", "2", "initial system inverse temperature"),
                real("dt", "0.3", "collision time"),
                int("steps", "200", "collisions recorded"),
            ];
            P
        }
        Command::GaussianFp => {
            const P: &[Param] = &[
                real("omega", "1", "mode frequency (system and ancilla)"),
                real("gxx", "0.3", "coupling x_S x_A"),
                real("gxp", "0", "coupling x_S p_A"),
                real("gpx", "0", "coupling p_S x_A"),
                real("gpp", "0.6", "coupling p_S p_A"),
                real("beta_a", "0.8", "ancilla inverse temperature"),
                real("dt", "0.1", "largest collision time of the extrapolation"),
                real("tol", "1e-12", "fixed-point tolerance"),
                int("fock_dim", "0", "truncated Fock cross-check dimension (0 skips)"),
            ];
            P
        }
        Command::CheckContact => {
            const P: &[Param] = &[
                Param {
                    key: "protocol",
                    kind: Kind::Choice(PROTOCOLS),
                    default: "partial-swap",
                    doc: "evolution under test",
                },
                real("e_a", "1", "H_A = e_a σ_z"),
                real("e_b", "1", "H_B = e_b σ_z"),
                real("j", "1", "swap coupling"),
                real("dt", "0.3", "collision time"),
                real("rate", "0.5", "tuned-reservoir rate"),
                int("horizon", "1000", "steps sampled"),
            ];
            P
        }
        Command::LokiAttack => {
            const P: &[Param] = &[
                Param {
                    key: "protocol",
                    kind: Kind::Choice(PROTOCOLS_OR_ALL),
                    default: "all",
                    doc: "protocol attacked",
                },
                real("e_a", "1", "H_A = e_a σ_z"),
                real("e_b", "1", "H_B = e_b σ_z"),
                real("beta", "0.8", "common initial inverse temperature"),
                real("lambda", "2", "attack factor"),
                real("probe_beta_a0", "0.5", "covariance probe: initial β_A"),
                real("probe_beta_b0", "1.2", "covariance probe: initial β_B"),
            ];
            P
        }
        Command::AirEstimate => {
            const P: &[Param] = &[
                real("t_kelvin", "300", "gas temperature in K"),
                real("mass_amu", "28", "molecular mass in amu"),
                real("radius_angstrom", "2.25", "molecular radius in Å"),
                real("energy_joule", "1e-20", "interaction energy scale in J"),
            ];
            P
        }
        Command::Liouvillian => {
            const P: &[Param] = &[
                int("instances", "1", "random setups"),
                int("ds", "2", "system dimension"),
                int("da", "2", "ancilla dimension"),
                real("dt_lo", "1e-3", "smallest collision time"),
                real("dt_hi", "1e-1", "largest collision time"),
                int("points", "7", "grid points"),
            ];
            P
        }
    }
}

/// `--help` text listing every command's keys and defaults.
pub fn schema_help() -> String {
    let mut out = String::from("Parameters (set with --set key=value or in a --config file):\n");
    for c in Command::ALL {
        out.push_str(&format!("\n  {c}\n"));
        for p in schema(c) {
            let kind = match p.kind {
                Kind::Real => "real".to_string(),
                Kind::Int => "int".to_string(),
                Kind::Choice(opts) => opts.join("|"),
            };
            out.push_str(&format!(
                "    {:<16} {:<40} [default {}] {}\n",
                p.key, kind, p.default, p.doc
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Choice(String),
}

impl Value {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Real(x) => serde_json::json!(x),
            Value::Int(n) => serde_json::json!(n),
            Value::Choice(s) => serde_json::json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError(pub String);

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SchemaError {}

fn parse_value(command: Command, key: &str, raw: &str) -> Result<Value, SchemaError> {
    let param = schema(command)
        .iter()
        .find(|p| p.key == key)
        .ok_or_else(|| SchemaError(format!("unknown key `{key}` for {command}")))?;
    let raw = raw.trim();
    let bad = |what: &str| SchemaError(format!("`{key}` expects {what}, got `{raw}`"));
    match param.kind {
        Kind::Real => raw
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Value::Real)
            .ok_or_else(|| bad("a finite real")),
        Kind::Int => raw.parse::<i64>().map(Value::Int).map_err(|_| bad("an integer")),
        Kind::Choice(opts) => opts
            .iter()
            .find(|o| **o == raw)
            .map(|o| Value::Choice(o.to_string()))
            .ok_or_else(|| bad(&format!("one of {}", opts.join("|")))),
    }
}

/// Parses flat `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, SchemaError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| SchemaError(format!("line {}: expected `key = value`", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_assignment(s: &str) -> Result<(String, String), SchemaError> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| SchemaError(format!("--set expects key=value, got `{s}`")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub output_path: PathBuf,
    pub svg: bool,
}

impl ExperimentConfig {
    /// Defaults, then `file` entries, then `overrides`; later entries win.
    pub fn resolve(
        command: Command,
        file: &[(String, String)],
        overrides: &[(String, String)],
        seed: u64,
        output_path: PathBuf,
        svg: bool,
    ) -> Result<Self, SchemaError> {
        let mut params = BTreeMap::new();
        for p in schema(command) {
            params.insert(p.key.to_string(), parse_value(command, p.key, p.default)?);
        }
        for (k, v) in file.iter().chain(overrides) {
            params.insert(k.clone(), parse_value(command, k, v)?);
        }
        Ok(Self {
            command,
            params,
            seed,
            output_path,
            svg,
        })
    }

    pub fn real(&self, key: &str) -> f64 {
        match self.params.get(key) {
            Some(Value::Real(x)) => *x,
            other => panic!("`{key}` is not a real parameter of {}: {other:?}", self.command),
        }
    }

    pub fn int(&self, key: &str) -> i64 {
        match self.params.get(key) {
            Some(Value::Int(n)) => *n,
            other => panic!("`{key}` is not an integer parameter of {}: {other:?}", self.command),
        }
    }

    /// Integer parameter that must be at least `min`.
    pub fn count(&self, key: &str, min: usize) -> Result<usize, SchemaError> {
        let n = self.int(key);
        usize::try_from(n)
            .ok()
            .filter(|&u| u >= min)
            .ok_or_else(|| SchemaError(format!("`{key}` must be >= {min}, got {n}")))
    }

    pub fn choice(&self, key: &str) -> &str {
        match self.params.get(key) {
            Some(Value::Choice(s)) => s,
            other => panic!("`{key}` is not a choice parameter of {}: {other:?}", self.command),
        }
    }

    pub fn echo(&self) -> serde_json::Value {
        let params: serde_json::Map<String, serde_json::Value> =
            self.params.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
        serde_json::json!({
            "command": self.command.name(),
            "seed": self.seed,
            "parameters": params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(command: Command, overrides: &[(&str, &str)]) -> Result<ExperimentConfig, SchemaError> {
        let o: Vec<_> = overrides.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        ExperimentConfig::resolve(command, &[], &o, 0, PathBuf::from("out"), false)
    }

    #[test]
    fn defaults_cover_every_key() {
        for c in Command::ALL {
            let cfg = resolve(c, &[]).unwrap();
            assert_eq!(cfg.params.len(), schema(c).len());
        }
    }

    #[test]
    fn overrides_win_over_file() {
        let file = parse_config_text("# comment\ndt = 0.2\n\nlambda=3 # trailing\n").unwrap();
        let o = vec![("dt".to_string(), "0.05".to_string())];
        let cfg = ExperimentConfig::resolve(Command::Audit, &file, &o, 7, PathBuf::from("x"), false).unwrap();
        assert_eq!(cfg.real("dt"), 0.05);
        assert_eq!(cfg.real("lambda"), 3.0);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(resolve(Command::Audit, &[("bogus", "1")]).is_err());
        assert!(resolve(Command::Audit, &[("dt", "fast")]).is_err());
        assert!(resolve(Command::Audit, &[("dt", "inf")]).is_err());
        assert!(resolve(Command::Audit, &[("ds", "2.5")]).is_err());
        assert!(resolve(Command::Audit, &[("target", "other")]).is_err());
        assert!(parse_config_text("no equals sign").is_err());
        assert!(parse_assignment("novalue").is_err());
    }

    #[test]
    fn count_checks_lower_bound() {
        let cfg = resolve(Command::FisherScan, &[("points", "-1")]).unwrap();
        assert!(cfg.count("points", 2).is_err());
        let cfg = resolve(Command::FisherScan, &[]).unwrap();
        assert_eq!(cfg.count("points", 2).unwrap(), 10);
    }

    #[test]
    fn help_lists_every_command() {
        let help = schema_help();
        for c in Command::ALL {
            assert!(help.contains(c.name()));
        }
    }
}
