use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser};
use lokilab_cli::config::{parse_assignment, parse_config_text, schema_help};
use lokilab_cli::{run, CliError, Command, ExperimentConfig};

/// Reproducible collision-model thermodynamics experiments.
#[derive(Parser, Debug)]
#[command(name = "lokilab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Flat `key = value` file; `#` starts a comment.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one parameter (repeatable); wins over --config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output stem; writes STEM.csv, STEM.json and with --svg STEM.svg.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Also render a plot.
    #[arg(long)]
    svg: bool,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let file = match &cli.config {
        Some(path) => parse_config_text(&std::fs::read_to_string(path)?)?,
        None => Vec::new(),
    };
    let overrides = cli
        .set
        .iter()
        .map(|s| parse_assignment(s))
        .collect::<Result<Vec<_>, _>>()?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(cli.command.name()));
    Ok(ExperimentConfig::resolve(
        cli.command,
        &file,
        &overrides,
        cli.seed,
        out,
        cli.svg,
    )?)
}

fn main() -> ExitCode {
    let matches = Cli::command().after_long_help(schema_help()).get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    match resolve(&cli).and_then(|cfg| run(&cfg)) {
        Ok(outcome) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.summary).expect("summary is valid JSON")
            );
            eprintln!(
                "wrote {} and {}",
                outcome.paths.csv.display(),
                outcome.paths.json.display()
            );
            if let Some(svg) = &outcome.paths.svg {
                eprintln!("wrote {}", svg.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lokilab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
