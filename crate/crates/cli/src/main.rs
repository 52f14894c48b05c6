use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use pqlap::config::{self, Command};
use pqlap::{CliError, RunOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Action {
    /// Run the command named in the config.
    Run,
    /// Print diagnostics without running.
    Validate,
    Eigen1,
    Eigen2,
    Picone,
    Classify,
    Resonant,
    Sweep,
    Isolation,
}

impl Action {
    fn command(self) -> Option<Command> {
        Some(match self {
            Action::Run | Action::Validate => return None,
            Action::Eigen1 => Command::Eigen1,
            Action::Eigen2 => Command::Eigen2,
            Action::Picone => Command::Picone,
            Action::Classify => Command::Classify,
            Action::Resonant => Command::Resonant,
            Action::Sweep => Command::Sweep,
            Action::Isolation => Command::Isolation,
        })
    }
}

/// Coupled (p,q)-Laplacian eigenvalue and resonance experiments.
///
/// Exit status: 0 success, 1 config error, 2 non-convergence.
#[derive(Debug, Parser)]
#[command(name = "pqlap", version)]
struct Cli {
    action: Action,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted-path override, e.g. `solver.tol_residual=1e-8`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; defaults to `output.dir` of the config, then `pqlap-out`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Concurrent sweep cells.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let mut overrides = cli.set.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(cmd) = cli.action.command() {
        overrides.push(format!("command=\"{}\"", cmd.name()));
    }
    let cfg = config::load(cli.config.as_deref(), &overrides)?;
    let diags = config::validate(&cfg);
    for d in &diags {
        eprintln!("{d}");
    }
    if cli.action == Action::Validate {
        if diags.is_empty() {
            println!("config is valid");
        }
        return Ok(if config::has_errors(&diags) { 1 } else { 0 });
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("pqlap-out"));
    let status = pqlap::run(&cfg, &RunOptions { out_dir: out_dir.clone(), jobs: cli.jobs.max(1) })?;
    println!("{}: {} ({})", cfg.command.name(), status.label(), out_dir.display());
    Ok(status.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            let code = match e {
                CliError::Solver(_) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
