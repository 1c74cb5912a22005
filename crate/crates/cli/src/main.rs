use std::path::PathBuf;
use std::process::ExitCode;

use beamforge_cli::commands::{cmd_design, cmd_report, cmd_simulate, cmd_sweep, CliError, Outcome, SweepAxis};
use beamforge_cli::config::RunConfig;
use clap::{Parser, Subcommand};

/// Invariant-based ion extraction: design, simulate and sweep.
#[derive(Debug, Parser)]
#[command(name = "beamforge", version)]
struct Cli {
    /// Run configuration (flat key = value file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; BEAMFORGE_OUT takes precedence.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides run.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 runs sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the designs and write coefficients, waveforms and validation.
    Design,
    /// Run the axial and radial ensembles and the beamline.
    Simulate,
    /// One row per value of an axis: noise, temperature, R_r or velocity.
    Sweep { axis: String },
    /// Validate a stored axial design.
    Report,
}

const DEFAULT_OUT: &str = "beamforge-out";

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            RunConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set("run.seed", &seed.to_string())?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = load_config(cli)?;
    let out = std::env::var_os("BEAMFORGE_OUT")
        .map(PathBuf::from)
        .or_else(|| cli.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    match &cli.command {
        Command::Design => cmd_design(&cfg, &out),
        Command::Simulate => cmd_simulate(&cfg, &out),
        Command::Sweep { axis } => cmd_sweep(&cfg, axis.parse::<SweepAxis>()?, &out),
        Command::Report => {
            let (outcome, text) = cmd_report(&cfg, &out)?;
            print!("{text}");
            Ok(outcome)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(CliError::Usage(format!("--threads: {e}"))),
        },
        None => run(&cli),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
