use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddfem_cli::commands::{cmd_convergence, cmd_data_study, cmd_solve, cmd_verify};
use ddfem_cli::config::RunConfig;
use ddfem_cli::CliError;

#[derive(Parser)]
#[command(
    name = "ddfem",
    version,
    about = "Data-driven diffusion-reaction finite element studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Single-threaded run with reproducible output.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve on a single mesh and write the fields, errors and audit.
    Solve,
    /// Mesh convergence sweep.
    Convergence,
    /// Mesh sweeps with sampled data, one per data grid size.
    DataStudy,
    /// Self-checks of the discretization.
    Verify,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }
    for note in config.normalize()? {
        eprintln!("note: {note}");
    }
    let threads = if cli.deterministic {
        Some(1)
    } else {
        cli.threads
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Solve => cmd_solve(&config),
        Command::Convergence => cmd_convergence(&config),
        Command::DataStudy => cmd_data_study(&config),
        Command::Verify => cmd_verify(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
