use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tb_optctl::config::{self, Mode, Overrides};
use tb_optctl::{output, run};

/// Batch solver for post-exposure tuberculosis control schedules.
#[derive(Parser)]
#[command(name = "tb-optctl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured scenario batch and write the result tables.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// What to compute.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Transmission intensity (per year).
    #[arg(long)]
    beta: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the batch; also settable via TB_OPTCTL_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(args) => run_command(args),
    }
}

fn env_workers() -> Result<Option<usize>, String> {
    match std::env::var("TB_OPTCTL_WORKERS") {
        Ok(text) => text
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("TB_OPTCTL_WORKERS must be a positive integer, got {text:?}")),
        Err(_) => Ok(None),
    }
}

fn run_command(args: RunArgs) -> ExitCode {
    let env_workers = match env_workers() {
        Ok(w) => w,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let overrides = Overrides {
        mode: args.mode,
        beta: args.beta,
        out: args.out,
        workers: args.workers,
        env_workers,
    };
    let loaded = match &args.config {
        Some(path) => config::load(path, &overrides),
        None => config::resolve(&config::FileConfig::default(), &overrides),
    };
    let run_config = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    let plan = match run::plan(&run_config) {
        Ok(plan) => plan,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let outcome = match run::execute(&plan, run_config.workers) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };
    let written = match output::write_all(&run_config, &outcome) {
        Ok(paths) => paths,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };

    println!(
        "wrote {} files to {} ({} cells, {} non-converged, {} failed)",
        written.len(),
        run_config.out_dir.display(),
        outcome.results.len(),
        outcome.non_converged,
        outcome.cell_errors.len(),
    );
    for (label, message) in &outcome.cell_errors {
        eprintln!("cell {label}: {message}");
    }
    if outcome.clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    }
}
