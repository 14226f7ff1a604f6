use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hamflow::{output_dir, run, CliError, RunConfig, Task};

/// Hierarchy and multiplicative Hamiltonian toolkit.
#[derive(Debug, Parser)]
#[command(name = "hamflow", version)]
struct Args {
    /// eval, integrate, verify or sweep
    task: Task,
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.path)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the random states drawn by verification suites
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn execute(args: &Args) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let out = output_dir(args.out.as_deref(), &cfg);
    let outcome = run(args.task, &cfg, &out, args.seed)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for f in &outcome.files {
        println!("{}", f.display());
    }
    outcome.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let code = if e.use_stderr() {
                CliError::EXIT_CONFIG
            } else {
                0
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
