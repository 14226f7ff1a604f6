//! Command-line front end: JSON run configurations, the `eval`,
//! `integrate`, `verify` and `sweep` tasks, and CSV/JSON tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use std::path::{Path, PathBuf};

pub use commands::Outcome;
pub use config::{RunConfig, Task};
pub use error::CliError;

/// `--out` wins over `output.path`, which wins over the working directory.
pub fn output_dir(cli_out: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_path.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Runs `task` and writes its files under `out`, creating it if needed.
pub fn run(task: Task, cfg: &RunConfig, out: &Path, seed: u64) -> Result<Outcome, CliError> {
    cfg.require_task(task)?;
    output::ensure_dir(out)?;
    match task {
        Task::Eval => commands::cmd_eval(cfg, out),
        Task::Integrate => commands::cmd_integrate(cfg, out),
        Task::Verify => verify::cmd_verify(cfg, out, seed),
        Task::Sweep => commands::cmd_sweep(cfg, out),
    }
}
