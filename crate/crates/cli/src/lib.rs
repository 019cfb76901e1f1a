//! Config-driven experiment runner for the reconstruction toolkit: parses a
//! TOML run config, dispatches to the core checks and writes a reproducible
//! run directory (`report.json`, `payload.json`, CSV tables, SVG plots).

pub mod commands;
pub mod config;
pub mod error;
pub mod oracle;
pub mod report;
pub mod svg;

pub use config::{Command, LoadedConfig, RunConfig};
pub use error::{CliError, CliResult, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_PASS};
pub use report::{Execution, ExperimentReport};

use commands::Context;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Command named on the command line, if any.
    pub command: Option<Command>,
    /// Overrides the config's seed.
    pub seed: Option<u64>,
    /// Overrides the output root.
    pub out: Option<PathBuf>,
    pub verify: bool,
}

/// Result of [`run`]: the report and where it was written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: ExperimentReport,
    pub summary: Vec<String>,
    pub dir: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// Runs the command without writing anything.
pub fn execute(loaded: &LoadedConfig, options: &RunOptions) -> CliResult<Execution> {
    let command = loaded.resolve_command(options.command)?;
    let ctx = Context {
        loaded,
        seed: options.seed.or(loaded.config.seed),
        verify: options.verify,
    };
    commands::execute(command, &ctx)
}

/// Runs the command and writes its run directory `<out>/<name>`, replacing
/// any earlier run of the same name.
pub fn run(loaded: &LoadedConfig, options: &RunOptions) -> CliResult<RunOutcome> {
    let start = Instant::now();
    let execution = execute(loaded, options)?;
    let seed = options.seed.or(loaded.config.seed);
    let report = ExperimentReport {
        name: loaded.config.name.clone(),
        command: execution.command,
        tool_version: report::TOOL_VERSION.to_string(),
        seed,
        config: loaded.text.clone(),
        provenance: report::provenance_hash(&loaded.text, execution.command, seed),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        passed: execution.passed,
        payload: execution.payload,
    };
    let dir = report::output_root(options.out.as_deref(), loaded).join(&loaded.config.name);
    report::write_run(&dir, &report, &execution.artifacts)?;
    Ok(RunOutcome {
        report,
        summary: execution.summary,
        dir,
    })
}

/// Loads `path` and runs it.
pub fn run_file(path: &Path, options: &RunOptions) -> CliResult<RunOutcome> {
    run(&LoadedConfig::load(path)?, options)
}
