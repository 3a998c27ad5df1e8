//! Command-line front end.
//!
//! | exit code | meaning |
//! |-----------|---------|
//! | 0 | success (also `--help` and `--version`) |
//! | 2 | malformed input: bad magic, truncated record, unparsable text or family file |
//! | 3 | degenerate input: mixed-degree batch, vanishing leading coefficient |
//! | 4 | invalid configuration or command line |
//! | 5 | I/O failure |
//!
//! Every written output gets a `<output>.manifest.json` sibling, and image
//! and fit outputs get a `<output>.stats` sidecar. Partial outputs are
//! removed when a command fails.

pub mod args;
mod commands;
pub mod manifest;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use thiserror::Error;

use crate::approximator::FamilyError;
use crate::eigensolver::SolveError;
use crate::format::FormatError;
use crate::pipeline::PipelineError;
use crate::polynomial::PolyError;
use crate::raster::RasterError;

pub use args::{Cli, Command};
pub use commands::{sweep_family, SweepOutcome};
pub use manifest::{manifest_path, stats_path, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FORMAT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("format error: {0}")]
    Format(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Format(_) => EXIT_FORMAT,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub(crate) fn io_at(path: &Path, e: io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io(_) => CliError::Io(e.to_string()),
            FormatError::Degenerate { .. } => CliError::Degenerate(e.to_string()),
            _ => CliError::Format(e.to_string()),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::InvalidConfig(_) => CliError::Config(e.to_string()),
            SolveError::MixedDegreeBatch { .. } | SolveError::Poly(_) => CliError::Degenerate(e.to_string()),
        }
    }
}

impl From<PolyError> for CliError {
    fn from(e: PolyError) -> Self {
        CliError::Degenerate(e.to_string())
    }
}

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Format(format!("family file: {e}")),
        }
    }
}

impl From<RasterError> for CliError {
    fn from(e: RasterError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command, printing reports
/// to stdout and errors to stderr. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "rootdensity: {e}");
            e.exit_code()
        }
    }
}

/// Runs an already parsed command.
pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Solve(a) => commands::solve(a, out),
        Command::Render(a) => commands::render(a, out),
        Command::Sweep(a) => commands::sweep(a, out),
        Command::Simulate(a) => commands::simulate(a, out),
        Command::Bench(a) => commands::bench(a, out),
        Command::Fit(a) => commands::fit(a, out),
    }
}

/// Files created by a command; removed on drop unless committed.
pub(crate) struct OutputGuard {
    paths: Vec<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    pub(crate) fn new() -> Self {
        Self { paths: Vec::new(), committed: false }
    }

    pub(crate) fn track(&mut self, path: &Path) {
        self.paths.push(path.to_path_buf());
    }

    pub(crate) fn paths(&self) -> &[PathBuf] {
        &self.paths
    }

    pub(crate) fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.paths {
                let _ = std::fs::remove_file(p);
            }
        }
    }
}
