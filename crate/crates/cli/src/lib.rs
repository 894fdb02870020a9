//! Command-line drivers for the `laxol` scheme: config parsing, the four
//! commands and their CSV/JSON writers.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use serde_json::Value;

pub use commands::Options;
pub use error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Convergence,
    TolSweep,
    Hbar,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Convergence => "convergence",
            Command::TolSweep => "tolsweep",
            Command::Hbar => "hbar",
        }
    }
}

/// Loads `config_path`, resolves the output directory and runs `command`.
/// `out` overrides `output.dir`; the fallback is `./out`.
pub fn run(command: Command, config_path: &Path, out: Option<&Path>, opts: Options) -> Result<Value, CliError> {
    let cfg = config::load(config_path)?;
    let root = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let dir = output::OutDir::create(&root)?;
    match command {
        Command::Evolve => commands::evolve(&cfg, &dir, opts),
        Command::Convergence => commands::convergence(&cfg, &dir, opts),
        Command::TolSweep => commands::tolsweep(&cfg, &dir, opts),
        Command::Hbar => commands::hbar(&cfg, &dir, opts),
    }
}
