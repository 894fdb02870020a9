use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use laxol_cli::{run, Command, Options};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Evolve,
    Convergence,
    Tolsweep,
    Hbar,
}

/// Discrete Lax-Oleinik solver for Hamilton-Jacobi equations.
#[derive(Parser, Debug)]
#[command(name = "laxol", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel convolutions.
    #[arg(long)]
    threads: Option<usize>,
    /// Subtract the leftmost sample from every snapshot.
    #[arg(long)]
    rescale_left: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LAXOL_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let command = match cli.command {
        Cmd::Evolve => Command::Evolve,
        Cmd::Convergence => Command::Convergence,
        Cmd::Tolsweep => Command::TolSweep,
        Cmd::Hbar => Command::Hbar,
    };
    let opts = Options {
        rescale_left: cli.rescale_left,
    };
    match run(command, &cli.config, cli.out.as_deref(), opts) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
