//! `nlhelm`: forward simulation, far fields, reconstructions and oracle
//! checks for nonlinear Helmholtz media.
//!
//! Exit codes: 0 ok, 2 parse error, 3 invariant violation, 4 solver failure.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Context;
use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "nlhelm", version, about = "Nonlinear Helmholtz scattering and shape reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `threads` in the config.
    #[arg(long)]
    threads: Option<usize>,
    /// Random seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a configuration.
    Validate(Common),
    /// Solve the forward problem and write u0s, w and the total field.
    Forward {
        #[command(flatten)]
        common: Common,
        /// Plane-wave direction angle (radians).
        #[arg(long, conflicts_with = "density")]
        angle: Option<f64>,
        /// Herglotz density CSV (`n,re,im`).
        #[arg(long)]
        density: Option<PathBuf>,
    },
    /// Far field pattern of the wave generated by a density.
    Farfield {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        density: Option<PathBuf>,
    },
    /// Indicator maps on the sampling grid.
    Reconstruct(Common),
    /// Compare the linear solver with the analytic disk solution.
    OracleDisk(Common),
}

fn context(common: &Common) -> Result<Context, CliError> {
    let config = RunConfig::load(&common.config)?;
    let threads = common.threads.unwrap_or(config.threads);
    if threads == 0 {
        return Err(CliError::invariant("threads must be positive"));
    }
    // fails only if a pool already exists, which cannot happen here
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    let out = common.out.clone().unwrap_or_else(|| config.resolve(&config.out));
    let seed = common.seed.unwrap_or(config.seed);
    Ok(Context { config, out, seed })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(c) => commands::validate(&context(&c)?),
        Command::Forward { common, angle, density } => {
            commands::forward(&context(&common)?, angle, density.as_deref())
        }
        Command::Farfield { common, density } => commands::farfield(&context(&common)?, density.as_deref()),
        Command::Reconstruct(c) => commands::reconstruct(&context(&c)?),
        Command::OracleDisk(c) => commands::oracle_disk(&context(&c)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = &e.history {
                eprintln!("increment history: {h:?}");
            }
            ExitCode::from(e.code)
        }
    }
}
