//! Command-line driver: each subcommand reads one JSON experiment config,
//! writes its data files plus a run manifest into the output directory, and
//! exits 0. Config problems exit 1, numerical failures exit 2, and both
//! print the reason to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

/// Why a run stopped, split by whose fault it is: exit 1 when the config or
/// environment is wrong, exit 2 when the mathematics refused.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<torus_atlas::error::Error> for Failure {
    fn from(err: torus_atlas::error::Error) -> Self {
        match err {
            torus_atlas::error::Error::InvalidArgument(msg) => Failure::Validation(msg),
            other => {
                // Surface the whole chain; solver failures carry their cause.
                let mut msg = other.to_string();
                let mut source = std::error::Error::source(&other);
                while let Some(s) = source {
                    msg.push_str(&format!(": {s}"));
                    source = s.source();
                }
                Failure::Numerical(msg)
            }
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::Validation(err.to_string())
    }
}

#[derive(Parser)]
#[command(name = "torus-atlas", version, about = "Invariant tori of the perturbed spherical pendulum")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the label plane on a grid (CSV of i, e, class).
    Bifurcation(RunArgs),
    /// Scan actions, periods, frequencies, and the twist over a label grid.
    Freqmap(RunArgs),
    /// Sample frequency vectors and report the acceptance fraction.
    Diophantine(RunArgs),
    /// Transport the azimuth advance around a loop of label pairs.
    Monodromy(RunArgs),
    /// Solve the invariance equation on every knot of a chart window.
    SolveTori(RunArgs),
    /// Build charts, blend them, and verify the glued correspondence.
    Glue(RunArgs),
    /// Compare quadrature frequencies against spectral lines of orbits.
    VerifyFreq(RunArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// Experiment description (JSON; see the README for each schema).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; 0 means one per logical core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Override the seed recorded in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; falls back to TORUS_ATLAS_OUT, then the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress progress lines on stdout.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are successful exits; anything else is a
            // usage problem and exits 1 with the usage text clap attaches.
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let (name, args) = match &cli.command {
        Command::Bifurcation(a) => ("bifurcation", a),
        Command::Freqmap(a) => ("freqmap", a),
        Command::Diophantine(a) => ("diophantine", a),
        Command::Monodromy(a) => ("monodromy", a),
        Command::SolveTori(a) => ("solve-tori", a),
        Command::Glue(a) => ("glue", a),
        Command::VerifyFreq(a) => ("verify-freq", a),
    };

    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|err| Failure::Validation(format!("worker pool: {err}")))
        .and_then(|pool| {
            pool.install(|| match &cli.command {
                Command::Bifurcation(a) => commands::bifurcation::run(a),
                Command::Freqmap(a) => commands::freqmap::run(a),
                Command::Diophantine(a) => commands::diophantine::run(a),
                Command::Monodromy(a) => commands::monodromy::run(a),
                Command::SolveTori(a) => commands::solve_tori::run(a),
                Command::Glue(a) => commands::glue::run(a),
                Command::VerifyFreq(a) => commands::verify_freq::run(a),
            })
        });

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("{name}: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("{name}: {msg}");
            ExitCode::from(2)
        }
    }
}
