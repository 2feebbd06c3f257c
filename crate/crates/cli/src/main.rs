//! Command-line driver for the floor-plan heating benchmark: full-order
//! solves, greedy basis construction, surrogate-accelerated optimization,
//! and self-checks.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rbopt::benchmark::Method;

#[derive(Parser)]
#[command(
    name = "rbopt",
    version,
    about = "Reduced-basis accelerated optimization of a floor-plan heating benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    /// Quasi-Newton iteration on the full-order model.
    FomBfgs,
    /// Trust-region reduced-basis method with the corrected functional.
    TrNcd,
    /// Trust-region reduced-basis method with the Petrov-Galerkin model.
    TrPg,
}

impl From<MethodArg> for Method {
    fn from(arg: MethodArg) -> Self {
        match arg {
            MethodArg::FomBfgs => Method::FomBfgs,
            MethodArg::TrNcd => Method::TrNcd,
            MethodArg::TrPg => Method::TrPg,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the state and adjoint equations at one parameter and write the
    /// objective, gradient, and nodal fields.
    FomSolve {
        /// Experiment configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated parameter values.
        #[arg(long)]
        mu: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Grow reduced bases with a goal-oriented greedy search and record the
    /// error-decay study on a validation set.
    Greedy {
        /// Experiment configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Stop once the largest relative objective-error estimate over the
        /// training set drops below this value.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Largest number of snapshot pairs to collect.
        #[arg(long, default_value_t = 50)]
        max: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Write zeros into wall-clock columns so reruns are byte-identical.
        #[arg(long)]
        no_timings: bool,
    },
    /// Run an optimizer from random starts; trust-region runs also solve the
    /// full-order reference from the same starts for comparison.
    Optimize {
        /// Experiment configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Override the method named in the configuration.
        #[arg(long)]
        method: Option<MethodArg>,
        /// Override the number of random starts.
        #[arg(long)]
        starts: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Write zeros into wall-clock columns so reruns are byte-identical.
        #[arg(long)]
        no_timings: bool,
    },
    /// Re-check solver guarantees (objective offset, adjoint gradient,
    /// error estimators, Petrov-Galerkin correction) on a coarsened mesh.
    Validate {
        /// Experiment configuration file.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::FomSolve { config, mu, out } => commands::fom_solve(&config, &mu, &out),
        Command::Greedy { config, tol, max, out, no_timings } => {
            commands::greedy(&config, tol, max, &out, no_timings)
        }
        Command::Optimize { config, method, starts, out, no_timings } => {
            commands::optimize(&config, method.map(Method::from), starts, &out, no_timings)
        }
        Command::Validate { config } => commands::validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
