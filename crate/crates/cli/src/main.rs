mod data;
mod diagnose;
mod dist;
mod error;
mod fit;
mod output;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "bpreg",
    version,
    about = "Beta prime regression with mean and precision submodels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model and write estimates.json and fitted.csv.
    Fit(fit::FitArgs),
    /// Fit a model and write local influence, envelope and residual tables.
    Diagnose(diagnose::DiagnoseArgs),
    /// Run a Monte Carlo scenario on the built-in simulation design.
    Simulate(simulate::SimulateArgs),
    /// Evaluate the density, cdf, quantile function, draws or summary.
    Dist(dist::DistArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(a) => fit::run(a),
        Command::Diagnose(a) => diagnose::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Dist(a) => dist::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Model(bpreg::Error::NotConverged { trace, .. }) = &e {
                eprintln!("iteration trace:");
                eprintln!(
                    "{:>5} {:<15} {:>22} {:>12} {:>10}",
                    "iter", "method", "loglik", "max|U|", "step"
                );
                for r in trace {
                    eprintln!(
                        "{:>5} {:<15} {:>22.15e} {:>12.4e} {:>10.3e}",
                        r.iteration,
                        format!("{:?}", r.method),
                        r.loglik,
                        r.max_abs_score,
                        r.step_length
                    );
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
