//! `crpmap`: batch front end for DP-mixture clustering.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod alpha;
mod args;
mod error;
mod evaluate;
mod experiment;
mod fit;
mod generate;
mod io;
mod manifest;
mod predict;

#[derive(Parser)]
#[command(name = "crpmap", version, about = "Dirichlet-process mixture clustering: MAP-DPM, collapsed Gibbs and DP-means")]
struct Cli {
    /// Worker threads for replicates, restarts and candidate grids.
    #[arg(long, global = true, env = "CRPMAP_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample synthetic CRP-mixture datasets.
    Generate(generate::GenerateArgs),
    /// Cluster a CSV with MAP-DPM, Gibbs or DP-means.
    Fit(fit::FitArgs),
    /// Compare assignments against ground truth.
    Evaluate(evaluate::EvaluateArgs),
    /// Choose the concentration parameter.
    Alpha(alpha::AlphaArgs),
    /// Score or assign new points with a fitted model.
    Predict(predict::PredictArgs),
    /// Generate, fit and evaluate replicates of the CRP-mixture benchmark.
    ExperimentCrp(experiment::ExperimentArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let result = match &cli.command {
        Command::Generate(a) => generate::cmd_generate(a),
        Command::Fit(a) => fit::cmd_fit(a),
        Command::Evaluate(a) => evaluate::cmd_evaluate(a),
        Command::Alpha(a) => alpha::cmd_alpha(a),
        Command::Predict(a) => predict::cmd_predict(a),
        Command::ExperimentCrp(a) => experiment::cmd_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
