use std::path::PathBuf;

use clap::{Args, ValueEnum};
use crpmap::alpha::{alpha_map_newton, select_alpha_by_cv, select_alpha_by_nll, AlphaGrid, AlphaPrior};
use crpmap::mapdp::MapDpConfig;
use crpmap::Partition;
use serde::Serialize;
use serde_json::json;

use crate::args::PriorArgs;
use crate::error::{CliError, CliResult};
use crate::io;
use crate::manifest::{with_manifest, OutputDir, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMethod {
    /// Lowest final MAP-DPM NLL over the candidates.
    Grid,
    /// Lowest cross-validated out-of-sample NLL over the candidates.
    Cv,
    /// Posterior mode given N and K.
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaPriorArg {
    /// Inverse-Gamma(1/2, 1/2).
    Ig,
    /// Gamma(--shape, --rate).
    Gamma,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AlphaArgs {
    #[arg(long, value_enum)]
    pub method: AlphaMethod,
    #[arg(long)]
    pub out: PathBuf,
    /// Data for grid and cv.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    /// Label column to drop from the features.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Candidate concentrations, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_sweeps: usize,
    /// Newton: number of observations.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Newton: number of non-empty clusters.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Newton: take N and K from an assignments file instead.
    #[arg(long, conflicts_with_all = ["n", "k"])]
    pub assignments: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AlphaPriorArg::Gamma)]
    pub alpha_prior: AlphaPriorArg,
    #[arg(long, default_value_t = 1.0)]
    pub shape: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
}

fn grid_rows(grid: &AlphaGrid) -> Vec<Vec<String>> {
    grid.values.iter().zip(&grid.scores).map(|(a, s)| vec![io::fmt_f64(*a), io::fmt_f64(*s)]).collect()
}

pub fn cmd_alpha(args: &AlphaArgs) -> CliResult<()> {
    let mut out = OutputDir::create(&args.out, RunManifest::new("alpha", args, Some(args.seed)))?;
    let manifest = out.manifest().clone();
    let result = match args.method {
        AlphaMethod::Newton => {
            let (n, k) = match (&args.assignments, args.n, args.k) {
                (Some(path), _, _) => {
                    let p = Partition::from_labels(&io::read_labels(path)?)?;
                    (p.len(), p.num_clusters())
                }
                (None, Some(n), Some(k)) => (n, k),
                _ => return Err(CliError::input("--method newton needs --N and --K, or --assignments")),
            };
            let prior = match args.alpha_prior {
                AlphaPriorArg::Ig => AlphaPrior::InverseGamma,
                AlphaPriorArg::Gamma => AlphaPrior::Gamma { shape: args.shape, rate: args.rate },
            };
            let est = alpha_map_newton(n, k, prior)?;
            json!({ "method": "newton", "alpha": est.alpha, "n": n, "k": k, "prior": prior,
                    "solver": est.solver, "iterations": est.iterations })
        }
        AlphaMethod::Grid | AlphaMethod::Cv => {
            let path = args.data.as_ref().ok_or_else(|| CliError::input("--method grid/cv needs --data"))?;
            if args.candidates.is_empty() {
                return Err(CliError::input("--candidates is empty"));
            }
            let data = io::read_dataset(path, args.header, args.label_column.as_deref())?.dataset;
            let template = MapDpConfig {
                restarts: args.restarts,
                seed: args.seed,
                max_sweeps: args.max_sweeps,
                ..MapDpConfig::new(1.0, args.prior.build(&data)?)
            };
            if args.method == AlphaMethod::Grid {
                let (alpha, grid) = select_alpha_by_nll(&data, &args.candidates, &template)?;
                io::write_csv(&out.path("alpha_grid.csv"), &["alpha", "nll"], grid_rows(&grid))?;
                json!({ "method": "grid", "alpha": alpha, "grid": grid })
            } else {
                let cv = select_alpha_by_cv(&data, &args.candidates, args.folds, &template)?;
                io::write_csv(&out.path("alpha_grid.csv"), &["alpha", "cv_nll"], grid_rows(&cv.grid))?;
                let rows = cv.grid.values.iter().zip(&cv.fold_scores).flat_map(|(a, folds)| {
                    folds.iter().enumerate().map(move |(f, s)| vec![io::fmt_f64(*a), (f + 1).to_string(), io::fmt_f64(*s)])
                });
                io::write_csv(&out.path("cv_folds.csv"), &["alpha", "fold", "nll"], rows)?;
                json!({ "method": "cv", "alpha": cv.alpha, "folds": args.folds, "grid": cv.grid })
            }
        }
    };
    println!("alpha = {}", result["alpha"]);
    io::write_json(&out.path("alpha.json"), &with_manifest(result, &manifest))?;
    out.finish()?;
    Ok(())
}
