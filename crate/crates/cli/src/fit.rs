use std::path::PathBuf;

use clap::{Args, ValueEnum};
use crpmap::dpmeans::{fit_dpmeans, DpMeansConfig};
use crpmap::eval::{metric_report, MetricReport};
use crpmap::gibbs::{run_gibbs, summarize_trace, GibbsConfig, TraceSummary};
use crpmap::mapdp::{fit_mapdp, MapDpConfig};
use crpmap::predictive::{complete_data_nll, loo_pseudo_nll};
use crpmap::raftery::RafteryLewis;
use crpmap::{Dataset, FittedModel, Partition};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::{raftery_config, PriorArgs};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::manifest::{with_manifest, OutputDir, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineArg {
    Mapdp,
    Gibbs,
    Dpmeans,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Input CSV, one observation per row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// The first line of the CSV holds column names.
    #[arg(long)]
    pub header: bool,
    /// Column holding ground-truth labels (header name or 1-based number).
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long, value_enum, default_value_t = EngineArg::Mapdp)]
    pub engine: EngineArg,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// MAP-DPM: extra runs from random initial partitions.
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_sweeps: usize,
    /// MAP-DPM stopping tolerance on the NLL decrease (default 1e-6 N).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Visit observations in a random order every sweep.
    #[arg(long)]
    pub shuffle: bool,
    /// Gibbs: iteration cap.
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    /// Gibbs: stop by the Raftery-Lewis diagnostic with quantile q,
    /// accuracy r and probability s.
    #[arg(long, num_args = 3, value_names = ["Q", "R", "S"])]
    pub raftery: Option<Vec<f64>>,
    /// DP-means new-cluster penalty (squared distance).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// DP-means: end a sweep as soon as a cluster is created.
    #[arg(long)]
    pub end_sweep_on_new_cluster: bool,
    /// Exit with status 4 when the engine stops before converging.
    #[arg(long)]
    pub require_convergence: bool,
}

#[derive(Debug, Clone, Serialize)]
pub enum EngineSpec {
    MapDp(MapDpConfig),
    Gibbs(GibbsConfig),
    DpMeans(DpMeansConfig),
}

impl EngineSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EngineSpec::MapDp(_) => "mapdp",
            EngineSpec::Gibbs(_) => "gibbs",
            EngineSpec::DpMeans(_) => "dpmeans",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            EngineSpec::MapDp(c) => c.seed,
            EngineSpec::Gibbs(c) => c.seed,
            EngineSpec::DpMeans(c) => c.seed,
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub engine: String,
    pub n: usize,
    pub dim: usize,
    pub k: usize,
    /// Last value of the engine's objective (`nll_trace.csv`).
    pub final_objective: f64,
    /// Complete-data NLL of the returned partition (not for DP-means).
    pub final_nll: Option<f64>,
    /// Leave-one-out pseudo-likelihood form of the same score.
    pub pseudo_nll: Option<f64>,
    /// Sweeps for MAP-DPM and DP-means, iterations for Gibbs.
    pub sweeps: usize,
    pub converged: bool,
    pub empty_cluster_events: usize,
    /// Seconds.
    pub wall_time: f64,
    /// MAP-DPM: runs performed (default start plus restarts) and the
    /// selected one.
    pub runs: Option<usize>,
    pub selected_run: Option<usize>,
    pub raftery: Option<RafteryLewis>,
    /// Metrics of the returned partition against the label column.
    pub train: Option<MetricReport>,
    /// Gibbs: per-sample metrics over the stored samples.
    pub samples: Option<TraceSummary>,
}

pub struct FitOutput {
    pub partition: Partition,
    pub summary: FitSummary,
    pub model: Option<FittedModel>,
}

pub fn run_engine(data: &Dataset, truth: Option<&[usize]>, spec: &EngineSpec) -> CliResult<(FitOutput, Vec<f64>)> {
    let (partition, trace, mut summary, model) = match spec {
        EngineSpec::MapDp(cfg) => {
            let fit = fit_mapdp(data, cfg)?;
            let model = FittedModel::from_partition(data, &fit.partition, cfg.prior.clone(), cfg.alpha)?;
            let summary = FitSummary {
                final_nll: Some(complete_data_nll(data, &fit.partition, &cfg.prior, cfg.alpha)?),
                pseudo_nll: Some(loo_pseudo_nll(data, &fit.partition, &cfg.prior, cfg.alpha)?),
                sweeps: fit.sweeps,
                converged: fit.converged,
                empty_cluster_events: fit.empty_cluster_events,
                wall_time: fit.wall_time,
                runs: Some(cfg.restarts + 1),
                selected_run: Some(fit.restart),
                ..blank_summary(spec, data, &fit.partition, fit.final_objective())
            };
            (fit.partition, fit.nll_trace, summary, Some(model))
        }
        EngineSpec::Gibbs(cfg) => {
            let trace = run_gibbs(data, cfg)?;
            let partition = trace
                .last_sample()
                .cloned()
                .ok_or_else(|| CliError::input("no Gibbs samples kept: burn-in covers every iteration"))?;
            let model = FittedModel::from_partition(data, &partition, cfg.prior.clone(), cfg.alpha)?;
            let summary = FitSummary {
                final_nll: Some(complete_data_nll(data, &partition, &cfg.prior, cfg.alpha)?),
                pseudo_nll: Some(loo_pseudo_nll(data, &partition, &cfg.prior, cfg.alpha)?),
                sweeps: trace.iterations_run,
                converged: trace.converged,
                empty_cluster_events: trace.empty_cluster_events,
                wall_time: trace.wall_time,
                raftery: trace.diagnostic,
                samples: Some(summarize_trace(&trace, truth)?),
                ..blank_summary(spec, data, &partition, *trace.nll_chain.last().unwrap_or(&f64::NAN))
            };
            (partition, trace.nll_chain, summary, Some(model))
        }
        EngineSpec::DpMeans(cfg) => {
            let fit = fit_dpmeans(data, cfg)?;
            let summary = FitSummary {
                sweeps: fit.sweeps,
                converged: fit.converged,
                empty_cluster_events: fit.empty_cluster_events,
                wall_time: fit.wall_time,
                ..blank_summary(spec, data, &fit.partition, fit.final_objective())
            };
            (fit.partition, fit.nll_trace, summary, None)
        }
    };
    if let Some(t) = truth {
        if t.len() != data.len() {
            return Err(CliError::input(format!("{} labels for {} rows", t.len(), data.len())));
        }
        summary.train = Some(metric_report(t, partition.labels())?);
    }
    Ok((FitOutput { partition, summary, model }, trace))
}

fn blank_summary(spec: &EngineSpec, data: &Dataset, partition: &Partition, objective: f64) -> FitSummary {
    FitSummary {
        engine: spec.name().to_string(),
        n: data.len(),
        dim: data.dim(),
        k: partition.num_clusters(),
        final_objective: objective,
        final_nll: None,
        pseudo_nll: None,
        sweeps: 0,
        converged: false,
        empty_cluster_events: 0,
        wall_time: 0.0,
        runs: None,
        selected_run: None,
        raftery: None,
        train: None,
        samples: None,
    }
}

/// Writes `assignments.csv`, `nll_trace.csv`, `summary.json` and, for the
/// Bayesian engines, `model.json`.
pub fn write_fit(out: &mut OutputDir, fit: &FitOutput, trace: &[f64]) -> CliResult<()> {
    let manifest = out.manifest().clone();
    io::write_assignments(&out.path("assignments.csv"), &fit.partition)?;
    let rows = trace.iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), io::fmt_f64(*v)]);
    io::write_csv(&out.path("nll_trace.csv"), &["sweep", "nll"], rows)?;
    let summary = serde_json::to_value(&fit.summary).map_err(|e| CliError::Numerical(e.to_string()))?;
    io::write_json(&out.path("summary.json"), &with_manifest(summary, &manifest))?;
    if let Some(model) = &fit.model {
        write_model(&out.path("model.json"), model, &manifest)?;
    }
    out.timing("fit", fit.summary.wall_time);
    Ok(())
}

pub fn write_model(path: &std::path::Path, model: &FittedModel, manifest: &RunManifest) -> CliResult<()> {
    let value = json!({ "prior": model.prior, "alpha": model.alpha, "clusters": model.clusters });
    io::write_json(path, &with_manifest(value, manifest))
}

pub fn engine_spec(args: &FitArgs, data: &Dataset) -> CliResult<EngineSpec> {
    let prior = || args.prior.build(data);
    Ok(match args.engine {
        EngineArg::Mapdp => EngineSpec::MapDp(MapDpConfig {
            alpha: args.alpha,
            prior: prior()?,
            epsilon: args.epsilon,
            max_sweeps: args.max_sweeps,
            restarts: args.restarts,
            seed: args.seed,
            shuffle: args.shuffle,
        }),
        EngineArg::Gibbs => EngineSpec::Gibbs(GibbsConfig {
            alpha: args.alpha,
            prior: prior()?,
            max_iters: args.max_iters,
            burn_in: args.burn_in,
            raftery: args.raftery.as_deref().map(raftery_config).transpose()?,
            thin: args.thin,
            seed: args.seed,
        }),
        EngineArg::Dpmeans => {
            let lambda = args.lambda.ok_or_else(|| CliError::input("--engine dpmeans needs --lambda"))?;
            EngineSpec::DpMeans(DpMeansConfig {
                lambda,
                max_iters: args.max_sweeps,
                seed: args.seed,
                shuffle: args.shuffle,
                end_sweep_on_new_cluster: args.end_sweep_on_new_cluster,
            })
        }
    })
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let loaded = io::read_dataset(&args.data, args.header, args.label_column.as_deref())?;
    let spec = engine_spec(args, &loaded.dataset)?;
    let manifest = RunManifest::new("fit", json!({ "args": args, "engine": spec }), Some(args.seed));
    let mut out = OutputDir::create(&args.out, manifest)?;
    let (fit, trace) = run_engine(&loaded.dataset, loaded.labels.as_deref(), &spec)?;
    write_fit(&mut out, &fit, &trace)?;
    if let Some(labels) = &loaded.labels {
        let truth = Partition::from_labels(labels)?;
        io::write_assignments(&out.path("truth.csv"), &truth)?;
    }
    out.finish()?;
    println!(
        "{}: K = {}, objective {}, {} sweeps{}",
        spec.name(),
        fit.summary.k,
        fit.summary.final_objective,
        fit.summary.sweeps,
        if fit.summary.converged { "" } else { " (not converged)" }
    );
    let gibbs_unmonitored = matches!(&spec, EngineSpec::Gibbs(c) if c.raftery.is_none());
    if args.require_convergence && !fit.summary.converged && !gibbs_unmonitored {
        return Err(CliError::NotConverged(format!("{} stopped at its iteration cap", spec.name())));
    }
    Ok(())
}
