use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use crpmap::eval::{loo_nll, metric_report, MeanSd, MetricReport};
use crpmap::raftery::quantile_type7;
use crpmap::{FittedModel, Partition};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::fit::FitSummary;
use crate::io;
use crate::manifest::{with_manifest, OutputDir, RunManifest};
use crate::predict::modal_labels;

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// Ground-truth labels.
    #[arg(long, required_unless_present = "runs")]
    pub truth: Option<PathBuf>,
    /// Estimated labels as `PATH` or `METHOD=PATH`; repeatable.
    #[arg(long)]
    pub assignments: Vec<String>,
    /// Fitted model of the (single) assignments, for the LOO-NLL.
    #[arg(long, requires = "data")]
    pub model: Option<PathBuf>,
    /// Training data of the model.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    /// Directory of `rep_*` replicates, each with `truth.csv` and one
    /// subdirectory per method holding `assignments.csv`.
    #[arg(long, conflicts_with_all = ["truth", "assignments", "model"])]
    pub runs: Option<PathBuf>,
    /// Output directory (default: the runs directory, else the current one).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Cluster sizes as fractions of N, largest first.
pub fn size_profile(p: &Partition) -> Vec<f64> {
    let n = p.len() as f64;
    let mut sizes = p.sorted_sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes.into_iter().map(|s| s as f64 / n).collect()
}

fn parse_assignment(spec: &str, index: usize) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ if index == 0 => ("estimate".to_string(), PathBuf::from(spec)),
        _ => (format!("estimate{}", index + 1), PathBuf::from(spec)),
    }
}

fn check_lengths(truth: &[usize], est: &[usize], what: &str) -> CliResult<()> {
    if truth.len() != est.len() {
        return Err(CliError::input(format!("{what}: {} labels against {} truth labels", est.len(), truth.len())));
    }
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CliResult<()> {
    match &args.runs {
        Some(dir) => {
            let out = args.out.clone().unwrap_or_else(|| dir.clone());
            let manifest = RunManifest::new("evaluate", args, None);
            let table = evaluate_runs(dir, &out, manifest)?;
            print!("{}", table);
            Ok(())
        }
        None => evaluate_single(args),
    }
}

fn evaluate_single(args: &EvaluateArgs) -> CliResult<()> {
    let truth_path = args.truth.as_ref().expect("clap requires --truth");
    if args.assignments.is_empty() {
        return Err(CliError::input("--assignments is required without --runs"));
    }
    if args.model.is_some() && args.assignments.len() != 1 {
        return Err(CliError::input("--model applies to exactly one --assignments file"));
    }
    let truth = io::read_labels(truth_path)?;
    let truth_p = Partition::from_labels(&truth)?;
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut out = OutputDir::create(&out_dir, RunManifest::new("evaluate", args, None))?;

    let mut methods = serde_json::Map::new();
    let mut size_rows = size_rows_for("truth", None, &truth_p);
    for (i, spec) in args.assignments.iter().enumerate() {
        let (name, path) = parse_assignment(spec, i);
        let est = io::read_labels(&path)?;
        check_lengths(&truth, &est, &path.display().to_string())?;
        let report = metric_report(&truth, &est)?;
        let part = Partition::from_labels(&est)?;
        let mut entry = serde_json::to_value(report).map_err(|e| CliError::Numerical(e.to_string()))?;
        if let (Some(model_path), Some(data_path)) = (&args.model, &args.data) {
            let model: FittedModel = io::read_json(model_path)?;
            let data = io::read_dataset(data_path, args.header, None)?.dataset;
            if data.len() != est.len() {
                return Err(CliError::input(format!("{}: {} rows for {} labels", data_path.display(), data.len(), est.len())));
            }
            entry["loo_nll"] = json!(loo_nll(&data, &part, &model.prior, model.alpha)?);
        }
        println!(
            "{name}: NMI {:.4} (max {:.4}), AMI {:.4}, dK {}",
            report.nmi_sum, report.nmi_max, report.ami, report.delta_k
        );
        size_rows.extend(size_rows_for(&name, None, &part));
        methods.insert(name, entry);
    }
    let manifest = out.manifest().clone();
    io::write_json(&out.path("metrics.json"), &with_manifest(json!({ "methods": methods }), &manifest))?;
    io::write_csv(&out.path("cluster_sizes.csv"), &["rank", "nk_over_n", "method"], size_rows)?;
    out.finish()?;
    Ok(())
}

fn size_rows_for(method: &str, rep: Option<usize>, p: &Partition) -> Vec<Vec<String>> {
    size_profile(p)
        .into_iter()
        .enumerate()
        .map(|(r, f)| {
            let mut row = vec![(r + 1).to_string(), io::fmt_f64(f), method.to_string()];
            if let Some(rep) = rep {
                row.push(rep.to_string());
            }
            row
        })
        .collect()
}

/// Order of the rows in the summary table.
pub const MEASURES: &[&str] = &[
    "nmi_sum",
    "nmi_max",
    "ami",
    "iterations",
    "cpu_time",
    "delta_k",
    "empty_clusters",
    "test_nmi_sum",
    "test_nmi_max",
    "test_ami",
    "loo_nll",
];

struct MethodRun {
    method: String,
    measures: BTreeMap<&'static str, f64>,
    sizes: Vec<f64>,
}

fn replicate_dirs(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut reps: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("rep_")))
        .collect();
    reps.sort();
    if reps.is_empty() {
        return Err(CliError::input(format!("{}: no rep_* directories", dir.display())));
    }
    Ok(reps)
}

fn evaluate_replicate(rep: &Path) -> CliResult<(Vec<f64>, Vec<MethodRun>)> {
    let truth = io::read_labels(&rep.join("truth.csv"))?;
    let truth_sizes = size_profile(&Partition::from_labels(&truth)?);
    let mut methods: Vec<PathBuf> = fs::read_dir(rep)
        .map_err(|e| CliError::io(rep, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("assignments.csv").is_file())
        .collect();
    methods.sort();
    let data_path = rep.join("data.csv");
    let test_paths = (rep.join("test_data.csv"), rep.join("test_truth.csv"));
    let mut runs = Vec::new();
    for mdir in methods {
        let method = mdir.file_name().and_then(|n| n.to_str()).unwrap_or("?").to_string();
        let est = io::read_labels(&mdir.join("assignments.csv"))?;
        check_lengths(&truth, &est, &mdir.display().to_string())?;
        let part = Partition::from_labels(&est)?;
        let report: MetricReport = metric_report(&truth, &est)?;
        let mut m = BTreeMap::new();
        m.insert("nmi_sum", report.nmi_sum);
        m.insert("nmi_max", report.nmi_max);
        m.insert("ami", report.ami);
        m.insert("delta_k", report.delta_k as f64);
        let summary_path = mdir.join("summary.json");
        if summary_path.is_file() {
            let s: FitSummary = io::read_json(&summary_path)?;
            m.insert("iterations", s.sweeps as f64);
            m.insert("cpu_time", s.wall_time);
            m.insert("empty_clusters", s.empty_cluster_events as f64);
        }
        let model_path = mdir.join("model.json");
        if model_path.is_file() {
            let model: FittedModel = io::read_json(&model_path)?;
            if data_path.is_file() {
                let data = io::read_dataset(&data_path, false, None)?.dataset;
                m.insert("loo_nll", loo_nll(&data, &part, &model.prior, model.alpha)?);
            }
            if test_paths.0.is_file() && test_paths.1.is_file() {
                let test = io::read_dataset(&test_paths.0, false, None)?.dataset;
                let test_truth = io::read_labels(&test_paths.1)?;
                let pred = modal_labels(&model, &test)?;
                check_lengths(&test_truth, &pred, &test_paths.0.display().to_string())?;
                let r = metric_report(&test_truth, &pred)?;
                m.insert("test_nmi_sum", r.nmi_sum);
                m.insert("test_nmi_max", r.nmi_max);
                m.insert("test_ami", r.ami);
            }
        }
        runs.push(MethodRun { method, measures: m, sizes: size_profile(&part) });
    }
    Ok((truth_sizes, runs))
}

#[derive(Serialize)]
struct Aggregate {
    replicates: usize,
    methods: BTreeMap<String, BTreeMap<&'static str, MeanSd>>,
    per_replicate: Vec<Value>,
}

/// Aggregates every method over the replicates of `dir`, writing
/// `metrics.json`, `table.csv`, `cluster_sizes.csv` and
/// `cluster_size_quantiles.csv` into `out`. Returns the printed table.
pub fn evaluate_runs(dir: &Path, out_dir: &Path, manifest: RunManifest) -> CliResult<String> {
    let reps = replicate_dirs(dir)?;
    let mut out = OutputDir::create(out_dir, manifest)?;
    let results: Vec<(Vec<f64>, Vec<MethodRun>)> =
        reps.par_iter().map(|r| evaluate_replicate(r)).collect::<CliResult<_>>()?;

    let mut per_replicate = Vec::new();
    let mut values: BTreeMap<String, BTreeMap<&'static str, Vec<f64>>> = BTreeMap::new();
    let mut sizes: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    let mut size_csv = Vec::new();
    for (i, (truth_sizes, runs)) in results.iter().enumerate() {
        sizes.entry("truth".into()).or_default().push(truth_sizes.clone());
        for (r, f) in truth_sizes.iter().enumerate() {
            size_csv.push(vec![(r + 1).to_string(), io::fmt_f64(*f), "truth".into(), i.to_string()]);
        }
        for run in runs {
            per_replicate.push(json!({ "replicate": i, "method": run.method, "measures": run.measures }));
            let entry = values.entry(run.method.clone()).or_default();
            for (k, v) in &run.measures {
                entry.entry(k).or_default().push(*v);
            }
            sizes.entry(run.method.clone()).or_default().push(run.sizes.clone());
            for (r, f) in run.sizes.iter().enumerate() {
                size_csv.push(vec![(r + 1).to_string(), io::fmt_f64(*f), run.method.clone(), i.to_string()]);
            }
        }
    }
    let methods: BTreeMap<String, BTreeMap<&'static str, MeanSd>> = values
        .iter()
        .map(|(m, vals)| (m.clone(), vals.iter().map(|(k, v)| (*k, MeanSd::of(v))).collect()))
        .collect();

    let mut table_rows = Vec::new();
    let names: Vec<&String> = methods.keys().collect();
    let mut text = format!("{:<16}", "measure");
    for n in &names {
        text.push_str(&format!("{:>24}", n));
    }
    text.push('\n');
    for &measure in MEASURES {
        if !methods.values().any(|m| m.contains_key(measure)) {
            continue;
        }
        text.push_str(&format!("{measure:<16}"));
        for n in &names {
            match methods[*n].get(measure) {
                Some(s) => {
                    table_rows.push(vec![measure.to_string(), (*n).clone(), io::fmt_f64(s.mean), io::fmt_f64(s.two_sd)]);
                    text.push_str(&format!("{:>24}", format!("{} ({})", sig(s.mean), sig(s.two_sd))));
                }
                None => text.push_str(&format!("{:>24}", "-")),
            }
        }
        text.push('\n');
    }

    let mut quantile_rows = Vec::new();
    for (method, profiles) in &sizes {
        let depth = profiles.iter().map(Vec::len).max().unwrap_or(0);
        for rank in 0..depth {
            let at: Vec<f64> = profiles.iter().map(|p| p.get(rank).copied().unwrap_or(0.0)).collect();
            quantile_rows.push(vec![
                method.clone(),
                (rank + 1).to_string(),
                io::fmt_f64(quantile_type7(&at, 0.05)),
                io::fmt_f64(quantile_type7(&at, 0.5)),
                io::fmt_f64(quantile_type7(&at, 0.95)),
            ]);
        }
    }

    let manifest = out.manifest().clone();
    let agg = Aggregate { replicates: reps.len(), methods, per_replicate };
    let value = serde_json::to_value(&agg).map_err(|e| CliError::Numerical(e.to_string()))?;
    io::write_json(&out.path("metrics.json"), &with_manifest(value, &manifest))?;
    io::write_csv(&out.path("table.csv"), &["measure", "method", "mean", "two_sd"], table_rows)?;
    io::write_csv(&out.path("cluster_sizes.csv"), &["rank", "nk_over_n", "method", "replicate"], size_csv)?;
    io::write_csv(&out.path("cluster_size_quantiles.csv"), &["method", "rank", "q05", "q50", "q95"], quantile_rows)?;
    out.finish()?;
    Ok(text)
}

fn sig(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}
