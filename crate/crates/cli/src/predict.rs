use std::path::PathBuf;

use clap::{Args, ValueEnum};
use crpmap::eval::{metric_report, predict_marginal, predict_modal};
use crpmap::{Dataset, FittedModel};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io;
use crate::manifest::{with_manifest, OutputDir, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictMode {
    Marginal,
    Modal,
    Both,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    /// `model.json` written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    /// New points.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub label_column: Option<String>,
    /// True labels of the new points, for the test-set metrics.
    #[arg(long, conflicts_with = "label_column")]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PredictMode::Both)]
    pub mode: PredictMode,
}

/// Modal cluster of every row (`K` stands for a new cluster).
pub fn modal_labels(model: &FittedModel, data: &Dataset) -> CliResult<Vec<usize>> {
    check_dim(model, data)?;
    data.rows().map(|x| Ok(predict_modal(x, model)?.cluster)).collect()
}

fn check_dim(model: &FittedModel, data: &Dataset) -> CliResult<()> {
    if model.dim() != data.dim() {
        return Err(CliError::input(format!("model has {} dimensions, data has {}", model.dim(), data.dim())));
    }
    Ok(())
}

pub fn cmd_predict(args: &PredictArgs) -> CliResult<()> {
    let model: FittedModel = io::read_json(&args.model)?;
    model.validate()?;
    let loaded = io::read_dataset(&args.data, args.header, args.label_column.as_deref())?;
    let data = loaded.dataset;
    check_dim(&model, &data)?;
    let truth = match &args.truth {
        Some(p) => Some(io::read_labels(p)?),
        None => loaded.labels,
    };

    let mut out = OutputDir::create(&args.out, RunManifest::new("predict", args, None))?;
    let manifest = out.manifest().clone();
    let marginal = matches!(args.mode, PredictMode::Marginal | PredictMode::Both);
    let modal = matches!(args.mode, PredictMode::Modal | PredictMode::Both);

    let dens: Vec<f64> = if marginal { data.rows().map(|x| predict_marginal(x, &model)).collect::<Result<_, _>>()? } else { vec![] };
    let clusters = if modal { modal_labels(&model, &data)? } else { vec![] };

    let mut header = vec!["row"];
    if marginal {
        header.push("log_density");
    }
    if modal {
        header.push("cluster");
    }
    let rows = (0..data.len()).map(|i| {
        let mut r = vec![(i + 1).to_string()];
        if marginal {
            r.push(io::fmt_f64(dens[i]));
        }
        if modal {
            r.push((clusters[i] + 1).to_string());
        }
        r
    });
    io::write_csv(&out.path("predictions.csv"), &header, rows)?;

    let mut summary = json!({ "n": data.len(), "k_model": model.num_clusters() });
    if marginal {
        summary["mean_nll"] = json!(-dens.iter().sum::<f64>() / data.len() as f64);
    }
    if modal {
        summary["new_cluster_points"] = json!(clusters.iter().filter(|&&k| k == model.num_clusters()).count());
        if let Some(t) = &truth {
            if t.len() != data.len() {
                return Err(CliError::input(format!("{} truth labels for {} points", t.len(), data.len())));
            }
            let r = metric_report(t, &clusters)?;
            summary["test_nmi"] = json!(r.nmi_sum);
            summary["test_nmi_max"] = json!(r.nmi_max);
            summary["test_ami"] = json!(r.ami);
        }
    }
    println!("{}", serde_json::to_string(&summary).unwrap_or_default());
    io::write_json(&out.path("predict_summary.json"), &with_manifest(summary, &manifest))?;
    out.finish()?;
    Ok(())
}
