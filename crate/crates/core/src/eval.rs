//! Clustering agreement metrics and out-of-sample prediction.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::FittedModel;
use crate::partition::Partition;
use crate::predictive::{argmin, Predictive};
use crate::special::{ln_factorial, log_sum_exp};
use crate::stats::{NGPrior, SufficientStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmiVariant {
    /// `2 I / (H(U) + H(V))`
    Sum,
    /// `I / max(H(U), H(V))`
    Max,
}

/// Contingency table of two labelings with its margins.
struct Contingency {
    n: usize,
    cells: Vec<usize>,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

fn dense<T: Eq + Hash + Copy>(labels: &[T]) -> (Vec<usize>, usize) {
    let mut ids = HashMap::new();
    let out = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(*l).or_insert(next)
        })
        .collect();
    (out, ids.len())
}

impl Contingency {
    fn new<T: Eq + Hash + Copy, S: Eq + Hash + Copy>(u: &[T], v: &[S]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::invalid(format!("labelings differ in length: {} vs {}", u.len(), v.len())));
        }
        if u.is_empty() {
            return Err(Error::invalid("labelings are empty"));
        }
        let (du, ku) = dense(u);
        let (dv, kv) = dense(v);
        let mut cells = vec![0; ku * kv];
        let mut rows = vec![0; ku];
        let mut cols = vec![0; kv];
        for (&a, &b) in du.iter().zip(&dv) {
            cells[a * kv + b] += 1;
            rows[a] += 1;
            cols[b] += 1;
        }
        Ok(Contingency { n: u.len(), cells, rows, cols })
    }

    fn entropy(counts: &[usize], n: usize) -> f64 {
        let n = n as f64;
        -counts.iter().filter(|&&c| c > 0).map(|&c| (c as f64 / n) * (c as f64 / n).ln()).sum::<f64>()
    }

    fn mutual_information(&self) -> f64 {
        let n = self.n as f64;
        let kv = self.cols.len();
        let mut mi = 0.0;
        for (idx, &c) in self.cells.iter().enumerate() {
            if c > 0 {
                let (a, b) = (idx / kv, idx % kv);
                let c = c as f64;
                mi += (c / n) * (c * n / (self.rows[a] as f64 * self.cols[b] as f64)).ln();
            }
        }
        mi.max(0.0)
    }

    /// Expected mutual information under the permutation (fixed-margins
    /// hypergeometric) model.
    fn expected_mutual_information(&self) -> f64 {
        let n = self.n;
        let nf = n as f64;
        let ln_n_fact = ln_factorial(n);
        let mut emi = 0.0;
        for &a in &self.rows {
            for &b in &self.cols {
                let lo = (a + b).saturating_sub(n).max(1);
                let hi = a.min(b);
                let fixed = ln_factorial(a) + ln_factorial(b) + ln_factorial(n - a) + ln_factorial(n - b) - ln_n_fact;
                for nij in lo..=hi {
                    let x = nij as f64;
                    let log_p = fixed
                        - ln_factorial(nij)
                        - ln_factorial(a - nij)
                        - ln_factorial(b - nij)
                        - ln_factorial(n + nij - a - b);
                    emi += (x / nf) * (nf * x / (a as f64 * b as f64)).ln() * log_p.exp();
                }
            }
        }
        emi
    }
}

/// Normalized mutual information (natural log). When both labelings have a
/// single cluster the value is 1; when exactly one does it is 0.
pub fn nmi<T: Eq + Hash + Copy, S: Eq + Hash + Copy>(u: &[T], v: &[S], variant: NmiVariant) -> Result<f64> {
    let t = Contingency::new(u, v)?;
    let hu = Contingency::entropy(&t.rows, t.n);
    let hv = Contingency::entropy(&t.cols, t.n);
    match (t.rows.len() == 1, t.cols.len() == 1) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let mi = t.mutual_information();
    let denom = match variant {
        NmiVariant::Sum => 0.5 * (hu + hv),
        NmiVariant::Max => hu.max(hv),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Adjusted mutual information with max-normalization.
pub fn ami<T: Eq + Hash + Copy, S: Eq + Hash + Copy>(u: &[T], v: &[S]) -> Result<f64> {
    let t = Contingency::new(u, v)?;
    let (ku, kv) = (t.rows.len(), t.cols.len());
    if ku == kv && (ku == 1 || ku == t.n) {
        return Ok(1.0);
    }
    let mi = t.mutual_information();
    let emi = t.expected_mutual_information();
    let hmax = Contingency::entropy(&t.rows, t.n).max(Contingency::entropy(&t.cols, t.n));
    let mut denom = hmax - emi;
    if denom.abs() < f64::EPSILON {
        denom = f64::EPSILON.copysign(denom);
    }
    Ok((mi - emi) / denom)
}

/// Mutual information of two labelings in nats.
pub fn mutual_information<T: Eq + Hash + Copy, S: Eq + Hash + Copy>(u: &[T], v: &[S]) -> Result<f64> {
    Ok(Contingency::new(u, v)?.mutual_information())
}

/// Entropy of a labeling in nats.
pub fn entropy<T: Eq + Hash + Copy>(u: &[T]) -> f64 {
    let (d, k) = dense(u);
    let mut counts = vec![0; k];
    d.iter().for_each(|&i| counts[i] += 1);
    Contingency::entropy(&counts, u.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub nmi_sum: f64,
    pub nmi_max: f64,
    pub ami: f64,
    /// Estimated minus true number of clusters.
    pub delta_k: i64,
    pub n_clusters_est: usize,
}

pub fn metric_report<T: Eq + Hash + Copy, S: Eq + Hash + Copy>(truth: &[T], estimate: &[S]) -> Result<MetricReport> {
    let k_true = dense(truth).1;
    let k_est = dense(estimate).1;
    Ok(MetricReport {
        nmi_sum: nmi(truth, estimate, NmiVariant::Sum)?,
        nmi_max: nmi(truth, estimate, NmiVariant::Max)?,
        ami: ami(truth, estimate)?,
        delta_k: k_est as i64 - k_true as i64,
        n_clusters_est: k_est,
    })
}

/// Mean and two (sample) standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub two_sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> MeanSd {
        if values.is_empty() {
            return MeanSd { mean: f64::NAN, two_sd: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        MeanSd { mean, two_sd: 2.0 * var.sqrt() }
    }
}

/// Mixture weights and component predictives for a new observation: one
/// entry per cluster, then the new-cluster component.
fn components(model: &FittedModel) -> Result<(Vec<f64>, Vec<Predictive>)> {
    let n = model.n_observations() as f64;
    let denom = model.alpha + n;
    let mut log_w = Vec::with_capacity(model.num_clusters() + 1);
    let mut preds = Vec::with_capacity(model.num_clusters() + 1);
    for c in &model.clusters {
        log_w.push((c.count as f64 / denom).ln());
        preds.push(Predictive::from_stats(&model.prior, c)?);
    }
    log_w.push((model.alpha / denom).ln());
    preds.push(Predictive::from_prior(&model.prior));
    Ok((log_w, preds))
}

/// Mixture weights `N_k / (alpha + N)` and `alpha / (alpha + N)`.
pub fn mixture_weights(model: &FittedModel) -> Vec<f64> {
    let n = model.n_observations() as f64;
    let denom = model.alpha + n;
    model
        .clusters
        .iter()
        .map(|c| c.count as f64 / denom)
        .chain(std::iter::once(model.alpha / denom))
        .collect()
}

fn check_point(model: &FittedModel, x: &[f64]) -> Result<()> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite point"));
    }
    Ok(())
}

/// Log predictive density of `x` with its cluster indicator summed out.
pub fn predict_marginal(x: &[f64], model: &FittedModel) -> Result<f64> {
    check_point(model, x)?;
    let (log_w, preds) = components(model)?;
    let terms: Vec<f64> = log_w.iter().zip(&preds).map(|(w, p)| w + p.ln_pdf(x)).collect();
    Ok(log_sum_exp(&terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalPrediction {
    /// Cluster id; `num_clusters()` denotes a new cluster.
    pub cluster: usize,
    /// Log density of `x` under the chosen component.
    pub log_density: f64,
}

/// Most probable cluster for `x` (ties to the lowest id, new cluster last).
pub fn predict_modal(x: &[f64], model: &FittedModel) -> Result<ModalPrediction> {
    check_point(model, x)?;
    let (log_w, preds) = components(model)?;
    let dens: Vec<f64> = preds.iter().map(|p| p.ln_pdf(x)).collect();
    let q: Vec<f64> = log_w.iter().zip(&dens).map(|(w, d)| -w - d).collect();
    let k = argmin(&q);
    Ok(ModalPrediction { cluster: k, log_density: dens[k] })
}

/// Mean negative log predictive of each training point under the model with
/// that point removed from its cluster.
pub fn loo_nll(dataset: &Dataset, partition: &Partition, prior: &NGPrior, alpha: f64) -> Result<f64> {
    let model = FittedModel::from_partition(dataset, partition, prior.clone(), alpha)?;
    let mut total = 0.0;
    for (row, &k) in dataset.rows().zip(partition.labels()) {
        let mut held_out = model.clone();
        let stats: &mut SufficientStats = &mut held_out.clusters[k];
        stats.remove(row)?;
        if stats.count == 0 {
            held_out.clusters.remove(k);
        }
        total -= predict_marginal(row, &held_out)?;
    }
    Ok(total / dataset.len() as f64)
}
