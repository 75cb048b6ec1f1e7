//! Normal-Gamma prior, per-cluster sufficient statistics and the conjugate
//! posterior update.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Slack below which a negative scatter term `V - S²/N` is treated as
/// rounding noise and clamped to zero, relative to `max(|V|, 1)`.
pub const SCATTER_CLAMP_TOL: f64 = 1e-9;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Independent normal-Gamma prior over each dimension's mean and precision:
/// `tau_d ~ Gamma(shape, rate_d)` (rate parameterization) and
/// `mu_d | tau_d ~ Normal(mean_d, 1 / (mean_scale * tau_d))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGPrior {
    #[serde(rename = "m0")]
    pub mean: Vec<f64>,
    #[serde(rename = "c0")]
    pub mean_scale: f64,
    #[serde(rename = "b0")]
    pub rate: Vec<f64>,
    #[serde(rename = "a0")]
    pub shape: f64,
}

impl NGPrior {
    pub fn new(mean: Vec<f64>, mean_scale: f64, rate: Vec<f64>, shape: f64) -> Result<Self> {
        let prior = NGPrior { mean, mean_scale, rate, shape };
        prior.validate()?;
        Ok(prior)
    }

    /// The same hyperparameters in every dimension.
    pub fn isotropic(dim: usize, mean: f64, mean_scale: f64, rate: f64, shape: f64) -> Result<Self> {
        NGPrior::new(vec![mean; dim], mean_scale, vec![rate; dim], shape)
    }

    /// Data-driven prior: sample mean, `c0 = 10 / N`, `a0 = 1` and `b0` the
    /// per-dimension sample variance (or its reciprocal for
    /// [`RateFromData::Precision`]).
    pub fn empirical(data: &Dataset, mode: RateFromData) -> Result<Self> {
        let mean = data.column_means();
        let var = data.column_variances();
        let rate = var
            .iter()
            .map(|&v| {
                let v = if v > 0.0 { v } else { 1.0 };
                match mode {
                    RateFromData::Variance => v,
                    RateFromData::Precision => 1.0 / v,
                }
            })
            .collect();
        NGPrior::new(mean, 10.0 / data.len() as f64, rate, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.is_empty() {
            return Err(Error::invalid("prior dimension must be at least 1"));
        }
        if self.rate.len() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), found: self.rate.len() });
        }
        if !(self.mean_scale.is_finite() && self.mean_scale > 0.0) {
            return Err(Error::invalid(format!("c0 must be finite and > 0, got {}", self.mean_scale)));
        }
        if !(self.shape.is_finite() && self.shape > 0.0) {
            return Err(Error::invalid(format!("a0 must be finite and > 0, got {}", self.shape)));
        }
        if let Some(b) = self.rate.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::invalid(format!("every b0 entry must be finite and > 0, got {b}")));
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("m0 must be finite"));
        }
        Ok(())
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: dim });
        }
        Ok(())
    }
}

/// How an empirical prior turns per-dimension sample variance into `b0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateFromData {
    #[default]
    Variance,
    Precision,
}

/// Normal-Gamma posterior parameters ("component statistics") of a cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct NGPosterior {
    pub mean: Vec<f64>,
    pub mean_scale: f64,
    pub rate: Vec<f64>,
    pub shape: f64,
}

impl From<&NGPrior> for NGPosterior {
    fn from(p: &NGPrior) -> Self {
        NGPosterior { mean: p.mean.clone(), mean_scale: p.mean_scale, rate: p.rate.clone(), shape: p.shape }
    }
}

/// Running sums over the members of a cluster: `sum = Σx`, `sum_sq = Σx²`
/// (componentwise) and the member count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    #[serde(rename = "S")]
    pub sum: Vec<f64>,
    #[serde(rename = "V")]
    pub sum_sq: Vec<f64>,
    #[serde(rename = "Nk")]
    pub count: usize,
}

impl SufficientStats {
    pub fn empty(dim: usize) -> Self {
        SufficientStats { sum: vec![0.0; dim], sum_sq: vec![0.0; dim], count: 0 }
    }

    pub fn from_rows<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut stats = SufficientStats::empty(dim);
        for row in rows {
            stats.add(row)?;
        }
        Ok(stats)
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn add(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("cannot add a non-finite observation"));
        }
        for ((s, v), &xi) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(x) {
            *s += xi;
            *v += xi * xi;
        }
        self.count += 1;
        Ok(())
    }

    pub fn remove(&mut self, x: &[f64]) -> Result<()> {
        if self.count == 0 {
            return Err(Error::EmptyCluster);
        }
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        self.count -= 1;
        if self.count == 0 {
            // exact zeros rather than accumulated rounding residue
            self.sum.iter_mut().for_each(|s| *s = 0.0);
            self.sum_sq.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        for ((s, v), &xi) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(x) {
            *s -= xi;
            *v -= xi * xi;
        }
        Ok(())
    }

    /// Per-dimension within-cluster scatter `V - S²/N`, clamped at zero when
    /// it is negative by rounding only.
    pub fn scatter(&self, d: usize) -> Result<f64> {
        if self.count == 0 {
            return Ok(0.0);
        }
        let n = self.count as f64;
        let raw = self.sum_sq[d] - self.sum[d] * self.sum[d] / n;
        if raw >= 0.0 {
            Ok(raw)
        } else if raw >= -SCATTER_CLAMP_TOL * self.sum_sq[d].abs().max(1.0) {
            Ok(0.0)
        } else {
            Err(Error::Numerical(format!(
                "negative scatter {raw} in dimension {d} (V = {}, S = {}, N = {})",
                self.sum_sq[d], self.sum[d], self.count
            )))
        }
    }
}

/// Conjugate update of `prior` by the members summarized in `stats`.
pub fn ng_posterior(prior: &NGPrior, stats: &SufficientStats) -> Result<NGPosterior> {
    prior.check_dim(stats.dim())?;
    if stats.count == 0 {
        return Ok(NGPosterior::from(prior));
    }
    let n = stats.count as f64;
    let c0 = prior.mean_scale;
    let mut mean = Vec::with_capacity(prior.dim());
    let mut rate = Vec::with_capacity(prior.dim());
    for d in 0..prior.dim() {
        let xbar = stats.sum[d] / n;
        let dev = xbar - prior.mean[d];
        mean.push((c0 * prior.mean[d] + stats.sum[d]) / (c0 + n));
        let b = prior.rate[d] + 0.5 * stats.scatter(d)? + c0 * n * dev * dev / (2.0 * (c0 + n));
        debug_assert!(b > 0.0);
        rate.push(b);
    }
    Ok(NGPosterior { mean, mean_scale: c0 + n, rate, shape: prior.shape + 0.5 * n })
}

/// Log marginal likelihood `log p(X_k | prior)` of a cluster's members with
/// the mean and precision integrated out.
pub fn log_evidence(prior: &NGPrior, stats: &SufficientStats) -> Result<f64> {
    if stats.count == 0 {
        return Ok(0.0);
    }
    let post = ng_posterior(prior, stats)?;
    let n = stats.count as f64;
    let per_dim_const = ln_gamma(post.shape) - ln_gamma(prior.shape)
        + 0.5 * (prior.mean_scale / post.mean_scale).ln()
        - 0.5 * n * LN_2PI;
    let mut total = per_dim_const * prior.dim() as f64;
    for (b0, b) in prior.rate.iter().zip(&post.rate) {
        total += prior.shape * b0.ln() - post.shape * b.ln();
    }
    Ok(total)
}
