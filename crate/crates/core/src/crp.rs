//! Chinese restaurant process: partition probabilities, sequential seating
//! and the synthetic CRP-mixture generator.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::special::ln_gamma;
use crate::stats::NGPrior;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrpConfig {
    pub alpha: f64,
    pub n: usize,
}

impl CrpConfig {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if n == 0 {
            return Err(Error::invalid("CRP needs at least one item"));
        }
        Ok(CrpConfig { alpha, n })
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("concentration must be finite and > 0, got {alpha}")))
    }
}

/// Log-probability of a partition under CRP(alpha, N).
pub fn crp_log_joint(partition: &Partition, alpha: f64) -> f64 {
    crp_log_joint_counts(partition.counts(), alpha)
}

/// [`crp_log_joint`] from the cluster sizes alone.
pub fn crp_log_joint_counts(counts: &[usize], alpha: f64) -> f64 {
    let n: usize = counts.iter().sum();
    ln_gamma(alpha) - ln_gamma(n as f64 + alpha)
        + counts.len() as f64 * alpha.ln()
        + counts.iter().map(|&c| ln_gamma(c as f64)).sum::<f64>()
}

/// Seating probabilities for the next item given `counts` of the items
/// already seated: one entry per existing table followed by the new table.
pub fn crp_conditional(counts: &[usize], alpha: f64) -> Vec<f64> {
    let seated: usize = counts.iter().sum();
    let denom = alpha + seated as f64;
    counts
        .iter()
        .map(|&c| c as f64 / denom)
        .chain(std::iter::once(alpha / denom))
        .collect()
}

/// Draws a partition by sequential seating.
pub fn sample_partition<R: Rng + ?Sized>(config: &CrpConfig, rng: &mut R) -> Partition {
    let mut labels = Vec::with_capacity(config.n);
    let mut counts: Vec<usize> = Vec::new();
    for seated in 0..config.n {
        let u = rng.random::<f64>() * (config.alpha + seated as f64);
        let mut acc = 0.0;
        let mut table = counts.len();
        for (k, &c) in counts.iter().enumerate() {
            acc += c as f64;
            if u < acc {
                table = k;
                break;
            }
        }
        if table == counts.len() {
            counts.push(0);
        }
        counts[table] += 1;
        labels.push(table);
    }
    Partition::from_labels(&labels).expect("n >= 1")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub crp: CrpConfig,
    pub prior: NGPrior,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn dim(&self) -> usize {
        self.prior.dim()
    }
}

/// Mean and precision of one generated Gaussian component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub mean: Vec<f64>,
    pub precision: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    /// Observations, with the generating cluster as `labels`.
    pub dataset: Dataset,
    pub partition: Partition,
    pub components: Vec<Component>,
}

/// Samples component parameters from the prior.
pub fn sample_component<R: Rng + ?Sized>(prior: &NGPrior, rng: &mut R) -> Component {
    let mut mean = Vec::with_capacity(prior.dim());
    let mut precision = Vec::with_capacity(prior.dim());
    for d in 0..prior.dim() {
        let tau = Gamma::new(prior.shape, 1.0 / prior.rate[d]).expect("validated prior").sample(rng);
        let sd = (prior.mean_scale * tau).sqrt().recip();
        let mu = Normal::new(prior.mean[d], sd).expect("finite sd").sample(rng);
        mean.push(mu);
        precision.push(tau);
    }
    Component { mean, precision }
}

fn sample_point<R: Rng + ?Sized>(c: &Component, out: &mut Vec<f64>, rng: &mut R) {
    for (mu, tau) in c.mean.iter().zip(&c.precision) {
        out.push(Normal::new(*mu, tau.sqrt().recip()).expect("finite sd").sample(rng));
    }
}

/// CRP partition, NG-drawn component parameters, Gaussian observations.
pub fn generate_dataset<R: Rng + ?Sized>(config: &GeneratorConfig, rng: &mut R) -> Result<SyntheticData> {
    config.prior.validate()?;
    check_alpha(config.crp.alpha)?;
    let partition = sample_partition(&config.crp, rng);
    let components: Vec<Component> =
        (0..partition.num_clusters()).map(|_| sample_component(&config.prior, rng)).collect();
    let mut values = Vec::with_capacity(config.crp.n * config.dim());
    for &k in partition.labels() {
        sample_point(&components[k], &mut values, rng);
    }
    let dataset = Dataset::new(values, config.crp.n, config.dim())?.with_labels(partition.labels().to_vec())?;
    Ok(SyntheticData { dataset, partition, components })
}

/// Fresh observations from an already generated mixture: each point picks a
/// component with probability proportional to `weights`.
pub fn sample_from_components<R: Rng + ?Sized>(
    components: &[Component],
    weights: &[usize],
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if components.is_empty() || components.len() != weights.len() {
        return Err(Error::invalid("need one weight per component"));
    }
    let total: usize = weights.iter().sum();
    let dim = components[0].mean.len();
    let mut values = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.random_range(0..total);
        let mut acc = 0;
        let k = weights
            .iter()
            .position(|&w| {
                acc += w;
                u < acc
            })
            .expect("u < total");
        sample_point(&components[k], &mut values, rng);
        labels.push(k);
    }
    Dataset::new(values, n, dim)?.with_labels(labels)
}
