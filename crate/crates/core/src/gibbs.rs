//! Collapsed CRP Gibbs sampler.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crp::check_alpha;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::{ami, nmi, MeanSd, NmiVariant};
use crate::partition::Partition;
use crate::predictive::softmax_neg;
use crate::raftery::{raftery_lewis, RafteryConfig, RafteryLewis};
use crate::rng;
use crate::state::ClusterState;
use crate::stats::NGPrior;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub alpha: f64,
    pub prior: NGPrior,
    pub max_iters: usize,
    /// Sweeps discarded before samples are stored and before the monitored
    /// chain starts.
    pub burn_in: usize,
    /// Stop once the Raftery–Lewis run length of the NLL chain is reached.
    pub raftery: Option<RafteryConfig>,
    /// Store every `thin`-th post burn-in sample.
    pub thin: usize,
    pub seed: u64,
}

impl GibbsConfig {
    pub fn new(alpha: f64, prior: NGPrior) -> Self {
        GibbsConfig { alpha, prior, max_iters: 1000, burn_in: 0, raftery: None, thin: 1, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        self.prior.validate()?;
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin must be at least 1"));
        }
        if let Some(r) = &self.raftery {
            r.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsTrace {
    pub samples: Vec<Partition>,
    /// Complete-data NLL after every sweep, burn-in included.
    pub nll_chain: Vec<f64>,
    pub iterations_run: usize,
    pub empty_cluster_events: usize,
    /// Last diagnostic computed, when stopping by Raftery–Lewis.
    pub diagnostic: Option<RafteryLewis>,
    /// The Raftery–Lewis requirement was met before `max_iters`.
    pub converged: bool,
    pub wall_time: f64,
}

impl GibbsTrace {
    pub fn last_sample(&self) -> Option<&Partition> {
        self.samples.last()
    }
}

fn sample_categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        acc += pk;
        if u < acc {
            return k;
        }
    }
    p.len() - 1
}

/// One Gibbs pass over all observations in index order. Returns the number
/// of observations that changed cluster.
pub fn gibbs_sweep<R: Rng + ?Sized>(state: &mut ClusterState<'_>, rng: &mut R) -> Result<usize> {
    let mut probs = Vec::new();
    let mut moves = 0;
    for i in 0..state.data().len() {
        let origin = state.detach(i)?;
        let k = state.num_clusters();
        softmax_neg(state.scores(i), &mut probs);
        let slot = sample_categorical(&probs, rng);
        if origin.is_move(slot, k) {
            moves += 1;
        }
        state.attach(i, slot)?;
    }
    state.relabel_canonical();
    Ok(moves)
}

/// Runs the sampler from the single-cluster state.
pub fn run_gibbs(dataset: &Dataset, config: &GibbsConfig) -> Result<GibbsTrace> {
    config.validate()?;
    let start = Instant::now();
    let mut rng = rng::seeded(config.seed);
    let init = Partition::single_cluster(dataset.len());
    let mut state = ClusterState::new(dataset, &config.prior, config.alpha, &init)?;
    let mut samples = Vec::new();
    let mut nll_chain = Vec::new();
    let mut diagnostic = None;
    let mut converged = false;
    let check_every = config.raftery.map(|r| r.n_min().max(1)).unwrap_or(usize::MAX);
    for it in 1..=config.max_iters {
        gibbs_sweep(&mut state, &mut rng)?;
        nll_chain.push(state.nll()?);
        if it > config.burn_in {
            let post = it - config.burn_in;
            if (post - 1).is_multiple_of(config.thin) {
                samples.push(state.partition()?);
            }
            if let Some(rcfg) = &config.raftery {
                if post.is_multiple_of(check_every) {
                    match raftery_lewis(&nll_chain[config.burn_in..], rcfg) {
                        Ok(res) => {
                            diagnostic = Some(res);
                            if post >= res.n_required {
                                converged = true;
                                break;
                            }
                        }
                        Err(Error::InsufficientChain { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(GibbsTrace {
        samples,
        iterations_run: nll_chain.len(),
        nll_chain,
        empty_cluster_events: state.empty_cluster_events(),
        diagnostic,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub n_samples: usize,
    pub num_clusters: MeanSd,
    pub nmi_sum: Option<MeanSd>,
    pub nmi_max: Option<MeanSd>,
    pub ami: Option<MeanSd>,
    /// Mean of `K_sample - K_true`.
    pub delta_k: Option<MeanSd>,
    pub empty_cluster_events: usize,
}

/// Per-sample metrics against `truth`, reported as mean and two SD.
pub fn summarize_trace(trace: &GibbsTrace, truth: Option<&[usize]>) -> Result<TraceSummary> {
    if trace.samples.is_empty() {
        return Err(Error::invalid("trace holds no samples"));
    }
    let ks: Vec<f64> = trace.samples.iter().map(|p| p.num_clusters() as f64).collect();
    let mut summary = TraceSummary {
        n_samples: trace.samples.len(),
        num_clusters: MeanSd::of(&ks),
        nmi_sum: None,
        nmi_max: None,
        ami: None,
        delta_k: None,
        empty_cluster_events: trace.empty_cluster_events,
    };
    if let Some(truth) = truth {
        let k_true = Partition::from_labels(truth)?.num_clusters() as f64;
        let mut sums = Vec::new();
        let mut maxs = Vec::new();
        let mut amis = Vec::new();
        for p in &trace.samples {
            sums.push(nmi(truth, p.labels(), NmiVariant::Sum)?);
            maxs.push(nmi(truth, p.labels(), NmiVariant::Max)?);
            amis.push(ami(truth, p.labels())?);
        }
        summary.nmi_sum = Some(MeanSd::of(&sums));
        summary.nmi_max = Some(MeanSd::of(&maxs));
        summary.ami = Some(MeanSd::of(&amis));
        summary.delta_k = Some(MeanSd::of(&ks.iter().map(|k| k - k_true).collect::<Vec<_>>()));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prior1() -> NGPrior {
        NGPrior::isotropic(1, 0.0, 0.1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn single_point_stays_singleton() {
        let ds = Dataset::from_rows(&[[1.0]]).unwrap();
        let mut cfg = GibbsConfig::new(1.0, prior1());
        cfg.max_iters = 20;
        let trace = run_gibbs(&ds, &cfg).unwrap();
        assert!(trace.samples.iter().all(|p| *p == Partition::single_cluster(1)));
        assert_eq!(trace.iterations_run, 20);
    }

    #[test]
    fn fixed_length_without_diagnostic_and_determinism() {
        let ds = Dataset::from_rows(&[[0.0], [0.3], [5.0], [5.2], [9.9]]).unwrap();
        let mut cfg = GibbsConfig::new(1.0, prior1());
        cfg.max_iters = 50;
        cfg.burn_in = 10;
        cfg.seed = 4;
        let a = run_gibbs(&ds, &cfg).unwrap();
        assert_eq!(a.iterations_run, 50);
        assert_eq!(a.samples.len(), 40);
        let b = run_gibbs(&ds, &cfg).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.nll_chain, b.nll_chain);
        cfg.thin = 4;
        assert_eq!(run_gibbs(&ds, &cfg).unwrap().samples.len(), 10);
    }

    #[test]
    fn summary_against_identical_truth() {
        let truth = vec![0, 0, 1, 1];
        let p = Partition::from_labels(&truth).unwrap();
        let trace = GibbsTrace {
            samples: vec![p.clone(), p.clone(), p],
            nll_chain: vec![1.0; 3],
            iterations_run: 3,
            empty_cluster_events: 2,
            diagnostic: None,
            converged: false,
            wall_time: 0.0,
        };
        let s = summarize_trace(&trace, Some(&truth)).unwrap();
        assert_eq!(s.nmi_sum.unwrap(), MeanSd { mean: 1.0, two_sd: 0.0 });
        assert_eq!(s.delta_k.unwrap().mean, 0.0);
        assert_eq!(s.empty_cluster_events, 2);
    }

    #[test]
    fn categorical_draw_respects_zero_mass() {
        let mut r = rng::seeded(1);
        for _ in 0..1000 {
            assert_eq!(sample_categorical(&[0.0, 1.0, 0.0], &mut r), 1);
        }
    }
}
