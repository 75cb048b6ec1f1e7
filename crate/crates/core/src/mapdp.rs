//! MAP-DPM: iterated conditional modes on the collapsed DP mixture.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crp::check_alpha;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fit::{Engine, FitResult};
use crate::partition::Partition;
use crate::predictive::argmin;
use crate::rng;
use crate::state::ClusterState;
use crate::stats::NGPrior;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDpConfig {
    pub alpha: f64,
    pub prior: NGPrior,
    /// Stop once a sweep lowers the NLL by less than this. `None` means
    /// `1e-6 * N`.
    pub epsilon: Option<f64>,
    pub max_sweeps: usize,
    /// Extra runs from random initial partitions.
    pub restarts: usize,
    pub seed: u64,
    /// Visit observations in a fresh random order every sweep.
    pub shuffle: bool,
}

impl MapDpConfig {
    pub fn new(alpha: f64, prior: NGPrior) -> Self {
        MapDpConfig { alpha, prior, epsilon: None, max_sweeps: 1000, restarts: 0, seed: 0, shuffle: false }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        self.prior.validate()?;
        if let Some(eps) = self.epsilon {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(Error::invalid(format!("epsilon must be > 0, got {eps}")));
            }
        }
        if self.max_sweeps == 0 {
            return Err(Error::invalid("max_sweeps must be at least 1"));
        }
        Ok(())
    }

    pub fn epsilon_for(&self, n: usize) -> f64 {
        self.epsilon.unwrap_or(1e-6 * n as f64)
    }
}

/// Random initial partition: `K' ~ U{1..ceil(sqrt N)}`, each point uniform
/// over the `K'` labels, empty labels dropped.
pub fn restart_initializer<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Partition {
    let max_k = ((n as f64).sqrt().ceil() as usize).max(1);
    let k = rng.random_range(1..=max_k);
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    Partition::from_labels(&labels).expect("n >= 1")
}

/// One ICM pass over `order`. Returns the number of observations that
/// changed cluster.
pub fn icm_sweep(state: &mut ClusterState<'_>, order: &[usize]) -> Result<usize> {
    let mut moves = 0;
    for &i in order {
        let origin = state.detach(i)?;
        let k = state.num_clusters();
        let slot = argmin(state.scores(i));
        if origin.is_move(slot, k) {
            moves += 1;
        }
        state.attach(i, slot)?;
    }
    Ok(moves)
}

struct RunOutcome {
    partition: Partition,
    trace: Vec<f64>,
    sweeps: usize,
    converged: bool,
    empty_events: usize,
}

fn run_from<R: Rng + ?Sized>(
    dataset: &Dataset,
    config: &MapDpConfig,
    init: &Partition,
    rng: &mut R,
) -> Result<RunOutcome> {
    let mut state = ClusterState::new(dataset, &config.prior, config.alpha, init)?;
    let eps = config.epsilon_for(dataset.len());
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut prev = state.nll()?;
    let mut trace = Vec::new();
    let mut converged = false;
    while trace.len() < config.max_sweeps {
        if config.shuffle {
            order.shuffle(rng);
        }
        icm_sweep(&mut state, &order)?;
        state.relabel_canonical();
        let nll = state.nll()?;
        trace.push(nll);
        if prev - nll < eps {
            converged = true;
            break;
        }
        prev = nll;
    }
    Ok(RunOutcome {
        partition: state.partition()?,
        sweeps: trace.len(),
        trace,
        converged,
        empty_events: state.empty_cluster_events(),
    })
}

/// A single MAP-DPM run from `init`, ignoring `config.restarts`.
pub fn fit_mapdp_from(dataset: &Dataset, config: &MapDpConfig, init: &Partition) -> Result<FitResult> {
    config.validate()?;
    let start = Instant::now();
    let out = run_from(dataset, config, init, &mut rng::stream(config.seed, 1))?;
    Ok(FitResult {
        engine: Engine::MapDp,
        partition: out.partition,
        nll_trace: out.trace,
        sweeps: out.sweeps,
        converged: out.converged,
        empty_cluster_events: out.empty_events,
        wall_time: start.elapsed().as_secs_f64(),
        restart: 0,
    })
}

/// MAP-DPM from the single-cluster start, plus `config.restarts` runs from
/// random partitions; the run with the lowest final NLL wins (earliest run
/// on ties).
pub fn fit_mapdp(dataset: &Dataset, config: &MapDpConfig) -> Result<FitResult> {
    config.validate()?;
    config.prior.check_dim(dataset.dim())?;
    let start = Instant::now();
    let runs: Vec<RunOutcome> = (0..=config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(config.seed, 1 + r as u64);
            let init = if r == 0 {
                Partition::single_cluster(dataset.len())
            } else {
                restart_initializer(dataset.len(), &mut rng)
            };
            run_from(dataset, config, &init, &mut rng)
        })
        .collect::<Result<_>>()?;
    let best = runs
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            let fa = *a.trace.last().expect("at least one sweep");
            let fb = *b.trace.last().expect("at least one sweep");
            fa.total_cmp(&fb).then(ia.cmp(ib))
        })
        .map(|(i, _)| i)
        .expect("at least one run");
    let out = runs.into_iter().nth(best).expect("index in range");
    Ok(FitResult {
        engine: Engine::MapDp,
        partition: out.partition,
        nll_trace: out.trace,
        sweeps: out.sweeps,
        converged: out.converged,
        empty_cluster_events: out.empty_events,
        wall_time: start.elapsed().as_secs_f64(),
        restart: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prior1() -> NGPrior {
        NGPrior::isotropic(1, 0.0, 0.1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn single_observation() {
        let ds = Dataset::from_rows(&[[3.0]]).unwrap();
        let fit = fit_mapdp(&ds, &MapDpConfig::new(1.0, prior1())).unwrap();
        assert_eq!(fit.partition, Partition::single_cluster(1));
        assert_eq!(fit.sweeps, 1);
        assert!(fit.converged);
    }

    #[test]
    fn separates_obvious_groups() {
        let rows: Vec<[f64; 1]> =
            [0.0, 0.1, -0.1, 0.05, 20.0, 20.1, 19.9, 20.05].iter().map(|&v| [v]).collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        let prior = NGPrior::isotropic(1, 0.0, 0.1, 0.01, 1.0).unwrap();
        let fit = fit_mapdp(&ds, &MapDpConfig::new(1.0, prior)).unwrap();
        assert_eq!(fit.partition.labels(), &[0, 0, 0, 0, 1, 1, 1, 1]);
        for w in fit.nll_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs());
        }
    }

    #[test]
    fn restart_initializer_is_valid() {
        let mut r = rng::seeded(9);
        let mut ks = std::collections::BTreeSet::new();
        for _ in 0..100 {
            let p = restart_initializer(100, &mut r);
            assert_eq!(p.len(), 100);
            assert!(p.num_clusters() <= 10);
            assert!(p.counts().iter().all(|&c| c > 0));
            ks.insert(p.num_clusters());
        }
        assert!(ks.len() > 1);
        // K' = 1 is only possible draw for N = 1
        assert_eq!(restart_initializer(1, &mut r), Partition::single_cluster(1));
    }

    #[test]
    fn config_validation() {
        let mut c = MapDpConfig::new(1.0, prior1());
        c.max_sweeps = 0;
        assert!(c.validate().is_err());
        let mut c = MapDpConfig::new(1.0, prior1());
        c.epsilon = Some(0.0);
        assert!(c.validate().is_err());
        assert!(MapDpConfig::new(0.0, prior1()).validate().is_err());
        let ds = Dataset::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(fit_mapdp(&ds, &MapDpConfig::new(1.0, prior1())).is_err());
    }
}
