//! Mutable clustering state shared by the MAP-DPM and Gibbs engines.

use crate::crp::{check_alpha, crp_log_joint_counts};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::predictive::{existing_score, new_cluster_score, Predictive};
use crate::stats::{log_evidence, NGPrior, SufficientStats};

const DETACHED: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Cluster {
    stats: SufficientStats,
    pred: Predictive,
}

/// Assignments plus per-cluster sufficient statistics and cached
/// predictives. Cluster ids stay dense: a cluster is deleted as soon as its
/// last member leaves.
#[derive(Debug, Clone)]
pub struct ClusterState<'a> {
    data: &'a Dataset,
    prior: &'a NGPrior,
    alpha: f64,
    labels: Vec<usize>,
    clusters: Vec<Cluster>,
    prior_pred: Predictive,
    empty_events: usize,
    scores: Vec<f64>,
}

/// Where a detached observation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Its cluster still exists under this id.
    Cluster(usize),
    /// It was the last member; the cluster was dropped.
    Emptied,
}

impl Origin {
    /// Whether placing the observation at `slot` (of `k_after` existing
    /// clusters, `k_after` meaning "new") changes the partition.
    pub fn is_move(self, slot: usize, k_after: usize) -> bool {
        match self {
            Origin::Cluster(k) => slot != k,
            Origin::Emptied => slot != k_after,
        }
    }
}

impl<'a> ClusterState<'a> {
    pub fn new(data: &'a Dataset, prior: &'a NGPrior, alpha: f64, init: &Partition) -> Result<Self> {
        check_alpha(alpha)?;
        prior.validate()?;
        prior.check_dim(data.dim())?;
        if init.len() != data.len() {
            return Err(Error::invalid(format!(
                "initial partition covers {} items, dataset has {}",
                init.len(),
                data.len()
            )));
        }
        let mut stats = vec![SufficientStats::empty(data.dim()); init.num_clusters()];
        for (row, &k) in data.rows().zip(init.labels()) {
            stats[k].add(row)?;
        }
        let clusters = stats
            .into_iter()
            .map(|s| Ok(Cluster { pred: Predictive::from_stats(prior, &s)?, stats: s }))
            .collect::<Result<Vec<_>>>()?;
        Ok(ClusterState {
            data,
            prior,
            alpha,
            labels: init.labels().to_vec(),
            clusters,
            prior_pred: Predictive::from_prior(prior),
            empty_events: 0,
            scores: Vec::new(),
        })
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn prior(&self) -> &'a NGPrior {
        self.prior
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn counts(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.stats.count).collect()
    }

    pub fn cluster_stats(&self) -> Vec<SufficientStats> {
        self.clusters.iter().map(|c| c.stats.clone()).collect()
    }

    /// Number of clusters deleted because their last member left.
    pub fn empty_cluster_events(&self) -> usize {
        self.empty_events
    }

    /// Removes observation `i` from its cluster, dropping the cluster if it
    /// becomes empty.
    pub fn detach(&mut self, i: usize) -> Result<Origin> {
        let k = self.labels[i];
        if k == DETACHED {
            return Err(Error::invalid(format!("observation {i} is already detached")));
        }
        self.labels[i] = DETACHED;
        let cluster = &mut self.clusters[k];
        cluster.stats.remove(self.data.row(i))?;
        if cluster.stats.count == 0 {
            self.clusters.remove(k);
            for l in self.labels.iter_mut() {
                if *l != DETACHED && *l > k {
                    *l -= 1;
                }
            }
            self.empty_events += 1;
            Ok(Origin::Emptied)
        } else {
            cluster.pred = Predictive::from_stats(self.prior, &cluster.stats)?;
            Ok(Origin::Cluster(k))
        }
    }

    /// Assignment scores of detached observation `i`: one per existing
    /// cluster, then the new-cluster slot.
    pub fn scores(&mut self, i: usize) -> &[f64] {
        debug_assert_eq!(self.labels[i], DETACHED);
        let x = self.data.row(i);
        self.scores.clear();
        for c in &self.clusters {
            self.scores.push(existing_score(c.stats.count, &c.pred, x));
        }
        self.scores.push(new_cluster_score(self.alpha, &self.prior_pred, x));
        &self.scores
    }

    /// Places detached observation `i` in cluster `slot`; `slot ==
    /// num_clusters()` opens a new cluster.
    pub fn attach(&mut self, i: usize, slot: usize) -> Result<()> {
        if self.labels[i] != DETACHED {
            return Err(Error::invalid(format!("observation {i} is not detached")));
        }
        let k = self.clusters.len();
        if slot > k {
            return Err(Error::invalid(format!("slot {slot} out of range for {k} clusters")));
        }
        let x = self.data.row(i);
        if slot == k {
            let mut stats = SufficientStats::empty(self.data.dim());
            stats.add(x)?;
            let pred = Predictive::from_stats(self.prior, &stats)?;
            self.clusters.push(Cluster { stats, pred });
        } else {
            let c = &mut self.clusters[slot];
            c.stats.add(x)?;
            c.pred = Predictive::from_stats(self.prior, &c.stats)?;
        }
        self.labels[i] = slot;
        Ok(())
    }

    /// Renumbers clusters by first appearance along the observation index.
    pub fn relabel_canonical(&mut self) {
        let mut map = vec![DETACHED; self.clusters.len()];
        let mut next = 0;
        for &l in &self.labels {
            if l != DETACHED && map[l] == DETACHED {
                map[l] = next;
                next += 1;
            }
        }
        if map.iter().enumerate().all(|(old, &new)| old == new) {
            return;
        }
        let mut slots: Vec<Option<Cluster>> = self.clusters.drain(..).map(Some).collect();
        let mut ordered: Vec<(usize, Cluster)> =
            map.iter().enumerate().map(|(old, &new)| (new, slots[old].take().expect("each once"))).collect();
        ordered.sort_by_key(|(new, _)| *new);
        self.clusters = ordered.into_iter().map(|(_, c)| c).collect();
        for l in self.labels.iter_mut() {
            if *l != DETACHED {
                *l = map[*l];
            }
        }
    }

    /// The current partition. Fails while an observation is detached.
    pub fn partition(&self) -> Result<Partition> {
        if self.labels.contains(&DETACHED) {
            return Err(Error::invalid("partition requested with a detached observation"));
        }
        Partition::from_labels(&self.labels)
    }

    /// Complete-data negative log-likelihood of the current state, from the
    /// maintained statistics.
    pub fn nll(&self) -> Result<f64> {
        let counts = self.counts();
        let mut nll = -crp_log_joint_counts(&counts, self.alpha);
        for c in &self.clusters {
            nll -= log_evidence(self.prior, &c.stats)?;
        }
        Ok(nll)
    }

    /// Largest relative deviation between the maintained statistics and a
    /// batch recomputation from the assignments.
    pub fn stats_drift(&self) -> f64 {
        let mut fresh = vec![SufficientStats::empty(self.data.dim()); self.clusters.len()];
        for (row, &k) in self.data.rows().zip(&self.labels) {
            if k != DETACHED {
                fresh[k].add(row).expect("finite data");
            }
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.clusters.iter().map(|c| &c.stats).zip(&fresh) {
            if a.count != b.count {
                return f64::INFINITY;
            }
            for (x, y) in a.sum.iter().chain(&a.sum_sq).zip(b.sum.iter().chain(&b.sum_sq)) {
                worst = worst.max((x - y).abs() / y.abs().max(1.0));
            }
        }
        worst
    }
}
