//! DP-means: hard clustering in the small-variance limit of the DP mixture.

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fit::{Engine, FitResult};
use crate::partition::Partition;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpMeansConfig {
    /// New-cluster penalty in squared-distance units.
    pub lambda: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Visit observations in a random order each sweep.
    pub shuffle: bool,
    /// End a sweep as soon as a new cluster is created (centers are then
    /// recomputed and the next sweep starts from the first observation).
    pub end_sweep_on_new_cluster: bool,
}

impl DpMeansConfig {
    pub fn new(lambda: f64) -> Self {
        DpMeansConfig { lambda, max_iters: 1000, seed: 0, shuffle: false, end_sweep_on_new_cluster: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be finite and > 0, got {}", self.lambda)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Member mean of every cluster.
pub fn cluster_means(dataset: &Dataset, partition: &Partition) -> Vec<Vec<f64>> {
    let mut centers = vec![vec![0.0; dataset.dim()]; partition.num_clusters()];
    for (row, &k) in dataset.rows().zip(partition.labels()) {
        for (c, x) in centers[k].iter_mut().zip(row) {
            *c += x;
        }
    }
    for (c, &n) in centers.iter_mut().zip(partition.counts()) {
        c.iter_mut().for_each(|v| *v /= n as f64);
    }
    centers
}

/// `Σ_i ||x_i - center(z_i)||² + lambda K`.
pub fn dpmeans_objective(dataset: &Dataset, partition: &Partition, centers: &[Vec<f64>], lambda: f64) -> f64 {
    let distortion: f64 =
        dataset.rows().zip(partition.labels()).map(|(row, &k)| dist2(row, &centers[k])).sum();
    distortion + lambda * partition.num_clusters() as f64
}

pub fn fit_dpmeans(dataset: &Dataset, config: &DpMeansConfig) -> Result<FitResult> {
    config.validate()?;
    let start = Instant::now();
    let mut rng = rng::seeded(config.seed);
    let n = dataset.len();
    let mut labels = vec![0usize; n];
    let mut centers = vec![dataset.column_means()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut empty_events = 0;

    while trace.len() < config.max_iters {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut changed = false;
        for &i in &order {
            let x = dataset.row(i);
            let (best, best_d) = centers
                .iter()
                .enumerate()
                .map(|(k, c)| (k, dist2(x, c)))
                .fold((0, f64::INFINITY), |acc, (k, d)| if d < acc.1 { (k, d) } else { acc });
            if best_d > config.lambda {
                centers.push(x.to_vec());
                labels[i] = centers.len() - 1;
                changed = true;
                if config.end_sweep_on_new_cluster {
                    break;
                }
            } else if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let k_before = centers.len();
        let partition = Partition::from_labels(&labels)?;
        empty_events += k_before - partition.num_clusters();
        labels = partition.labels().to_vec();
        centers = cluster_means(dataset, &partition);
        trace.push(dpmeans_objective(dataset, &partition, &centers, config.lambda));
        if !changed {
            converged = true;
            break;
        }
    }
    Ok(FitResult {
        engine: Engine::DpMeans,
        partition: Partition::from_labels(&labels)?,
        nll_trace: trace.clone(),
        sweeps: trace.len(),
        converged,
        empty_cluster_events: empty_events,
        wall_time: start.elapsed().as_secs_f64(),
        restart: 0,
    })
}

/// Number of clusters DP-means finds for each `lambda`.
pub fn scan_lambda(dataset: &Dataset, lambdas: &[f64], config: &DpMeansConfig) -> Result<Vec<(f64, usize)>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let cfg = DpMeansConfig { lambda, ..config.clone() };
            Ok((lambda, fit_dpmeans(dataset, &cfg)?.num_clusters()))
        })
        .collect()
}

/// Smallest-gap search over `lambdas` for the value giving `target` clusters
/// (the first such value, or the one whose K is closest).
pub fn lambda_for_k(dataset: &Dataset, lambdas: &[f64], target: usize, config: &DpMeansConfig) -> Result<f64> {
    let scan = scan_lambda(dataset, lambdas, config)?;
    scan.iter()
        .min_by_key(|(_, k)| k.abs_diff(target))
        .map(|(l, _)| *l)
        .ok_or_else(|| Error::invalid("empty lambda grid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Dataset {
        Dataset::from_rows(&[[0.0, 0.0], [1.0, 0.0], [2.0, 1.0], [4.0, 3.0]]).unwrap()
    }

    #[test]
    fn huge_lambda_gives_one_cluster_at_mean() {
        let ds = line();
        let fit = fit_dpmeans(&ds, &DpMeansConfig::new(1e6)).unwrap();
        assert_eq!(fit.num_clusters(), 1);
        assert_eq!(cluster_means(&ds, &fit.partition), vec![ds.column_means()]);
        assert!(fit.converged);
    }

    #[test]
    fn tiny_lambda_gives_singletons() {
        let ds = line();
        let fit = fit_dpmeans(&ds, &DpMeansConfig::new(1e-9)).unwrap();
        assert_eq!(fit.num_clusters(), 4);
        let centers = cluster_means(&ds, &fit.partition);
        for (i, row) in ds.rows().enumerate() {
            assert_eq!(centers[fit.partition.labels()[i]], row.to_vec());
        }
    }

    #[test]
    fn objective_of_centered_single_cluster() {
        let ds = Dataset::from_rows(&[[-1.0], [1.0], [-2.0], [2.0]]).unwrap();
        let p = Partition::single_cluster(4);
        let centers = cluster_means(&ds, &p);
        // population variance 2.5, times N = 10, plus lambda
        assert!((dpmeans_objective(&ds, &p, &centers, 3.0) - 13.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_at_center_adds_nothing() {
        let ds = Dataset::from_rows(&[[0.0], [2.0]]).unwrap();
        let p = Partition::single_cluster(2);
        let c = cluster_means(&ds, &p);
        let ds2 = Dataset::from_rows(&[[0.0], [2.0], [1.0]]).unwrap();
        let p2 = Partition::single_cluster(3);
        assert_eq!(dpmeans_objective(&ds, &p, &c, 1.0), dpmeans_objective(&ds2, &p2, &c, 1.0));
    }

    #[test]
    fn early_sweep_end_semantics_counts_more_sweeps() {
        let ds = line();
        let cont = fit_dpmeans(&ds, &DpMeansConfig::new(1e-9)).unwrap();
        let mut cfg = DpMeansConfig::new(1e-9);
        cfg.end_sweep_on_new_cluster = true;
        let early = fit_dpmeans(&ds, &cfg).unwrap();
        assert_eq!(early.num_clusters(), 4);
        assert!(early.sweeps > cont.sweeps);
    }

    #[test]
    fn invalid_lambda() {
        assert!(fit_dpmeans(&line(), &DpMeansConfig::new(0.0)).is_err());
        assert!(lambda_for_k(&line(), &[], 2, &DpMeansConfig::new(1.0)).is_err());
    }
}
