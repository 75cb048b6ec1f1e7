//! Student-T posterior predictives, assignment scores and the collapsed
//! negative log-likelihood.

use std::f64::consts::PI;

use crate::crp::{check_alpha, crp_log_joint};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::special::ln_gamma;
use crate::stats::{log_evidence, ng_posterior, NGPosterior, NGPrior, SufficientStats};

/// Univariate Student-T with location, precision and degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentT {
    pub location: f64,
    pub precision: f64,
    pub dof: f64,
}

impl StudentT {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        log_student_t(x, self)
    }
}

/// Predictive of dimension `d` for a cluster with posterior `post`.
pub fn student_t_existing(post: &NGPosterior, d: usize) -> StudentT {
    StudentT {
        location: post.mean[d],
        precision: post.shape * post.mean_scale / (post.rate[d] * (post.mean_scale + 1.0)),
        dof: 2.0 * post.shape,
    }
}

/// Predictive of dimension `d` for a new, empty cluster.
pub fn student_t_prior(prior: &NGPrior, d: usize) -> StudentT {
    StudentT {
        location: prior.mean[d],
        precision: prior.shape * prior.mean_scale / (prior.rate[d] * (prior.mean_scale + 1.0)),
        dof: 2.0 * prior.shape,
    }
}

pub fn log_student_t(x: f64, p: &StudentT) -> f64 {
    let half_nu = 0.5 * p.dof;
    let z = x - p.location;
    ln_gamma(half_nu + 0.5) - ln_gamma(half_nu) + 0.5 * (p.precision / (p.dof * PI)).ln()
        - (half_nu + 0.5) * (p.precision * z * z / p.dof).ln_1p()
}

/// Product-of-Student-T predictive with its normalizer precomputed, so that
/// scoring a point costs one `ln_1p` per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictive {
    location: Vec<f64>,
    /// Λ_d / ν per dimension.
    spread: Vec<f64>,
    exponent: f64,
    log_norm: f64,
}

impl Predictive {
    pub fn from_posterior(post: &NGPosterior) -> Self {
        let a = post.shape;
        let c = post.mean_scale;
        let nu = 2.0 * a;
        let head = ln_gamma(a + 0.5) - ln_gamma(a);
        let mut log_norm = head * post.mean.len() as f64;
        let mut spread = Vec::with_capacity(post.mean.len());
        for b in &post.rate {
            let lambda = a * c / (b * (c + 1.0));
            log_norm += 0.5 * (lambda / (nu * PI)).ln();
            spread.push(lambda / nu);
        }
        Predictive { location: post.mean.clone(), spread, exponent: a + 0.5, log_norm }
    }

    pub fn from_prior(prior: &NGPrior) -> Self {
        Predictive::from_posterior(&NGPosterior::from(prior))
    }

    pub fn from_stats(prior: &NGPrior, stats: &SufficientStats) -> Result<Self> {
        Ok(Predictive::from_posterior(&ng_posterior(prior, stats)?))
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    /// Log density; `x` must have the predictive's dimension.
    #[inline]
    pub fn ln_pdf(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.location.len());
        let mut acc = 0.0;
        for ((xi, m), s) in x.iter().zip(&self.location).zip(&self.spread) {
            let z = xi - m;
            acc += (s * z * z).ln_1p();
        }
        self.log_norm - self.exponent * acc
    }
}

/// Either a cluster posterior or the prior, for [`log_marginal`].
#[derive(Debug, Clone, Copy)]
pub enum Component<'a> {
    Posterior(&'a NGPosterior),
    Prior(&'a NGPrior),
}

/// `Σ_d log St(x_d | ...)` under a posterior or the prior.
pub fn log_marginal(x: &[f64], component: Component<'_>) -> Result<f64> {
    let (dim, params): (usize, Box<dyn Fn(usize) -> StudentT>) = match component {
        Component::Posterior(p) => (p.mean.len(), Box::new(move |d| student_t_existing(p, d))),
        Component::Prior(p) => (p.dim(), Box::new(move |d| student_t_prior(p, d))),
    };
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
    }
    Ok(x.iter().enumerate().map(|(d, &xd)| log_student_t(xd, &params(d))).sum())
}

/// Negative log (unnormalized) assignment probabilities of one observation:
/// one entry per existing cluster followed by the new-cluster slot. All
/// constants are kept, so `-q` are the exact log joint weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentScores {
    pub q: Vec<f64>,
}

impl AssignmentScores {
    pub fn num_existing(&self) -> usize {
        self.q.len() - 1
    }

    pub fn new_cluster_slot(&self) -> usize {
        self.q.len() - 1
    }

    /// Index of the smallest score; ties go to the lowest index, so the
    /// new-cluster slot loses every tie.
    pub fn argmin(&self) -> usize {
        argmin(&self.q)
    }

    /// Normalized `exp(-q)`, computed with a max shift.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.q.len());
        softmax_neg(&self.q, &mut p);
        p
    }
}

#[inline]
pub(crate) fn argmin(q: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in q.iter().enumerate().skip(1) {
        if v < q[best] {
            best = k;
        }
    }
    best
}

pub(crate) fn softmax_neg(q: &[f64], out: &mut Vec<f64>) {
    let min = q.iter().copied().fold(f64::INFINITY, f64::min);
    out.clear();
    out.extend(q.iter().map(|v| (min - v).exp()));
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
}

/// Scores for assigning `x` given the other observations' cluster stats
/// (`x` already removed). Every cluster must be non-empty.
pub fn assignment_scores(
    x: &[f64],
    clusters: &[SufficientStats],
    prior: &NGPrior,
    alpha: f64,
) -> Result<AssignmentScores> {
    check_alpha(alpha)?;
    prior.check_dim(x.len())?;
    let mut q = Vec::with_capacity(clusters.len() + 1);
    for (k, stats) in clusters.iter().enumerate() {
        if stats.count == 0 {
            return Err(Error::invalid(format!("cluster {k} is empty; drop it before scoring")));
        }
        let pred = Predictive::from_stats(prior, stats)?;
        q.push(existing_score(stats.count, &pred, x));
    }
    q.push(new_cluster_score(alpha, &Predictive::from_prior(prior), x));
    Ok(AssignmentScores { q })
}

/// `-log N_k - log p(x | cluster k)`.
#[inline]
pub fn existing_score(count: usize, pred: &Predictive, x: &[f64]) -> f64 {
    -(count as f64).ln() - pred.ln_pdf(x)
}

/// `-log alpha - log p(x | prior)`.
#[inline]
pub fn new_cluster_score(alpha: f64, prior_pred: &Predictive, x: &[f64]) -> f64 {
    -alpha.ln() - prior_pred.ln_pdf(x)
}

fn cluster_stats(dataset: &Dataset, partition: &Partition) -> Result<Vec<SufficientStats>> {
    if partition.len() != dataset.len() {
        return Err(Error::invalid(format!(
            "partition covers {} items, dataset has {}",
            partition.len(),
            dataset.len()
        )));
    }
    let mut stats = vec![SufficientStats::empty(dataset.dim()); partition.num_clusters()];
    for (row, &k) in dataset.rows().zip(partition.labels()) {
        stats[k].add(row)?;
    }
    Ok(stats)
}

/// Complete-data negative log-likelihood `-log p(X, z | alpha, prior)` of
/// the collapsed model: cluster evidences plus the CRP term.
///
/// Changing one assignment changes this value by exactly the difference of
/// that observation's assignment scores, which is what makes ICM monotone.
pub fn complete_data_nll(dataset: &Dataset, partition: &Partition, prior: &NGPrior, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    prior.check_dim(dataset.dim())?;
    let stats = cluster_stats(dataset, partition)?;
    let mut nll = -crp_log_joint(partition, alpha);
    for s in &stats {
        nll -= log_evidence(prior, s)?;
    }
    Ok(nll)
}

/// Pseudo-likelihood reading of the complete-data score: every observation
/// scored by the leave-one-out predictive of its own cluster, plus the CRP
/// term. Reported for comparison; the engines converge on
/// [`complete_data_nll`].
pub fn loo_pseudo_nll(dataset: &Dataset, partition: &Partition, prior: &NGPrior, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    prior.check_dim(dataset.dim())?;
    let stats = cluster_stats(dataset, partition)?;
    let mut nll = -crp_log_joint(partition, alpha);
    for (row, &k) in dataset.rows().zip(partition.labels()) {
        let mut s = stats[k].clone();
        s.remove(row)?;
        nll -= Predictive::from_stats(prior, &s)?.ln_pdf(row);
    }
    Ok(nll)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn benchmark_prior() -> NGPrior {
        NGPrior::new(vec![1.0, 1.0], 0.1, vec![10.0, 10.0], 1.0).unwrap()
    }

    #[test]
    fn cauchy_at_center() {
        let p = StudentT { location: 2.0, precision: 1.0, dof: 1.0 };
        assert!((log_student_t(2.0, &p) - (1.0 / PI).ln()).abs() < 1e-12);
        assert!((log_student_t(2.0, &p) + 1.144_729_9).abs() < 1e-7);
    }

    #[test]
    fn gaussian_limit() {
        let p = StudentT { location: 0.0, precision: 1.0, dof: 1e6 };
        assert!((log_student_t(0.0, &p).exp() - 0.398_942_3).abs() < 1e-4);
    }

    #[test]
    fn prior_predictive_params() {
        let prior = benchmark_prior();
        let t = student_t_prior(&prior, 0);
        assert!((t.precision - 1.0 / 110.0).abs() < 1e-15);
        assert_eq!(t.dof, 2.0);
        assert_eq!(t.location, 1.0);
        let empty = ng_posterior(&prior, &SufficientStats::empty(2)).unwrap();
        assert_eq!(student_t_existing(&empty, 1), student_t_prior(&prior, 1));
    }

    #[test]
    fn dof_grows_by_one_per_member() {
        let prior = benchmark_prior();
        let mut s = SufficientStats::empty(2);
        let mut last = student_t_existing(&ng_posterior(&prior, &s).unwrap(), 0).dof;
        for i in 0..10 {
            s.add(&[i as f64, 0.5 * i as f64]).unwrap();
            let dof = student_t_existing(&ng_posterior(&prior, &s).unwrap(), 0).dof;
            assert!((dof - last - 1.0).abs() < 1e-12);
            last = dof;
        }
    }

    #[test]
    fn log_marginal_factorizes() {
        let prior = benchmark_prior();
        let x = [0.3, -4.0];
        let lm = log_marginal(&x, Component::Prior(&prior)).unwrap();
        let sum = log_student_t(0.3, &student_t_prior(&prior, 0)) + log_student_t(-4.0, &student_t_prior(&prior, 1));
        assert!((lm - sum).abs() < 1e-13);
        assert!((Predictive::from_prior(&prior).ln_pdf(&x) - lm).abs() < 1e-12);
        assert!(matches!(log_marginal(&[1.0], Component::Prior(&prior)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn no_clusters_forces_new() {
        let s = assignment_scores(&[0.0, 0.0], &[], &benchmark_prior(), 3.0).unwrap();
        assert_eq!(s.q.len(), 1);
        assert_eq!(s.argmin(), 0);
        assert_eq!(s.new_cluster_slot(), 0);
    }

    #[test]
    fn rich_get_richer_offset() {
        let prior = benchmark_prior();
        let stats = SufficientStats::from_rows(2, [&[1.0, 1.0][..], &[2.0, 0.0][..]]).unwrap();
        let pred = Predictive::from_stats(&prior, &stats).unwrap();
        let x = [1.2, 0.9];
        let gap = existing_score(1, &pred, &x) - existing_score(10, &pred, &x);
        assert!((gap - 10f64.ln()).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for n in 1..50 {
            let q = existing_score(n, &pred, &x);
            assert!(q < prev);
            prev = q;
        }
    }

    #[test]
    fn identical_clusters_tie_to_lowest_id() {
        let prior = benchmark_prior();
        let mut big = SufficientStats::empty(2);
        for _ in 0..10 {
            big.add(&[1.0, 1.0]).unwrap();
        }
        let s = assignment_scores(&[1.2, 0.9], &[big.clone(), big], &prior, 1.0).unwrap();
        assert_eq!(s.q[0], s.q[1]);
        assert_eq!(s.argmin(), 0);
    }

    #[test]
    fn empty_cluster_rejected() {
        let r = assignment_scores(&[0.0, 0.0], &[SufficientStats::empty(2)], &benchmark_prior(), 1.0);
        assert!(r.is_err());
    }

    #[test]
    fn argmin_ties_and_shift_invariance() {
        let s = AssignmentScores { q: vec![2.0, 1.0, 1.0, 1.0] };
        assert_eq!(s.argmin(), 1);
        let shifted = AssignmentScores { q: s.q.iter().map(|v| v + 123.4).collect() };
        assert_eq!(shifted.argmin(), 1);
        let p = s.probabilities();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_nll_is_prior_predictive() {
        let prior = benchmark_prior();
        let ds = Dataset::from_rows(&[[0.4, 2.5]]).unwrap();
        let p = Partition::single_cluster(1);
        let nll = complete_data_nll(&ds, &p, &prior, 3.0).unwrap();
        let expect = -Predictive::from_prior(&prior).ln_pdf(ds.row(0));
        assert!((nll - expect).abs() < 1e-12);
        assert!((loo_pseudo_nll(&ds, &p, &prior, 3.0).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn heavier_tails_for_small_clusters() {
        let small = StudentT { location: 0.0, precision: 1.0, dof: 2.0 };
        let large = StudentT { location: 0.0, precision: 1.0, dof: 200.0 };
        assert!(log_student_t(10.0, &small) > log_student_t(10.0, &large));
    }
}
