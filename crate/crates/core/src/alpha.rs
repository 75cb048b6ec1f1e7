//! Choosing the concentration parameter: NLL grid, cross-validation and the
//! MAP estimate under an inverse-Gamma or Gamma prior.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::predict_marginal;
use crate::mapdp::{fit_mapdp, MapDpConfig};
use crate::model::FittedModel;
use crate::rng;
use crate::special::{digamma, ln_gamma, trigamma};

/// Candidate concentrations with the score of each (lower is better).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub values: Vec<f64>,
    pub scores: Vec<f64>,
}

impl AlphaGrid {
    pub fn best(&self) -> f64 {
        let i = self
            .scores
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .expect("non-empty grid");
        self.values[i]
    }
}

fn sorted_candidates(candidates: &[f64]) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate concentrations"));
    }
    if let Some(a) = candidates.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::invalid(format!("candidate concentration {a} is not > 0")));
    }
    let mut v = candidates.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

/// Fits MAP-DPM at every candidate (using `template`'s prior, restarts and
/// seed) and returns the candidate with the lowest final NLL.
pub fn select_alpha_by_nll(dataset: &Dataset, candidates: &[f64], template: &MapDpConfig) -> Result<(f64, AlphaGrid)> {
    let values = sorted_candidates(candidates)?;
    let scores = values
        .par_iter()
        .map(|&alpha| {
            let cfg = MapDpConfig { alpha, ..template.clone() };
            Ok(fit_mapdp(dataset, &cfg)?.final_objective())
        })
        .collect::<Result<Vec<f64>>>()?;
    let grid = AlphaGrid { values, scores };
    Ok((grid.best(), grid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSelection {
    pub alpha: f64,
    /// Mean held-out negative log predictive per candidate.
    pub grid: AlphaGrid,
    /// `fold_scores[c][f]`: mean held-out negative log predictive of fold
    /// `f` at candidate `c`.
    pub fold_scores: Vec<Vec<f64>>,
}

/// Fold of every observation: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// K-fold cross-validation of the marginal out-of-sample likelihood.
pub fn select_alpha_by_cv(
    dataset: &Dataset,
    candidates: &[f64],
    folds: usize,
    template: &MapDpConfig,
) -> Result<CvSelection> {
    let values = sorted_candidates(candidates)?;
    let n = dataset.len();
    if folds < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    if folds > n {
        return Err(Error::invalid(format!("{folds} folds for {n} observations leaves a fold empty")));
    }
    let fold_of = fold_assignment(n, folds, template.seed);
    let splits: Vec<(Dataset, Dataset)> = (0..folds)
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
            if train.is_empty() {
                return Err(Error::invalid(format!("fold {f} leaves no training data")));
            }
            Ok((dataset.subset(&train)?, dataset.subset(&test)?))
        })
        .collect::<Result<_>>()?;

    let fold_scores = values
        .par_iter()
        .map(|&alpha| {
            let cfg = MapDpConfig { alpha, ..template.clone() };
            splits
                .iter()
                .map(|(train, test)| {
                    let fit = fit_mapdp(train, &cfg)?;
                    let model = FittedModel::from_partition(train, &fit.partition, cfg.prior.clone(), alpha)?;
                    let mut total = 0.0;
                    for row in test.rows() {
                        total -= predict_marginal(row, &model)?;
                    }
                    Ok(total / test.len() as f64)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let scores = fold_scores.iter().map(|f| f.iter().sum::<f64>() / f.len() as f64).collect();
    let grid = AlphaGrid { values, scores };
    Ok(CvSelection { alpha: grid.best(), grid, fold_scores })
}

/// Prior on the concentration for the MAP estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaPrior {
    /// `IG(1/2, 1/2)`.
    InverseGamma,
    /// `Gamma(shape, rate)`.
    Gamma { shape: f64, rate: f64 },
}

impl Default for AlphaPrior {
    fn default() -> Self {
        AlphaPrior::Gamma { shape: 1.0, rate: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSolver {
    Newton,
    GoldenSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub alpha: f64,
    pub iterations: usize,
    pub solver: AlphaSolver,
}

/// `-log p(alpha | N, K)` up to a constant, as a function of
/// `log_alpha`, with its first and second derivatives in `log_alpha`.
pub fn neg_log_alpha_posterior(log_alpha: f64, n: usize, k: usize, prior: AlphaPrior) -> (f64, f64, f64) {
    let a = log_alpha.exp();
    let nf = n as f64;
    let kf = k as f64;
    let (power, extra, extra_d1, extra_d2) = match prior {
        // alpha^(K - 3/2) exp(-1 / (2 alpha))
        AlphaPrior::InverseGamma => (kf - 1.5, -0.5 / a, 0.5 / a, -0.5 / a),
        // alpha^(K + shape - 1) exp(-rate alpha)
        AlphaPrior::Gamma { shape, rate } => (kf + shape - 1.0, -rate * a, -rate * a, -rate * a),
    };
    let log_p = ln_gamma(a) - ln_gamma(a + nf) + power * log_alpha + extra;
    let d_psi = digamma(a) - digamma(a + nf);
    let d1 = a * d_psi + power + extra_d1;
    let d2 = a * d_psi + a * a * (trigamma(a) - trigamma(a + nf)) + extra_d2;
    (-log_p, -d1, -d2)
}

fn check_nk(n: usize, k: usize, prior: AlphaPrior) -> Result<()> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= K <= N, got N={n}, K={k}")));
    }
    if let AlphaPrior::Gamma { shape, rate } = prior {
        if !(shape > 0.0 && rate > 0.0) {
            return Err(Error::invalid("Gamma prior on alpha needs shape > 0 and rate > 0"));
        }
    }
    Ok(())
}

const NEWTON_MAX_ITERS: usize = 100;
const LOG_ALPHA_BRACKET: (f64, f64) = (-20.0, 20.0);

/// Posterior mode of the concentration given `n` observations in `k`
/// non-empty clusters. Newton's method on `log alpha` with step halving;
/// golden-section search on a fixed bracket when Newton does not converge.
pub fn alpha_map_newton(n: usize, k: usize, prior: AlphaPrior) -> Result<AlphaEstimate> {
    check_nk(n, k, prior)?;
    let f = |x: f64| neg_log_alpha_posterior(x, n, k, prior);
    // K ≈ alpha log(1 + N / alpha) start
    let mut x = ((k as f64) / (1.0 + n as f64).ln()).max(1e-3).ln();
    let (mut fx, mut g, mut h) = f(x);
    for it in 1..=NEWTON_MAX_ITERS {
        let mut step = if h > 0.0 { -g / h } else { -g.signum() };
        step = step.clamp(-2.0, 2.0);
        let mut accepted = false;
        for _ in 0..60 {
            let cand = x + step;
            let (fc, gc, hc) = f(cand);
            if fc.is_finite() && fc <= fx + 1e-12 * fx.abs().max(1.0) {
                x = cand;
                fx = fc;
                g = gc;
                h = hc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || x < LOG_ALPHA_BRACKET.0 || x > LOG_ALPHA_BRACKET.1 {
            break;
        }
        if g.abs() < 1e-10 * (1.0 + fx.abs()) || step.abs() < 1e-14 {
            return Ok(AlphaEstimate { alpha: x.exp(), iterations: it, solver: AlphaSolver::Newton });
        }
    }
    let (x, iterations) = golden_section(|x| f(x).0, LOG_ALPHA_BRACKET.0, LOG_ALPHA_BRACKET.1, 1e-12);
    Ok(AlphaEstimate { alpha: x.exp(), iterations, solver: AlphaSolver::GoldenSection })
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, usize) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iters = 0;
    while hi - lo > tol * (1.0 + c.abs()) && iters < 500 {
        iters += 1;
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    (0.5 * (lo + hi), iters)
}
