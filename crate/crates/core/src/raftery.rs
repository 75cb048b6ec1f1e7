//! Raftery–Lewis run-length diagnostic for a scalar MCMC trace.
//!
//! The trace is dichotomized at its empirical `q`-quantile, the thinning
//! interval is increased until a first-order Markov chain is preferred to a
//! second-order one by BIC, and the two-state transition estimates give the
//! burn-in and the number of further iterations needed to estimate the
//! `q`-quantile to within `±r` with probability `s`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RafteryConfig {
    /// Quantile to estimate (`q`).
    pub quantile: f64,
    /// Half-width of the accuracy interval (`r`).
    pub accuracy: f64,
    /// Probability of achieving the accuracy (`s`).
    pub probability: f64,
    /// Tolerance for the burn-in estimate.
    pub converge_eps: f64,
}

impl RafteryConfig {
    pub fn new(quantile: f64, accuracy: f64, probability: f64) -> Result<Self> {
        let cfg = RafteryConfig { quantile, accuracy, probability, converge_eps: 1e-3 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.quantile) || !open_unit(self.probability) || !(self.accuracy > 0.0) {
            return Err(Error::invalid(format!(
                "Raftery-Lewis needs 0<q<1, r>0, 0<s<1; got q={}, r={}, s={}",
                self.quantile, self.accuracy, self.probability
            )));
        }
        if !(self.converge_eps > 0.0) {
            return Err(Error::invalid("converge_eps must be > 0"));
        }
        Ok(())
    }

    fn z(&self) -> f64 {
        Normal::standard().inverse_cdf(0.5 * (1.0 + self.probability))
    }

    /// Iterations needed for an independent chain:
    /// `ceil(z² q (1-q) / r²)` with `z = Φ⁻¹((1+s)/2)`.
    pub fn n_min(&self) -> usize {
        let z = self.z();
        (z * z * self.quantile * (1.0 - self.quantile) / (self.accuracy * self.accuracy)).ceil() as usize
    }
}

impl Default for RafteryConfig {
    fn default() -> Self {
        RafteryConfig { quantile: 0.025, accuracy: 0.1, probability: 0.95, converge_eps: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RafteryLewis {
    pub n_min: usize,
    /// Total iterations required (burn-in included).
    pub n_required: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// `n_required / n_min`.
    pub dependence_factor: f64,
    /// The dichotomized chain never switched state in one direction.
    pub degenerate: bool,
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7).
pub fn quantile_type7(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn g2_second_vs_first(seq: &[u8]) -> f64 {
    let mut t = [[[0.0f64; 2]; 2]; 2];
    for w in seq.windows(3) {
        t[w[0] as usize][w[1] as usize][w[2] as usize] += 1.0;
    }
    let mut g2 = 0.0;
    for i1 in 0..2 {
        for i2 in 0..2 {
            for i3 in 0..2 {
                let obs = t[i1][i2][i3];
                if obs > 0.0 {
                    let row: f64 = t[i1][i2].iter().sum();
                    let col: f64 = (0..2).map(|a| t[a][i2][i3]).sum();
                    let mid: f64 = (0..2).map(|a| t[a][i2][0] + t[a][i2][1]).sum();
                    g2 += 2.0 * obs * (obs / (row * col / mid)).ln();
                }
            }
        }
    }
    g2
}

pub fn raftery_lewis(chain: &[f64], config: &RafteryConfig) -> Result<RafteryLewis> {
    config.validate()?;
    let n_min = config.n_min();
    if chain.len() < n_min.max(3) {
        return Err(Error::InsufficientChain { required: n_min.max(3), available: chain.len() });
    }
    let degenerate = RafteryLewis {
        n_min,
        n_required: n_min,
        burn_in: 0,
        thin: 1,
        dependence_factor: 1.0,
        degenerate: true,
    };
    let cut = quantile_type7(chain, config.quantile);
    let binary: Vec<u8> = chain.iter().map(|&v| u8::from(v <= cut)).collect();
    if binary.iter().all(|&b| b == binary[0]) {
        return Ok(degenerate);
    }

    let mut thin = 0;
    let thinned = loop {
        thin += 1;
        let seq: Vec<u8> = binary.iter().step_by(thin).copied().collect();
        if seq.len() < 3 {
            return Err(Error::InsufficientChain { required: 3 * thin, available: chain.len() });
        }
        let bic = g2_second_vs_first(&seq) - 2.0 * ((seq.len() - 2) as f64).ln();
        if bic < 0.0 {
            break seq;
        }
    };

    let mut tran = [[0.0f64; 2]; 2];
    for w in thinned.windows(2) {
        tran[w[0] as usize][w[1] as usize] += 1.0;
    }
    let from0 = tran[0][0] + tran[0][1];
    let from1 = tran[1][0] + tran[1][1];
    if from0 == 0.0 || from1 == 0.0 {
        return Ok(degenerate);
    }
    let a = tran[0][1] / from0;
    let b = tran[1][0] / from1;
    if a == 0.0 || b == 0.0 {
        return Ok(degenerate);
    }
    let z = config.z();
    let r = config.accuracy;
    let lambda = (1.0 - a - b).abs();
    let burn_periods = if lambda == 0.0 {
        0.0
    } else {
        ((config.converge_eps * (a + b) / a.max(b)).ln() / lambda.ln()).ceil().max(0.0)
    };
    let burn_in = burn_periods as usize * thin;
    let prec = (2.0 - a - b) * a * b * z * z / ((a + b).powi(3) * r * r);
    let keep = (prec * thin as f64).ceil() as usize;
    let n_required = burn_in + keep;
    Ok(RafteryLewis {
        n_min,
        n_required,
        burn_in,
        thin,
        dependence_factor: n_required as f64 / n_min as f64,
        degenerate: false,
    })
}
