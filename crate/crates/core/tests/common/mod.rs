#![allow(dead_code)]

use crpmap::{Dataset, NGPrior};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every set partition of `n` items as a restricted growth string.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for k in 0..=max + 1 {
            prefix.push(k);
            rec(prefix, max.max(k), n, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut prefix = vec![0];
    rec(&mut prefix, 0, n, &mut out);
    out
}

pub fn counts(labels: &[usize]) -> Vec<usize> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut c = vec![0; k];
    for &l in labels {
        c[l] += 1;
    }
    c
}

pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    quadrature::double_exponential::integrate(f, a, b, tol).integral
}

/// `∫ f` over the real line through `x = center + scale * tan(θ)`.
pub fn integrate_line(f: impl Fn(f64) -> f64, center: f64, scale: f64, tol: f64) -> f64 {
    let h = std::f64::consts::FRAC_PI_2;
    integrate(
        |t| {
            let c = t.cos();
            scale * f(center + scale * t.tan()) / (c * c)
        },
        -h,
        h,
        tol,
    )
}

fn normal_pdf(x: f64, mean: f64, prec: f64) -> f64 {
    (prec / (2.0 * std::f64::consts::PI)).sqrt() * (-0.5 * prec * (x - mean) * (x - mean)).exp()
}

/// `∫∫ N(x | μ, 1/τ) N(μ | m, 1/(cτ)) Gamma(τ | a, b) dμ dτ` by nested
/// quadrature; `τ` is integrated on a log scale.
pub fn ng_compound_density(x: f64, m: f64, c: f64, a: f64, b: f64) -> f64 {
    let log_gamma_norm = a * b.ln() - ln_gamma(a);
    let inner = |tau: f64| {
        let center = (x + c * m) / (1.0 + c);
        let sd = 1.0 / (tau * (1.0 + c)).sqrt();
        let peak = normal_pdf(x, center, tau) * normal_pdf(center, m, c * tau);
        integrate(
            |mu| normal_pdf(x, mu, tau) * normal_pdf(mu, m, c * tau),
            center - 40.0 * sd,
            center + 40.0 * sd,
            1e-14 * peak.max(1e-300),
        )
    };
    let mode = (a / b).ln();
    let lo = mode - 40.0 / a.min(1.0);
    let hi = ((a + 40.0 * a.sqrt() + 60.0) / b).ln();
    integrate(
        |u| {
            let tau = u.exp();
            let log_g = log_gamma_norm + (a - 1.0) * u - b * tau;
            inner(tau) * (log_g + u).exp()
        },
        lo,
        hi,
        1e-13,
    )
}

/// NG posterior parameters from a raw member list, deviation form.
pub fn posterior_from_members(members: &[&[f64]], prior: &NGPrior) -> (Vec<f64>, f64, Vec<f64>, f64) {
    let n = members.len() as f64;
    let c0 = prior.mean_scale;
    let dim = prior.mean.len();
    if members.is_empty() {
        return (prior.mean.clone(), c0, prior.rate.clone(), prior.shape);
    }
    let mut m = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    for d in 0..dim {
        let xbar = members.iter().map(|x| x[d]).sum::<f64>() / n;
        let dev2: f64 = members.iter().map(|x| (x[d] - xbar) * (x[d] - xbar)).sum();
        m[d] = (c0 * prior.mean[d] + n * xbar) / (c0 + n);
        b[d] = prior.rate[d] + 0.5 * dev2 + c0 * n * (xbar - prior.mean[d]).powi(2) / (2.0 * (c0 + n));
    }
    (m, c0 + n, b, prior.shape + 0.5 * n)
}

/// Appendix form of the per-cluster assignment score without the count or
/// concentration term and without the common `D/2 log 2π` constant.
pub fn appendix_q(x: &[f64], m: &[f64], c: f64, b: &[f64], a: f64) -> f64 {
    let dim = x.len() as f64;
    let mut q = dim * (ln_gamma(a) - ln_gamma(a + 0.5)) - 0.5 * dim * (c / (c + 1.0)).ln();
    for d in 0..x.len() {
        q += 0.5 * b[d].ln();
        q += (a + 0.5) * (1.0 + c / (2.0 * b[d] * (c + 1.0)) * (x[d] - m[d]).powi(2)).ln();
    }
    q
}

/// `log p(x | members)` from the appendix expansion.
pub fn log_predictive(x: &[f64], members: &[&[f64]], prior: &NGPrior) -> f64 {
    let (m, c, b, a) = posterior_from_members(members, prior);
    -appendix_q(x, &m, c, &b, a) - 0.5 * x.len() as f64 * (2.0 * std::f64::consts::PI).ln()
}

pub fn crp_log_joint(counts: &[usize], alpha: f64) -> f64 {
    let n: usize = counts.iter().sum();
    ln_gamma(alpha) - ln_gamma(n as f64 + alpha)
        + counts.len() as f64 * alpha.ln()
        + counts.iter().map(|&c| ln_gamma(c as f64)).sum::<f64>()
}

/// `-log p(X, z)` by the chain rule: each cluster's members are scored one
/// after another by the predictive given the members before them.
pub fn joint_nll(data: &Dataset, labels: &[usize], prior: &NGPrior, alpha: f64) -> f64 {
    let c = counts(labels);
    let mut nll = -crp_log_joint(&c, alpha);
    for k in 0..c.len() {
        let members: Vec<&[f64]> = (0..data.len()).filter(|&i| labels[i] == k).map(|i| data.row(i)).collect();
        for j in 0..members.len() {
            nll -= log_predictive(members[j], &members[..j], prior);
        }
    }
    nll
}

fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Algorithm 1 recomputing every posterior from member lists. Returns the
/// labels after each sweep and the NLL trace.
pub fn naive_mapdp(
    data: &Dataset,
    init: &[usize],
    prior: &NGPrior,
    alpha: f64,
    eps: f64,
    max_sweeps: usize,
) -> (Vec<Vec<usize>>, Vec<f64>) {
    let n = data.len();
    let mut z = canonical(init);
    let mut k = counts(&z).len();
    let mut prev = joint_nll(data, &z, prior, alpha);
    let mut sweeps = Vec::new();
    let mut trace = Vec::new();
    while trace.len() < max_sweeps {
        for i in 0..n {
            let own = z[i];
            z[i] = usize::MAX;
            if !z.contains(&own) {
                for l in z.iter_mut().filter(|l| **l != usize::MAX && **l > own) {
                    *l -= 1;
                }
                k -= 1;
            }
            let x = data.row(i);
            let mut q = Vec::with_capacity(k + 1);
            for j in 0..k {
                let members: Vec<&[f64]> = (0..n).filter(|&t| z[t] == j).map(|t| data.row(t)).collect();
                let (m, c, b, a) = posterior_from_members(&members, prior);
                q.push(appendix_q(x, &m, c, &b, a) - (members.len() as f64).ln());
            }
            let (m, c, b, a) = posterior_from_members(&[], prior);
            q.push(appendix_q(x, &m, c, &b, a) - alpha.ln());
            let mut best = 0;
            for j in 1..q.len() {
                if q[j] < q[best] {
                    best = j;
                }
            }
            if best == k {
                k += 1;
            }
            z[i] = best;
        }
        z = canonical(&z);
        let nll = joint_nll(data, &z, prior, alpha);
        sweeps.push(z.clone());
        trace.push(nll);
        if prev - nll < eps {
            break;
        }
        prev = nll;
    }
    (sweeps, trace)
}

pub fn entropy_oracle(labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let mut map = std::collections::HashMap::new();
    for l in labels {
        *map.entry(*l).or_insert(0usize) += 1;
    }
    -map.values().map(|&c| c as f64 / n * (c as f64 / n).ln()).sum::<f64>()
}

/// Sum-normalized NMI from entropies: `I = H(U) + H(V) - H(U,V)`.
pub fn nmi_sum_oracle(u: &[usize], v: &[usize]) -> f64 {
    let joint: Vec<usize> = u.iter().zip(v).map(|(a, b)| a * 100_000 + b).collect();
    let (hu, hv, huv) = (entropy_oracle(u), entropy_oracle(v), entropy_oracle(&joint));
    2.0 * (hu + hv - huv) / (hu + hv)
}

pub fn nmi_max_oracle(u: &[usize], v: &[usize]) -> f64 {
    let joint: Vec<usize> = u.iter().zip(v).map(|(a, b)| a * 100_000 + b).collect();
    let (hu, hv, huv) = (entropy_oracle(u), entropy_oracle(v), entropy_oracle(&joint));
    (hu + hv - huv) / hu.max(hv)
}

/// Dataset of `n` points in `dim` dimensions drawn from a few separated
/// Gaussian blobs.
pub fn blob_dataset(rng: &mut impl Rng, n: usize, dim: usize, blobs: usize, spread: f64) -> Dataset {
    let centers: Vec<Vec<f64>> =
        (0..blobs).map(|_| (0..dim).map(|_| rng.random_range(-spread..spread)).collect()).collect();
    let mut values = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let c = &centers[rng.random_range(0..blobs)];
        for &cd in c {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            values.push(cd + z);
        }
    }
    Dataset::new(values, n, dim).unwrap()
}
