//! Special functions used by the log-space likelihoods.

pub use statrs::function::gamma::{digamma, ln_gamma};

/// Trigamma function, the derivative of [`digamma`].
///
/// Recurrence up to `x >= 12`, then the asymptotic expansion.
pub fn trigamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 && x.floor() == x {
        return f64::NAN;
    }
    if x < 0.0 {
        // reflection: psi1(1-x) + psi1(x) = pi^2 / sin^2(pi x)
        let s = (std::f64::consts::PI * x).sin();
        return -trigamma(1.0 - x) + std::f64::consts::PI.powi(2) / (s * s);
    }
    let mut acc = 0.0;
    let mut z = x;
    while z < 12.0 {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    let r = 1.0 / z;
    let r2 = r * r;
    // 1/z + 1/(2z^2) + sum B_{2k} / z^{2k+1}
    let series = r
        + 0.5 * r2
        + r * r2
            * (1.0 / 6.0
                - r2 * (1.0 / 30.0
                    - r2 * (1.0 / 42.0 - r2 * (1.0 / 30.0 - r2 * (5.0 / 66.0 - r2 * 691.0 / 2730.0)))));
    acc + series
}

/// `log(sum(exp(v)))`, stable for large magnitudes. Empty input gives `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// ln(n!) for a count.
pub(crate) fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigamma_known_values() {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((trigamma(1.0) - pi2_6).abs() < 1e-13);
        assert!((trigamma(0.5) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
        assert!((trigamma(2.0) - (pi2_6 - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn trigamma_matches_digamma_derivative() {
        for &x in &[0.01f64, 0.3, 1.7, 5.0, 11.9, 12.1, 80.0, 1e4] {
            let h = 1e-5 * x.max(1e-2);
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            let t = trigamma(x);
            assert!((fd - t).abs() <= 1e-6 * t.abs(), "x={x}: fd={fd} t={t}");
        }
    }

    #[test]
    fn log_sum_exp_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1e6, 0.0]) - 0.0).abs() < 1e-12);
    }
}
