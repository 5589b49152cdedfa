//! Estimators and confidence statements used by the Monte Carlo checks.

use super::rng::stream;
use crate::numeric::pairwise_sum;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

pub const CONFIDENCE: f64 = 0.99;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median of the means of `⌈√n⌉` contiguous blocks of near-equal size.
pub fn median_of_means(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    let blocks = ((n as f64).sqrt().ceil() as usize).clamp(1, n);
    let mut means = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let lo = b * n / blocks;
        let hi = (b + 1) * n / blocks;
        means.push(mean(&values[lo..hi]));
    }
    means.sort_by(f64::total_cmp);
    median_sorted(&means)
}

/// Percentile bootstrap interval for the mean at the given two-sided level.
pub fn bootstrap_mean_ci(values: &[f64], level: f64, resamples: usize, seed: u64, label: &str) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = stream(seed, label, u64::MAX);
    let mut means = Vec::with_capacity(resamples);
    let mut buf = vec![0.0; n];
    for _ in 0..resamples {
        for b in buf.iter_mut() {
            *b = values[rng.random_range(0..n)];
        }
        means.push(mean(&buf));
    }
    means.sort_by(f64::total_cmp);
    let alpha = 0.5 * (1.0 - level);
    let pick = |q: f64| {
        let idx = (q * (resamples - 1) as f64).round() as usize;
        means[idx.min(resamples - 1)]
    };
    (pick(alpha), pick(1.0 - alpha))
}

/// Monte Carlo estimate of `E[value]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoments {
    pub functional: String,
    pub order: f64,
    pub replicates: usize,
    /// Replicates dropped because the functional was not finite.
    pub excluded: usize,
    pub estimate: f64,
    pub median_of_means: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub root_seed: u64,
}

impl EmpiricalMoments {
    /// Summarizes per-replicate values of `functional^order`; the interval
    /// is widened to contain the median of means.
    pub fn from_values(functional: &str, order: f64, values: &[f64], root_seed: u64) -> Self {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let estimate = mean(&finite);
        let mom = median_of_means(&finite);
        let (lo, hi) = bootstrap_mean_ci(&finite, CONFIDENCE, BOOTSTRAP_RESAMPLES, root_seed, functional);
        Self {
            functional: functional.to_string(),
            order,
            replicates: finite.len(),
            excluded: values.len() - finite.len(),
            estimate,
            median_of_means: mom,
            ci_low: lo.min(mom),
            ci_high: hi.max(mom),
            level: CONFIDENCE,
            root_seed,
        }
    }

    /// `(E X)^{1/order}` bounds: estimate and interval mapped through the
    /// root.
    pub fn root(&self) -> (f64, f64, f64) {
        let r = 1.0 / self.order;
        (self.ci_low.max(0.0).powf(r), self.estimate.max(0.0).powf(r), self.ci_high.max(0.0).powf(r))
    }
}

/// One-sided upper Clopper-Pearson bound for a binomial proportion.
pub fn clopper_pearson_upper(successes: usize, trials: usize, level: f64) -> f64 {
    assert!(trials > 0 && successes <= trials);
    if successes == trials {
        return 1.0;
    }
    if successes == 0 {
        return 1.0 - (1.0 - level).powf(1.0 / trials as f64);
    }
    // upper limit solves P(Bin(n, p) <= k) = 1 - level, i.e. I_p(k+1, n-k) = level
    let (a, b) = ((successes + 1) as f64, (trials - successes) as f64);
    let (mut lo, mut hi) = (successes as f64 / trials as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    hi
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic two-sample critical value at level 0.99:
/// `sqrt(ln(2/0.01)/2) · sqrt((n+m)/(nm))`.
pub fn ks_critical_99(n: usize, m: usize) -> f64 {
    let c = (0.5 * (2.0f64 / 0.01).ln()).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_values() {
        let e = EmpiricalMoments::from_values("one", 1.0, &vec![1.0; 200], 1);
        assert_eq!(e.estimate, 1.0);
        assert_eq!((e.ci_low, e.ci_high), (1.0, 1.0));
        assert_eq!(e.median_of_means, 1.0);
    }

    #[test]
    fn excluded_values_are_counted() {
        let mut v = vec![2.0; 100];
        v[3] = f64::NAN;
        v[7] = f64::INFINITY;
        let e = EmpiricalMoments::from_values("f", 1.0, &v, 1);
        assert_eq!((e.replicates, e.excluded), (98, 2));
    }

    #[test]
    fn median_of_means_blocks() {
        let v: Vec<f64> = (0..9).map(|i| i as f64).collect();
        // blocks {0,1,2},{3,4,5},{6,7,8}
        assert_eq!(median_of_means(&v), 4.0);
    }

    #[test]
    fn clopper_pearson() {
        let r = 1000;
        assert!((clopper_pearson_upper(0, r, 0.99) - (1.0 - 0.01f64.powf(1.0 / r as f64))).abs() < 1e-15);
        assert_eq!(clopper_pearson_upper(5, 5, 0.99), 1.0);
        // reference value: one-sided 99% upper limit for 10/100
        let u = clopper_pearson_upper(10, 100, 0.99);
        assert!((beta_reg(11.0, 90.0, u) - 0.99).abs() < 1e-9);
        assert!(u > 0.1 && u < 0.2);
    }

    #[test]
    fn ks_values() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[2.5, 3.5]) - 0.5).abs() < 1e-15);
        assert!((ks_critical_99(100, 100) - 1.6276 * 0.02f64.sqrt()).abs() < 1e-4);
    }
}
