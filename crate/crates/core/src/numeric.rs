//! Small numerical kernels shared by the norm, bound, and simulation modules.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::sync::OnceLock;

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise summation of `term(i)` for `i in 0..n`, with a fixed split so the
/// result does not depend on scheduling.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, term: &F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, term: &F) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            let mut s = 0.0;
            for i in lo..hi {
                s += term(i);
            }
            s
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, term) + rec(mid, hi, term)
        }
    }
    rec(0, n, term)
}

pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), &|i| values[i])
}

/// `E|N(0,1)|^γ = 2^{γ/2} Γ((γ+1)/2) / √π`, for γ > -1.
pub fn normal_abs_moment(gamma: f64) -> f64 {
    if gamma == 0.0 {
        return 1.0;
    }
    (0.5 * gamma * std::f64::consts::LN_2 + ln_gamma(0.5 * (gamma + 1.0)) - 0.5 * PI.ln()).exp()
}

/// `E R^γ` for a Rayleigh variable `R = |Z|`, `Z` standard bivariate normal.
fn rayleigh_moment(gamma: f64) -> f64 {
    (0.5 * gamma * std::f64::consts::LN_2 + ln_gamma(1.0 + 0.5 * gamma)).exp()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl64() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(64))
}

/// 64-point Gauss-Legendre rule on `[lo, hi]`.
pub fn integrate(lo: f64, hi: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    let (nodes, weights) = gl64();
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut s = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        s += w * f(mid + half * x);
    }
    s * half
}

/// `E | |A|^p - |B|^p |^q` for a centered Gaussian pair with the given
/// covariance. Polar coordinates split the expectation into a closed-form
/// radial moment and a one-dimensional angular integral, which is evaluated
/// piecewise between the kinks of the integrand.
pub fn gaussian_power_increment_moment(var_a: f64, var_b: f64, cov: f64, p: f64, q: f64) -> f64 {
    let var_a = var_a.max(0.0);
    let var_b = var_b.max(0.0);
    // A = l11 z1, B = l21 z1 + l22 z2
    let l11 = var_a.sqrt();
    let (l21, l22) = if l11 > 0.0 {
        let l21 = cov / l11;
        (l21, (var_b - l21 * l21).max(0.0).sqrt())
    } else {
        (0.0, var_b.sqrt())
    };
    if l11 == 0.0 && l21 == 0.0 && l22 == 0.0 {
        return 0.0;
    }
    let h = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let a = (l11 * c).abs();
        let b = (l21 * c + l22 * s).abs();
        (a.powf(p) - b.powf(p)).abs().powf(q)
    };
    // kinks where A = 0, B = 0, A = B, A = -B: each is a line through the origin
    let mut cuts = vec![0.0, PI];
    let lines = [
        (l11, 0.0),
        (l21, l22),
        (l11 - l21, -l22),
        (l11 + l21, l22),
    ];
    for (cc, ss) in lines {
        // cc cos φ + ss sin φ = 0
        if cc == 0.0 && ss == 0.0 {
            continue;
        }
        let mut phi = (-cc).atan2(ss);
        if phi < 0.0 {
            phi += PI;
        }
        if phi >= PI {
            phi -= PI;
        }
        cuts.push(phi);
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    // the integrand has period π
    let mut angular = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            angular += integrate(w[0], w[1], &h);
        }
    }
    angular *= 2.0;
    rayleigh_moment(p * q) * angular / (2.0 * PI)
}

/// `E|μ + σZ|^γ` for standard normal `Z`, through the Kummer series
/// `e^{-x} ₁F₁((γ+1)/2; 1/2; x)`, `x = μ²/2σ²`, whose terms are all positive.
pub fn shifted_normal_abs_moment(mu: f64, sigma: f64, gamma: f64) -> f64 {
    let sigma = sigma.abs();
    if sigma == 0.0 {
        return mu.abs().powf(gamma);
    }
    let x = 0.5 * (mu / sigma).powi(2);
    if x > 700.0 {
        // the zero of the integrand lies beyond |z| = 37, where φ underflows
        let f = |z: f64| (mu + sigma * z).abs().powf(gamma) * (-0.5 * z * z).exp();
        let mut s = 0.0;
        for i in 0..16 {
            let lo = -38.0 + 4.75 * i as f64;
            s += integrate(lo, lo + 4.75, &f);
        }
        return s / (2.0 * PI).sqrt();
    }
    let a = 0.5 * (gamma + 1.0);
    let mut term = (-x).exp();
    let mut sum = term;
    let mut n = 0.0;
    while n < 100_000.0 {
        term *= (a + n) / ((0.5 + n) * (n + 1.0)) * x;
        sum += term;
        n += 1.0;
        if term <= 1e-17 * sum && n > x {
            break;
        }
    }
    sigma.powf(gamma) * normal_abs_moment(gamma) * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
    }

    #[test]
    fn normal_moments() {
        assert!((normal_abs_moment(2.0) - 1.0).abs() < 1e-14);
        assert!((normal_abs_moment(4.0) - 3.0).abs() < 1e-13);
        assert!((normal_abs_moment(1.0) - (2.0 / PI).sqrt()).abs() < 1e-14);
        assert!((normal_abs_moment(6.0) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn power_increment_independent_case() {
        // Var equal, p = 2, q = 1: A^2 - B^2 = (A-B)(A+B), independent factors
        let v = 1.3;
        let c = 0.4;
        let got = gaussian_power_increment_moment(v, v, c, 2.0, 1.0);
        let su = (2.0 * v - 2.0 * c).sqrt();
        let sv = (2.0 * v + 2.0 * c).sqrt();
        let want = su * sv * 2.0 / PI;
        assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
    }

    #[test]
    fn power_increment_against_even_moments() {
        // q = 2, p = 2: E (A^2 - B^2)^2 = E A^4 + E B^4 - 2 E A^2 B^2
        let (va, vb, c) = (1.0, 2.0, 0.7);
        let want = 3.0 * va * va + 3.0 * vb * vb - 2.0 * (va * vb + 2.0 * c * c);
        let got = gaussian_power_increment_moment(va, vb, c, 2.0, 2.0);
        assert!((got - want).abs() < 1e-11 * want, "{got} vs {want}");
        // one side degenerate: E|A|^{pq}
        let got = gaussian_power_increment_moment(2.0, 0.0, 0.0, 3.0, 1.0);
        let want = 2f64.powf(1.5) * normal_abs_moment(3.0);
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn shifted_normal_moments() {
        // E(μ + Z)^2 = μ² + 1, E(μ + Z)^4 = μ⁴ + 6μ² + 3
        for mu in [0.0, 0.3, 2.0, 7.0] {
            let m2 = shifted_normal_abs_moment(mu, 1.0, 2.0);
            assert!((m2 - (mu * mu + 1.0)).abs() < 1e-12 * (mu * mu + 1.0));
            let want = mu.powi(4) + 6.0 * mu * mu + 3.0;
            assert!((shifted_normal_abs_moment(mu, 1.0, 4.0) - want).abs() < 1e-11 * want);
        }
        assert!((shifted_normal_abs_moment(0.0, 2.0, 3.0) - 8.0 * normal_abs_moment(3.0)).abs() < 1e-12);
        // far regime goes through quadrature
        let far = shifted_normal_abs_moment(50.0, 1.0, 2.0);
        assert!((far - 2501.0).abs() < 1e-8 * 2501.0);
        assert_eq!(shifted_normal_abs_moment(-2.0, 0.0, 3.0), 8.0);
    }
}
