//! Moment bound for the first norm `|ξ|_{p,X;∞,T}` of a single random field.

use super::{conjugate, series_over, BoundKind, BoundOptions, MomentBoundReport, MomentOracle};
use crate::error::{Error, Result};
use crate::measure_grid::MeasureSpace;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How the distance `d̄_{p,Q}(t,s)` on `T` is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DbarForm {
    /// `∫ [E| |ξ(x,t)|^p − |ξ(x,s)|^p |^Q]^{1/Q} μ(dx)`, the form the
    /// Minkowski step produces.
    #[default]
    Derived,
    /// `∫ |E|ξ(x,t)|^p − E|ξ(x,s)|^p|^{1/Q} μ(dx)`. Not a valid bound in
    /// general; kept for comparison.
    Literal,
}

/// `σ̄_{p,Q} = max_t ∫ [E|ξ(x,t)|^{pQ}]^{1/Q} μ(dx)`.
pub fn sigma_bar(oracle: &dyn MomentOracle, p: f64, q: f64, x_space: &MeasureSpace, nt: usize) -> Result<f64> {
    check_pq(p, q, 1.0)?;
    let mut best = 0.0f64;
    for t in 0..nt {
        let mut s = 0.0;
        for (x, w) in x_space.weights().iter().enumerate() {
            s += w * oracle.abs_moment(p * q, x, t)?.powf(1.0 / q);
        }
        best = best.max(s);
    }
    Ok(best)
}

pub(crate) fn check_pq(p: f64, q: f64, p_min: f64) -> Result<()> {
    if !(p >= p_min && p.is_finite()) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            domain: if p_min >= 2.0 { "[2, inf)" } else { "[1, inf)" },
        });
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::Domain {
            name: "Q",
            value: q,
            domain: "[1, inf)",
        });
    }
    Ok(())
}

/// `[E| |ξ_t|^p − |ξ_s|^p |^Q]^{1/Q}` at one `x`: exact when the oracle has a
/// closed form, otherwise `p |Δ|_{αQ} (|ξ_t|^{p-1}_{(p-1)βQ} + |ξ_s|^{p-1}_{(p-1)βQ})`
/// minimized over the Hölder grid.
fn power_increment_norm(
    oracle: &dyn MomentOracle,
    p: f64,
    q: f64,
    x: usize,
    t: usize,
    s: usize,
    alpha_grid: &[f64],
) -> Result<f64> {
    if let Some(m) = oracle.power_increment_moment(p, q, x, t, s) {
        return Ok(m?.powf(1.0 / q));
    }
    if p == 1.0 {
        // ||a| - |b|| <= |a - b|
        return Ok(oracle.increment_moment(q, x, t, s)?.powf(1.0 / q));
    }
    let mut best = f64::INFINITY;
    let mut last_err = None;
    for &alpha in alpha_grid {
        let beta = conjugate(alpha);
        let gamma = (p - 1.0) * beta * q;
        let v = alpha * q;
        let attempt = (|| -> Result<f64> {
            let rho = oracle.increment_moment(v, x, t, s)?.powf(1.0 / v);
            let a = oracle.abs_moment(gamma, x, t)?.powf((p - 1.0) / gamma);
            let b = oracle.abs_moment(gamma, x, s)?.powf((p - 1.0) / gamma);
            Ok(p * rho * (a + b))
        })();
        match attempt {
            Ok(val) => best = best.min(val),
            Err(e) => last_err = Some(e),
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(last_err.unwrap_or(Error::Empty("Hölder exponent grid")))
    }
}

/// `d̄_{p,Q}(t, s)` in the requested form.
pub fn dbar_distance(
    oracle: &dyn MomentOracle,
    p: f64,
    q: f64,
    t: usize,
    s: usize,
    x_space: &MeasureSpace,
    form: DbarForm,
    alpha_grid: &[f64],
) -> Result<f64> {
    check_pq(p, q, 1.0)?;
    if t == s {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (x, w) in x_space.weights().iter().enumerate() {
        let v = match form {
            DbarForm::Derived => power_increment_norm(oracle, p, q, x, t, s, alpha_grid)?,
            DbarForm::Literal => (oracle.abs_moment(p, x, t)? - oracle.abs_moment(p, x, s)?)
                .abs()
                .powf(1.0 / q),
        };
        total += w * v;
    }
    Ok(total)
}

/// Symmetric `|T| × |T|` matrix of [`dbar_distance`], pairs computed in parallel.
pub fn dbar_matrix(
    oracle: &dyn MomentOracle,
    p: f64,
    q: f64,
    x_space: &MeasureSpace,
    nt: usize,
    form: DbarForm,
    alpha_grid: &[f64],
) -> Result<Vec<f64>> {
    let pairs: Vec<(usize, usize)> = (0..nt).flat_map(|t| ((t + 1)..nt).map(move |s| (t, s))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(t, s)| dbar_distance(oracle, p, q, t, s, x_space, form, alpha_grid))
        .collect::<Result<_>>()?;
    let mut m = vec![0.0; nt * nt];
    for (&(t, s), v) in pairs.iter().zip(values) {
        m[t * nt + s] = v;
        m[s * nt + t] = v;
    }
    Ok(m)
}

/// Bound on `(E|ξ|^{pQ}_{p,X;∞,T})^{1/pQ}`: the entropy series over `T`
/// with distance `d̄/σ̄`, optimized over `θ`, to the power `1/p`.
pub fn prop21_bound(
    oracle: &dyn MomentOracle,
    p: f64,
    q: f64,
    x_space: &MeasureSpace,
    nt: usize,
    options: &BoundOptions,
) -> Result<MomentBoundReport> {
    if nt == 0 {
        return Err(Error::Empty("index space"));
    }
    let sigma = sigma_bar(oracle, p, q, x_space, nt)?;
    let distance = dbar_matrix(oracle, p, q, x_space, nt, options.dbar_form, &options.alpha_grid)?;
    if sigma == 0.0 && distance.iter().any(|d| *d > 0.0) {
        return Err(Error::Inconsistent(
            "zero moments with nonzero increments".into(),
        ));
    }
    let outcome = series_over(nt, &distance, sigma, q)?;
    let total = outcome.optimum.nu;
    Ok(MomentBoundReport {
        kind: BoundKind::Prop21,
        p,
        q,
        sigma_bar: sigma,
        scale: sigma,
        t_len: nt,
        distance_matrix: distance,
        alpha_choice: None,
        k_pq: None,
        dbar_form: Some(options.dbar_form),
        profile: outcome.profile,
        theta: outcome.optimum.theta,
        evaluation: outcome.optimum.evaluation,
        series_total: total,
        nu: total.powf(1.0 / p),
    })
}

/// The bare entropy-series bound `σ inf_θ Σ θ^{k-1} N^{1/Q}(T, d/σ, θ^k)` on
/// `|sup_t Y(t)|_Q` for a process with `|Y(t)|_Q <= σ` and
/// `|Y(t) − Y(s)|_Q <= d(t, s)`.
pub fn prop11_bound(distance: &[f64], nt: usize, sigma: f64, q: f64) -> Result<MomentBoundReport> {
    check_pq(1.0, q, 1.0)?;
    if nt == 0 {
        return Err(Error::Empty("index space"));
    }
    if sigma == 0.0 && distance.iter().any(|d| *d > 0.0) {
        return Err(Error::Inconsistent("zero scale with nonzero increments".into()));
    }
    let outcome = series_over(nt, distance, sigma, q)?;
    let total = outcome.optimum.nu;
    Ok(MomentBoundReport {
        kind: BoundKind::Prop11,
        p: 1.0,
        q,
        sigma_bar: sigma,
        scale: sigma,
        t_len: nt,
        distance_matrix: distance.to_vec(),
        alpha_choice: None,
        k_pq: None,
        dbar_form: None,
        profile: outcome.profile,
        theta: outcome.optimum.theta,
        evaluation: outcome.optimum.evaluation,
        series_total: total,
        nu: total,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{GaussianMoments, ScaleLaw, UniformSumMoments, ZeroMoments, DEFAULT_ALPHA_GRID};
    use super::*;
    use crate::numeric::gaussian_power_increment_moment;

    #[test]
    fn sigma_bar_gaussian_examples() {
        let mass = 2.5;
        let x = MeasureSpace::uniform(4, mass / 4.0).unwrap();
        let g = GaussianMoments::constant_in_t(4, 3, 1.0);
        assert!((sigma_bar(&g, 2.0, 1.0, &x, 3).unwrap() - mass).abs() < 1e-13);
        assert!((sigma_bar(&g, 2.0, 2.0, &x, 3).unwrap() - mass * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(sigma_bar(&ZeroMoments, 2.0, 1.0, &x, 3).unwrap(), 0.0);
    }

    #[test]
    fn dbar_examples() {
        let x = MeasureSpace::uniform(2, 0.5).unwrap();
        let g = GaussianMoments::constant_in_t(2, 3, 1.0);
        for form in [DbarForm::Derived, DbarForm::Literal] {
            assert_eq!(dbar_distance(&g, 2.0, 1.0, 1, 1, &x, form, &DEFAULT_ALPHA_GRID).unwrap(), 0.0);
            assert!(dbar_distance(&g, 2.0, 1.0, 0, 2, &x, form, &DEFAULT_ALPHA_GRID).unwrap() < 1e-12);
        }
        // two-point T with correlation 0.3 at every x
        let cov = [1.0, 0.3, 0.3, 2.0].repeat(2);
        let g = GaussianMoments::new(2, 2, cov, ScaleLaw::Unit).unwrap();
        let want = gaussian_power_increment_moment(1.0, 2.0, 0.3, 3.0, 2.0).sqrt();
        let got = dbar_distance(&g, 3.0, 2.0, 0, 1, &x, DbarForm::Derived, &DEFAULT_ALPHA_GRID).unwrap();
        assert!((got - want).abs() < 1e-12 * want);
        let lit = dbar_distance(&g, 2.0, 1.0, 0, 1, &x, DbarForm::Literal, &DEFAULT_ALPHA_GRID).unwrap();
        assert!((lit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn holder_fallback_dominates_exact() {
        // single uniform coefficient rows: ξ_t = u1, ξ_s = 0.5 u1 + u2
        let m = UniformSumMoments::new(1, 2, 2, vec![1.0, 0.0, 0.5, 1.0]).unwrap();
        let x = MeasureSpace::uniform(1, 1.0).unwrap();
        let bound = dbar_distance(&m, 2.0, 1.0, 0, 1, &x, DbarForm::Derived, &DEFAULT_ALPHA_GRID).unwrap();
        // exact E|u1² − (0.5u1 + u2)²| by quadrature on the square
        let (nodes, weights) = crate::numeric::gauss_legendre(200);
        let a = 3f64.sqrt();
        let mut exact = 0.0;
        for (x1, w1) in nodes.iter().zip(&weights) {
            for (x2, w2) in nodes.iter().zip(&weights) {
                let (u1, u2) = (a * x1, a * x2);
                exact += w1 * w2 * (u1 * u1 - (0.5 * u1 + u2).powi(2)).abs() / 4.0;
            }
        }
        assert!(bound >= exact, "{bound} < {exact}");
        assert!(bound < 6.0 * exact);
    }

    #[test]
    fn prop21_constant_field() {
        let x = MeasureSpace::uniform(3, 1.0).unwrap();
        let g = GaussianMoments::constant_in_t(3, 5, 1.0);
        let r = prop21_bound(&g, 2.0, 1.0, &x, 5, &BoundOptions::default()).unwrap();
        assert!((r.sigma_bar - 3.0).abs() < 1e-12);
        assert!((r.series_total - 3.0 / 0.99).abs() < 1e-10);
        assert!((r.nu - (3.0f64 / 0.99).sqrt()).abs() < 1e-10);
        let z = prop21_bound(&ZeroMoments, 2.0, 1.0, &x, 5, &BoundOptions::default()).unwrap();
        assert_eq!(z.nu, 0.0);
    }

    #[test]
    fn prop11_two_points() {
        let r = prop11_bound(&[0.0, 1.0, 1.0, 0.0], 2, 1.0, 1.0).unwrap();
        // N = 2 below radius 1: 2 / (1 − θ) minimized at θ = 0.01
        assert!((r.nu - 2.0 / 0.99).abs() < 1e-10);
    }
}
