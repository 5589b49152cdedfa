//! Moment bound for normed sums `S_n = n^{-1/2} Σ ξ_i`, uniform in `n`.

use super::first_norm::{check_pq, sigma_bar};
use super::{conjugate, series_over, BoundKind, BoundOptions, MomentBoundReport, MomentOracle};
use crate::error::{Error, Result};
use crate::measure_grid::MeasureSpace;
use rayon::prelude::*;

/// Per-α quantities independent of the pair `(t, s)`.
struct AlphaTerm {
    alpha: f64,
    /// `K(αQ) · K^{p-1}((p-1)βQ)`.
    constant: f64,
    /// `W^{p-1}_{(p-1)βQ}(x)` per `x`.
    w: Vec<f64>,
}

/// Bound `ν_p(Q)` on `sup_n (E|S_n|^{pQ}_{p,X;∞,T})^{1/pQ}`.
///
/// The distance on `T` is
/// `r(t,s) = 2p · min_α K(αQ) K^{p-1}((p-1)βQ) ∫ W^{p-1}_{(p-1)βQ}(x) ρ_{αQ,x}(t,s) μ(dx)`
/// with `W_γ(x) = max_t |ξ(x,t)|_γ`, `ρ_{v,x}(t,s) = |ξ(x,t) − ξ(x,s)|_v`,
/// and the scale is `σ̂ = K^p(pQ) σ̄`. `K` is the constant selected in
/// `options` and the minimum runs over the α grid entries for which both
/// orders are at least 2 and the oracle has the needed moments.
pub fn thm32_bound(
    oracle: &dyn MomentOracle,
    p: f64,
    q: f64,
    x_space: &MeasureSpace,
    nt: usize,
    options: &BoundOptions,
) -> Result<MomentBoundReport> {
    check_pq(p, q, 2.0)?;
    if nt == 0 {
        return Err(Error::Empty("index space"));
    }
    let k = |m: f64| options.constant.value(m);
    let k_pq = k(p * q)?;
    let sigma = sigma_bar(oracle, p, q, x_space, nt)?;
    let sigma_hat = k_pq.powf(p) * sigma;

    let mut terms = Vec::new();
    let mut last_err = None;
    for &alpha in &options.alpha_grid {
        if !(alpha > 1.0) {
            continue;
        }
        let gamma = (p - 1.0) * conjugate(alpha) * q;
        if alpha * q < 2.0 || gamma < 2.0 - 1e-12 {
            continue;
        }
        let gamma = gamma.max(2.0);
        let attempt = (|| -> Result<AlphaTerm> {
            let constant = k(alpha * q)? * k(gamma)?.powf(p - 1.0);
            let mut w = Vec::with_capacity(x_space.len());
            for x in 0..x_space.len() {
                let mut best = 0.0f64;
                for t in 0..nt {
                    best = best.max(oracle.abs_moment(gamma, x, t)?.powf((p - 1.0) / gamma));
                }
                w.push(best);
            }
            Ok(AlphaTerm { alpha, constant, w })
        })();
        match attempt {
            Ok(term) => terms.push(term),
            Err(e) => last_err = Some(e),
        }
    }
    if terms.is_empty() {
        return Err(last_err.unwrap_or_else(|| {
            Error::Inconsistent(format!(
                "no Hölder exponent in the alpha grid gives both orders at least 2 for p = {p}, Q = {q}"
            ))
        }));
    }

    let pairs: Vec<(usize, usize)> = (0..nt).flat_map(|t| ((t + 1)..nt).map(move |s| (t, s))).collect();
    let entries: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(t, s)| pair_distance(oracle, p, q, t, s, x_space, &terms))
        .collect::<Result<_>>()?;
    let mut distance = vec![0.0; nt * nt];
    let mut choice = vec![None; nt * nt];
    for (&(t, s), (r, alpha)) in pairs.iter().zip(entries) {
        distance[t * nt + s] = r;
        distance[s * nt + t] = r;
        choice[t * nt + s] = Some(alpha);
        choice[s * nt + t] = Some(alpha);
    }
    if sigma_hat == 0.0 && distance.iter().any(|d| *d > 0.0) {
        return Err(Error::Inconsistent("zero moments with nonzero increments".into()));
    }
    let outcome = series_over(nt, &distance, sigma_hat, q)?;
    let total = outcome.optimum.nu;
    Ok(MomentBoundReport {
        kind: BoundKind::Thm32,
        p,
        q,
        sigma_bar: sigma,
        scale: sigma_hat,
        t_len: nt,
        distance_matrix: distance,
        alpha_choice: Some(choice),
        k_pq: Some(k_pq),
        dbar_form: None,
        profile: outcome.profile,
        theta: outcome.optimum.theta,
        evaluation: outcome.optimum.evaluation,
        series_total: total,
        nu: total.powf(1.0 / p),
    })
}

fn pair_distance(
    oracle: &dyn MomentOracle,
    p: f64,
    q: f64,
    t: usize,
    s: usize,
    x_space: &MeasureSpace,
    terms: &[AlphaTerm],
) -> Result<(f64, f64)> {
    let mut best = (f64::INFINITY, terms[0].alpha);
    for term in terms {
        let v = term.alpha * q;
        let mut j = 0.0;
        for (x, w) in x_space.weights().iter().enumerate() {
            if term.w[x] == 0.0 {
                continue;
            }
            j += w * term.w[x] * oracle.increment_moment(v, x, t, s)?.powf(1.0 / v);
        }
        let r = 2.0 * p * term.constant * j;
        if r < best.0 {
            best = (r, term.alpha);
        }
    }
    Ok(best)
}
