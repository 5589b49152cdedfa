//! The entropy series `σ Σ_{k>=1} θ^{k-1} N^{1/Q}(T, d, θ^k)` bounding the
//! `Q`-norm of a supremum, its optimization over `θ`, and the closed form
//! for power-law entropy.

use crate::error::{Error, Result};
use crate::metric_entropy::{EntropyProfile, ProfileSource};
use crate::numeric::pairwise_sum;
use serde::{Deserialize, Serialize};

/// Hard limit on explicitly summed terms; beyond it the tail is bounded with
/// the saturation value.
const MAX_TERMS: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesEvaluation {
    pub theta: f64,
    pub q: f64,
    /// `θ^{k-1} N^{1/Q}(θ^k)` for the explicitly summed `k = 1..=K`.
    pub partial_terms: Vec<f64>,
    /// Bound on `Σ_{k>K}` of the same terms.
    pub tail_bound: f64,
    /// `sigma_factor · (Σ partial_terms + tail_bound)`.
    pub total: f64,
    pub sigma_factor: f64,
}

fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::Domain {
            name: "Q",
            value: q,
            domain: "[1, inf)",
        });
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Domain {
            name: "sigma",
            value: sigma,
            domain: "[0, inf)",
        });
    }
    Ok(())
}

/// Evaluates the series with covering numbers read conservatively from
/// `profile` at radii `θ^k` (in the profile's distance unit).
///
/// Below the smallest positive distance every ball holds a single class of
/// the space, so `N` is constant there and the remaining terms are summed in
/// closed form. Analytic profiles use the exact geometric tail of the power
/// law and require `kappa < Q`.
pub fn pisier_series(profile: &EntropyProfile, sigma: f64, q: f64, theta: f64) -> Result<SeriesEvaluation> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain {
            name: "theta",
            value: theta,
            domain: "(0, 1)",
        });
    }
    check_q(q)?;
    check_sigma(sigma)?;
    let unit = profile.unit;
    let inv_q = 1.0 / q;
    let mut terms = Vec::new();
    let mut radius = theta;
    let tail = match profile.source {
        ProfileSource::Analytic { scale, kappa } => {
            if kappa >= q {
                return Err(Error::Divergent(format!("entropy series with kappa {kappa} >= Q {q}")));
            }
            // N = 1 while the radius covers the whole space
            while radius >= unit && terms.len() < MAX_TERMS {
                terms.push(theta.powi(terms.len() as i32));
                radius *= theta;
            }
            let k = terms.len() as f64;
            let a = kappa / q;
            let rate = theta.powf(1.0 - a);
            scale.powf(inv_q) * unit.powf(a) / theta * rate.powf(k + 1.0) / (1.0 - rate)
        }
        ProfileSource::Computed => {
            let saturation = profile.saturation.ok_or_else(|| {
                Error::Inconsistent("computed profile without a saturation value".into())
            })?;
            let stop = profile.floor.map_or(unit, |f| f * unit);
            while radius >= stop && terms.len() < MAX_TERMS {
                let n = profile.covering_at(radius);
                terms.push(theta.powi(terms.len() as i32) * n.powf(inv_q));
                radius *= theta;
            }
            theta.powi(terms.len() as i32) * saturation.powf(inv_q) / (1.0 - theta)
        }
    };
    let total = if sigma == 0.0 {
        0.0
    } else {
        sigma * (pairwise_sum(&terms) + tail)
    };
    Ok(SeriesEvaluation {
        theta,
        q,
        partial_terms: terms,
        tail_bound: tail,
        total,
        sigma_factor: sigma,
    })
}

/// Minimizing `θ` and the minimized series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaOptimum {
    pub theta: f64,
    pub nu: f64,
    pub evaluation: SeriesEvaluation,
}

const THETA_GRID: usize = 99;
const GOLDEN_ITERS: usize = 48;

/// Minimizes [`pisier_series`] over `θ ∈ {0.01, ..., 0.99}` and a
/// golden-section search on the bracket around the best grid point. Any `θ`
/// gives a valid bound, so the result bounds the infimum from above.
pub fn optimize_theta(profile: &EntropyProfile, sigma: f64, q: f64) -> Result<ThetaOptimum> {
    check_q(q)?;
    check_sigma(sigma)?;
    // optimize the unit-σ series so that σ = 0 still yields a meaningful θ
    let f = |theta: f64| pisier_series(profile, 1.0, q, theta).map(|e| e.total);
    let grid: Vec<f64> = (1..=THETA_GRID).map(|i| i as f64 / 100.0).collect();
    let mut values = Vec::with_capacity(grid.len());
    for t in &grid {
        values.push(f(*t)?);
    }
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] < values[best] {
            best = i;
        }
    }
    let mut best_theta = grid[best];
    let mut best_value = values[best];
    let (mut lo, mut hi) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    for _ in 0..GOLDEN_ITERS {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b)?;
        }
    }
    for (t, v) in [(a, fa), (b, fb)] {
        if v < best_value {
            best_value = v;
            best_theta = t;
        }
    }
    let evaluation = pisier_series(profile, sigma, q, best_theta)?;
    Ok(ThetaOptimum {
        theta: best_theta,
        nu: evaluation.total,
        evaluation,
    })
}

/// `K σ (1 - κ/Q)^{-1} (κ/Q)^{-κ/(Q-κ)}`: the optimized series for
/// `N(ε) = K^Q ε^{-κ}`.
pub fn closed_form_bound(k: f64, kappa: f64, q: f64, sigma: f64) -> Result<f64> {
    check_q(q)?;
    check_sigma(sigma)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain {
            name: "K",
            value: k,
            domain: "(0, inf)",
        });
    }
    if !(kappa >= 0.0 && kappa < q) {
        return Err(Error::Domain {
            name: "kappa",
            value: kappa,
            domain: "[0, Q)",
        });
    }
    if kappa == 0.0 {
        return Ok(k * sigma);
    }
    let a = kappa / q;
    Ok(k * sigma / (1.0 - a) * a.powf(-a / (1.0 - a)))
}
