//! Exponential tail bounds from moment growth: the Chebyshev inequality
//! optimized over the moment order, either through a tabulated Legendre
//! transform or through a fitted power law `ν(Q) <= c₁ Q^m`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub q_grid: Vec<f64>,
    /// `h(Q) = Q log ν(Q)`.
    pub h_values: Vec<f64>,
    pub z_grid: Vec<f64>,
    /// `exp(-h*(log z))` clamped to `[0, 1]`.
    pub tail: Vec<f64>,
}

fn check_table(q_grid: &[f64], nu_values: &[f64]) -> Result<()> {
    if q_grid.is_empty() {
        return Err(Error::Empty("Q grid"));
    }
    if q_grid.len() != nu_values.len() {
        return Err(Error::LengthMismatch {
            what: "moment bounds",
            got: nu_values.len(),
            expected: q_grid.len(),
        });
    }
    for q in q_grid {
        if !(*q > 0.0 && q.is_finite()) {
            return Err(Error::Domain {
                name: "Q",
                value: *q,
                domain: "(0, inf)",
            });
        }
    }
    for v in nu_values {
        if !(*v >= 0.0) || v.is_nan() {
            return Err(Error::Domain {
                name: "nu",
                value: *v,
                domain: "[0, inf]",
            });
        }
    }
    Ok(())
}

fn tail_at(q_grid: &[f64], h: &[f64], z: f64) -> f64 {
    let w = z.ln();
    // exhaustive: h need not be convex
    let h_star = q_grid
        .iter()
        .zip(h)
        .map(|(q, h)| w * q - h)
        .fold(f64::NEG_INFINITY, f64::max);
    (-h_star).exp().clamp(0.0, 1.0)
}

/// `P(Y > z) <= exp(-sup_Q (Q log z - Q log ν(Q)))` for a variable with
/// `|Y|_Q <= ν(Q)` at every grid order.
pub fn legendre_tail(q_grid: &[f64], nu_values: &[f64], z: f64) -> Result<f64> {
    check_table(q_grid, nu_values)?;
    check_z(z)?;
    let h: Vec<f64> = q_grid.iter().zip(nu_values).map(|(q, v)| q * v.ln()).collect();
    Ok(tail_at(q_grid, &h, z))
}

fn check_z(z: f64) -> Result<()> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain {
            name: "z",
            value: z,
            domain: "(0, inf)",
        });
    }
    Ok(())
}

/// [`legendre_tail`] over a grid of thresholds.
pub fn legendre_tail_table(q_grid: &[f64], nu_values: &[f64], z_grid: &[f64]) -> Result<TailBound> {
    check_table(q_grid, nu_values)?;
    let h: Vec<f64> = q_grid.iter().zip(nu_values).map(|(q, v)| q * v.ln()).collect();
    let mut tail = Vec::with_capacity(z_grid.len());
    for z in z_grid {
        check_z(*z)?;
        tail.push(tail_at(q_grid, &h, *z));
    }
    Ok(TailBound {
        q_grid: q_grid.to_vec(),
        h_values: h,
        z_grid: z_grid.to_vec(),
        tail,
    })
}

/// Log-log fit `log ν(Q) ≈ log c₁ + m log Q`, with `c₁` raised so that
/// `ν(Q) <= c₁ Q^m` holds at every grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerGrowthFit {
    pub c1: f64,
    pub m: f64,
    /// Root-mean-square log residual of the least-squares fit.
    pub residual: f64,
    /// Residual above [`POOR_FIT_RESIDUAL`]: growth is not a power law.
    pub poor_fit: bool,
    pub q_min: f64,
    pub q_max: f64,
}

pub const POOR_FIT_RESIDUAL: f64 = 0.1;

pub fn fit_power_growth(q_grid: &[f64], nu_values: &[f64]) -> Result<PowerGrowthFit> {
    check_table(q_grid, nu_values)?;
    if q_grid.len() < 2 {
        return Err(Error::TooFewPoints {
            usable: q_grid.len(),
            needed: 2,
        });
    }
    if nu_values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Inconsistent("power-growth fit needs positive finite moment bounds".into()));
    }
    let xs: Vec<f64> = q_grid.iter().map(|q| q.ln()).collect();
    let ys: Vec<f64> = nu_values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Inconsistent("Q grid has a single distinct value".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let m = sxy / sxx;
    if !(m > 0.0) {
        return Err(Error::Domain {
            name: "m",
            value: m,
            domain: "(0, inf)",
        });
    }
    let intercept = my - m * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - m * x).powi(2)).sum::<f64>() / n).sqrt();
    let log_c1 = xs.iter().zip(&ys).map(|(x, y)| y - m * x).fold(f64::NEG_INFINITY, f64::max);
    Ok(PowerGrowthFit {
        c1: log_c1.exp(),
        m,
        residual,
        poor_fit: residual > POOR_FIT_RESIDUAL,
        q_min: q_grid.iter().copied().fold(f64::INFINITY, f64::min),
        q_max: q_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

impl PowerGrowthFit {
    /// `c₂ = m / (e c₁^{1/m})`.
    pub fn c2(&self) -> f64 {
        self.m / (E * self.c1.powf(1.0 / self.m))
    }

    /// Order at which the power-law Chebyshev bound is optimized for `x`.
    pub fn optimal_order(&self, x: f64) -> f64 {
        (x / self.c1).powf(1.0 / self.m) / E
    }
}

/// `P(Y > x) <= exp(-c₂ x^{1/m})` when the optimal order lies in the fitted
/// range. Outside it the power law is not known to hold, so the Chebyshev
/// bound `(c₁ Q^m / x)^Q` is taken at the nearest end of the range.
pub fn example21_tail(fit: &PowerGrowthFit, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            name: "x",
            value: x,
            domain: "(0, inf)",
        });
    }
    let q_opt = fit.optimal_order(x);
    if q_opt >= fit.q_min && q_opt <= fit.q_max {
        return Ok((-fit.c2() * x.powf(1.0 / fit.m)).exp().min(1.0));
    }
    let q = q_opt.clamp(fit.q_min, fit.q_max);
    Ok((fit.c1 * q.powf(fit.m) / x).powf(q).min(1.0))
}
