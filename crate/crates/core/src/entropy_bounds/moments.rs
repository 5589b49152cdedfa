//! Moment oracles: exact or upper-bounding moments of a random field,
//! consumed by the first-norm and normed-sum bounds.
//!
//! Every bound formula is non-decreasing in the moments it reads, so an
//! oracle may return an upper bound in place of an exact moment.

use crate::error::{Error, Result};
use crate::numeric::{gaussian_power_increment_moment, normal_abs_moment};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Moments of a random field `ξ(x, t)` on a finite `X × T` grid.
pub trait MomentOracle: Sync {
    /// `E|ξ(x,t)|^γ` (or an upper bound).
    fn abs_moment(&self, gamma: f64, x: usize, t: usize) -> Result<f64>;

    /// `E|ξ(x,t) − ξ(x,s)|^v` (or an upper bound).
    fn increment_moment(&self, v: f64, x: usize, t: usize, s: usize) -> Result<f64>;

    /// `E| |ξ(x,t)|^p − |ξ(x,s)|^p |^q` when a closed form is available.
    fn power_increment_moment(&self, _p: f64, _q: f64, _x: usize, _t: usize, _s: usize) -> Option<Result<f64>> {
        None
    }
}

/// Law of the positive scalar `g` in a Gaussian scale mixture `g · Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ScaleLaw {
    /// `g ≡ 1`.
    Unit,
    /// `g = sqrt(dof / W)`, `W ~ χ²(dof)`: Student-t marginals.
    StudentT { dof: f64 },
    /// `g ~ Uniform(low, high)`.
    Uniform { low: f64, high: f64 },
    /// `g ∈ {low, high}` with probability 1/2 each.
    TwoPoint { low: f64, high: f64 },
}

impl ScaleLaw {
    /// `E g^γ`.
    pub fn moment(&self, gamma: f64) -> Result<f64> {
        match *self {
            ScaleLaw::Unit => Ok(1.0),
            ScaleLaw::StudentT { dof } => {
                if gamma >= dof {
                    return Err(Error::MomentUnavailable {
                        order: gamma,
                        reason: format!("Student-t with {dof} degrees of freedom"),
                    });
                }
                let h = 0.5 * gamma;
                Ok((h * (0.5 * dof).ln() + ln_gamma(0.5 * (dof - gamma)) - ln_gamma(0.5 * dof)).exp())
            }
            ScaleLaw::Uniform { low, high } => {
                if high == low {
                    Ok(low.powf(gamma))
                } else {
                    Ok((high.powf(gamma + 1.0) - low.powf(gamma + 1.0)) / ((gamma + 1.0) * (high - low)))
                }
            }
            ScaleLaw::TwoPoint { low, high } => Ok(0.5 * (low.powf(gamma) + high.powf(gamma))),
        }
    }
}

/// Centered jointly Gaussian field times an independent scalar scale `g`.
/// Only the per-`x` covariance over `T` is needed.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMoments {
    nx: usize,
    nt: usize,
    /// `cov[(x · nt + t) · nt + s] = Cov(ξ(x,t), ξ(x,s))` before scaling by `g`.
    cov: Vec<f64>,
    law: ScaleLaw,
}

impl GaussianMoments {
    pub fn new(nx: usize, nt: usize, cov: Vec<f64>, law: ScaleLaw) -> Result<Self> {
        if cov.len() != nx * nt * nt {
            return Err(Error::LengthMismatch {
                what: "per-x covariance blocks",
                got: cov.len(),
                expected: nx * nt * nt,
            });
        }
        crate::error::check_finite("covariance", &cov)?;
        Ok(Self { nx, nt, cov, law })
    }

    /// Every `(x, t)` with the same variance and no dependence on `t`.
    pub fn constant_in_t(nx: usize, nt: usize, variance: f64) -> Self {
        Self {
            nx,
            nt,
            cov: vec![variance; nx * nt * nt],
            law: ScaleLaw::Unit,
        }
    }

    fn c(&self, x: usize, t: usize, s: usize) -> f64 {
        self.cov[(x * self.nt + t) * self.nt + s]
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn law(&self) -> ScaleLaw {
        self.law
    }

    pub fn variance(&self, x: usize, t: usize) -> f64 {
        self.c(x, t, t).max(0.0)
    }

    fn increment_variance(&self, x: usize, t: usize, s: usize) -> f64 {
        (self.c(x, t, t) + self.c(x, s, s) - 2.0 * self.c(x, t, s)).max(0.0)
    }
}

impl MomentOracle for GaussianMoments {
    fn abs_moment(&self, gamma: f64, x: usize, t: usize) -> Result<f64> {
        Ok(self.law.moment(gamma)? * self.variance(x, t).powf(0.5 * gamma) * normal_abs_moment(gamma))
    }

    fn increment_moment(&self, v: f64, x: usize, t: usize, s: usize) -> Result<f64> {
        if t == s {
            return Ok(0.0);
        }
        Ok(self.law.moment(v)? * self.increment_variance(x, t, s).powf(0.5 * v) * normal_abs_moment(v))
    }

    fn power_increment_moment(&self, p: f64, q: f64, x: usize, t: usize, s: usize) -> Option<Result<f64>> {
        if t == s {
            return Some(Ok(0.0));
        }
        let g = match self.law.moment(p * q) {
            Ok(g) => g,
            Err(e) => return Some(Err(e)),
        };
        let base = gaussian_power_increment_moment(self.variance(x, t), self.variance(x, s), self.c(x, t, s), p, q);
        Some(Ok(g * base))
    }
}

/// Highest even order evaluated exactly for uniform sums.
pub const UNIFORM_MAX_EVEN_ORDER: usize = 64;

/// `ξ(x,t) = Σ_j c_j(x,t) u_j` with `u_j` i.i.d. uniform on `(−√3, √3)`
/// (unit variance). Even moments are exact; other orders use the Lyapunov
/// bound from the next even order and the almost-sure bound `√3 Σ|c_j|`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformSumMoments {
    nx: usize,
    nt: usize,
    width: usize,
    /// Row `x · nt + t` holds the coefficients of `ξ(x,t)`.
    coefficients: Vec<f64>,
}

impl UniformSumMoments {
    pub fn new(nx: usize, nt: usize, width: usize, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != nx * nt * width {
            return Err(Error::LengthMismatch {
                what: "uniform-sum coefficients",
                got: coefficients.len(),
                expected: nx * nt * width,
            });
        }
        crate::error::check_finite("coefficients", &coefficients)?;
        Ok(Self {
            nx,
            nt,
            width,
            coefficients,
        })
    }

    fn row(&self, x: usize, t: usize) -> &[f64] {
        let i = x * self.nt + t;
        &self.coefficients[i * self.width..(i + 1) * self.width]
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
}

/// `E|Σ c_j u_j|^γ` (upper bound unless `γ` is an even integer within
/// [`UNIFORM_MAX_EVEN_ORDER`], where it is exact).
pub fn uniform_sum_moment(c: &[f64], gamma: f64) -> f64 {
    let bound = (3f64.sqrt() * c.iter().map(|v| v.abs()).sum::<f64>()).powf(gamma);
    if gamma == 0.0 {
        return 1.0;
    }
    if bound == 0.0 {
        return 0.0;
    }
    let half = (0.5 * gamma).ceil().max(1.0) as usize;
    if 2 * half > UNIFORM_MAX_EVEN_ORDER {
        return bound;
    }
    let order = 2 * half;
    // even moments of the running sum; all binomial terms are non-negative
    // since odd moments vanish: E(X + cU)^{2m} = Σ_k C(2m,2k) E X^{2m-2k} c^{2k} E U^{2k}
    let unit: Vec<f64> = (0..=half).map(|k| 3f64.powi(k as i32) / (2 * k + 1) as f64).collect();
    let binom = binomial_rows(order);
    let mut acc = vec![0.0; half + 1];
    acc[0] = 1.0;
    for cj in c.iter().filter(|v| **v != 0.0) {
        let c2 = cj * cj;
        let mut next = vec![0.0; half + 1];
        for m in 0..=half {
            let mut s = 0.0;
            let mut ck = 1.0;
            for k in 0..=m {
                s += binom[2 * m][2 * k] * acc[m - k] * ck * unit[k];
                ck *= c2;
            }
            next[m] = s;
        }
        acc = next;
    }
    let even = acc[half];
    let lyapunov = even.powf(gamma / order as f64);
    lyapunov.min(bound)
}

fn binomial_rows(n: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![1.0; i + 1];
        for j in 1..i {
            row[j] = prev[j - 1] + prev[j];
        }
        rows.push(row);
    }
    rows
}

impl MomentOracle for UniformSumMoments {
    fn abs_moment(&self, gamma: f64, x: usize, t: usize) -> Result<f64> {
        Ok(uniform_sum_moment(self.row(x, t), gamma))
    }

    fn increment_moment(&self, v: f64, x: usize, t: usize, s: usize) -> Result<f64> {
        if t == s {
            return Ok(0.0);
        }
        let diff: Vec<f64> = self.row(x, t).iter().zip(self.row(x, s)).map(|(a, b)| a - b).collect();
        Ok(uniform_sum_moment(&diff, v))
    }
}

/// An oracle for the identically zero field.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroMoments;

impl MomentOracle for ZeroMoments {
    fn abs_moment(&self, gamma: f64, _x: usize, _t: usize) -> Result<f64> {
        Ok(if gamma == 0.0 { 1.0 } else { 0.0 })
    }

    fn increment_moment(&self, _v: f64, _x: usize, _t: usize, _s: usize) -> Result<f64> {
        Ok(0.0)
    }

    fn power_increment_moment(&self, _p: f64, _q: f64, _x: usize, _t: usize, _s: usize) -> Option<Result<f64>> {
        Some(Ok(0.0))
    }
}
