//! Rosenthal constants for normalized sums of independent variables and the
//! mixingale analogue built from superstrong mixing coefficients.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

/// Constant in `K_R(p) <= C_R p / (e ln p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RosenthalParams {
    pub c_r: f64,
    pub symmetric: bool,
}

impl RosenthalParams {
    pub const GENERAL: RosenthalParams = RosenthalParams {
        c_r: 1.77638,
        symmetric: false,
    };
    pub const SYMMETRIC: RosenthalParams = RosenthalParams {
        c_r: 1.53572,
        symmetric: true,
    };

    pub fn new(symmetric: bool) -> Self {
        if symmetric {
            Self::SYMMETRIC
        } else {
            Self::GENERAL
        }
    }
}

impl Default for RosenthalParams {
    fn default() -> Self {
        Self::GENERAL
    }
}

/// Upper bound on the Rosenthal constant `K_R(p)`, clamped below by 1
/// (`n = 1` in the definition).
pub fn rosenthal_constant(p: f64, params: RosenthalParams) -> Result<f64> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            domain: "[2, inf)",
        });
    }
    Ok((params.c_r * p / (E * p.ln())).max(1.0))
}

/// Superstrong mixing coefficients `β(k)`, `k >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum BetaSequence {
    /// `β(1), β(2), ...`; a non-increasing sequence is only known to be at
    /// most the last entry beyond the table.
    Table { values: Vec<f64> },
    /// `β(k) = b · r^k`.
    Geometric { b: f64, r: f64 },
    /// `β(k) = b · k^{-gamma}`.
    Power { b: f64, gamma: f64 },
}

impl BetaSequence {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            BetaSequence::Table { values } => {
                if k == 0 {
                    1.0
                } else {
                    values.get(k - 1).or(values.last()).copied().unwrap_or(0.0)
                }
            }
            BetaSequence::Geometric { b, r } => b * r.powi(k as i32),
            BetaSequence::Power { b, gamma } => b * (k as f64).powf(-gamma),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            BetaSequence::Table { values } => {
                for (i, v) in values.iter().enumerate() {
                    if !(*v >= 0.0) || !v.is_finite() {
                        return Err(Error::NegativeMixing { lag: i + 1, value: *v });
                    }
                    if i > 0 && *v > values[i - 1] {
                        return Err(Error::Inconsistent(format!(
                            "mixing coefficients increase at lag {}",
                            i + 1
                        )));
                    }
                }
                Ok(())
            }
            BetaSequence::Geometric { b, r } => {
                if !(*b >= 0.0) {
                    return Err(Error::NegativeMixing { lag: 1, value: *b });
                }
                if !(*r >= 0.0 && r.is_finite()) {
                    return Err(Error::Domain {
                        name: "r",
                        value: *r,
                        domain: "[0, inf)",
                    });
                }
                Ok(())
            }
            BetaSequence::Power { b, gamma } => {
                if !(*b >= 0.0) {
                    return Err(Error::NegativeMixing { lag: 1, value: *b });
                }
                if !(*gamma >= 0.0 && gamma.is_finite()) {
                    return Err(Error::Domain {
                        name: "gamma",
                        value: *gamma,
                        domain: "[0, inf)",
                    });
                }
                Ok(())
            }
        }
    }
}

/// `K_M(m) = m · [Σ_{k>=1} β(k) (k+1)^{(m-2)/2}]^{1/m}` as a partial sum plus
/// a certified tail bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingaleCoefficient {
    pub m: f64,
    pub partial_sum: f64,
    pub tail_bound: f64,
    pub terms: usize,
    /// `None` when the series diverges.
    pub value: Option<f64>,
}

impl MixingaleCoefficient {
    pub fn divergent(&self) -> bool {
        self.value.is_none()
    }
}

pub fn mixingale_coefficient(m: f64, beta: &BetaSequence, k_max: usize) -> Result<MixingaleCoefficient> {
    if !(m >= 1.0 && m.is_finite()) {
        return Err(Error::Domain {
            name: "m",
            value: m,
            domain: "[1, inf)",
        });
    }
    if k_max == 0 {
        return Err(Error::Domain {
            name: "k_max",
            value: 0.0,
            domain: "[1, inf)",
        });
    }
    beta.validate()?;
    let e = 0.5 * (m - 2.0);
    let k_max = match beta {
        BetaSequence::Table { values } => k_max.min(values.len().max(1)),
        _ => k_max,
    };
    let partial = crate::numeric::pairwise_sum_by(k_max, &|i| {
        let k = i + 1;
        beta.at(k) * ((k + 1) as f64).powf(e)
    });
    let tail = match *beta {
        BetaSequence::Table { ref values } => {
            // β stays at most its last entry; the weights (k+1)^e are not summable
            if values.last().is_none_or(|v| *v == 0.0) {
                Some(0.0)
            } else {
                None
            }
        }
        BetaSequence::Geometric { b, r } => {
            if b == 0.0 || r == 0.0 {
                Some(0.0)
            } else if r >= 1.0 {
                None
            } else {
                // term ratio beyond k_max is at most r ((k_max+3)/(k_max+2))^{e+}
                let k = k_max as f64;
                let ratio = r * ((k + 3.0) / (k + 2.0)).powf(e.max(0.0));
                if ratio >= 1.0 {
                    None
                } else {
                    let first = b * r.powf(k + 1.0) * (k + 2.0).powf(e);
                    Some(first / (1.0 - ratio))
                }
            }
        }
        BetaSequence::Power { b, gamma } => {
            if b == 0.0 {
                Some(0.0)
            } else if gamma - e <= 1.0 {
                None
            } else {
                // (k+1)^e <= c k^e, then an integral bound from k_max
                let c = 2f64.powf(e.max(0.0));
                let k = k_max as f64;
                Some(b * c * k.powf(e - gamma + 1.0) / (gamma - e - 1.0))
            }
        }
    };
    Ok(MixingaleCoefficient {
        m,
        partial_sum: partial,
        tail_bound: tail.unwrap_or(f64::INFINITY),
        terms: k_max,
        value: tail.map(|t| m * (partial + t).powf(1.0 / m)),
    })
}

/// Constant replacing `K_R` in the normed-sum bound: the Rosenthal bound for
/// independent summands, or `max(1, K_M)` for superstrong mixingales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SumConstant {
    Rosenthal { params: RosenthalParams },
    Mixingale { beta: BetaSequence, k_max: usize },
}

impl SumConstant {
    pub fn value(&self, m: f64) -> Result<f64> {
        match self {
            SumConstant::Rosenthal { params } => rosenthal_constant(m, *params),
            SumConstant::Mixingale { beta, k_max } => {
                if m < 2.0 {
                    return Err(Error::Domain {
                        name: "m",
                        value: m,
                        domain: "[2, inf)",
                    });
                }
                let c = mixingale_coefficient(m, beta, *k_max)?;
                c.value
                    .map(|v| v.max(1.0))
                    .ok_or_else(|| Error::Divergent(format!("mixingale coefficient of order {m}")))
            }
        }
    }
}

impl Default for SumConstant {
    fn default() -> Self {
        SumConstant::Rosenthal {
            params: RosenthalParams::GENERAL,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenthal_examples() {
        let k2 = rosenthal_constant(2.0, RosenthalParams::GENERAL).unwrap();
        assert!((k2 - 1.77638 * 2.0 / (E * 2f64.ln())).abs() < 1e-15);
        assert!((k2 - 1.8856).abs() < 1e-4);
        let k10 = rosenthal_constant(10.0, RosenthalParams::SYMMETRIC).unwrap();
        assert!((k10 - 2.4536).abs() < 1e-4);
        assert!(rosenthal_constant(E, RosenthalParams::GENERAL).is_ok());
        assert!(rosenthal_constant(1.9, RosenthalParams::GENERAL).is_err());
        assert!(rosenthal_constant(2.0, RosenthalParams::SYMMETRIC).unwrap() >= 1.0);
    }

    #[test]
    fn rosenthal_monotone_above_e() {
        let mut prev = 0.0;
        let mut p = E;
        while p < 200.0 {
            for params in [RosenthalParams::GENERAL, RosenthalParams::SYMMETRIC] {
                assert!(rosenthal_constant(p, params).unwrap() >= 1.0);
            }
            let k = rosenthal_constant(p, RosenthalParams::GENERAL).unwrap();
            assert!(k >= prev);
            prev = k;
            p += 0.37;
        }
    }

    #[test]
    fn mixingale_examples() {
        let zero = mixingale_coefficient(3.0, &BetaSequence::Table { values: vec![0.0; 5] }, 100).unwrap();
        assert_eq!(zero.value, Some(0.0));

        let geo = mixingale_coefficient(2.0, &BetaSequence::Geometric { b: 1.0, r: 0.5 }, 60).unwrap();
        assert!((geo.value.unwrap() - 2.0).abs() < 1e-12);
        let coarse = mixingale_coefficient(2.0, &BetaSequence::Geometric { b: 1.0, r: 0.5 }, 5).unwrap();
        assert!(coarse.value.unwrap() >= 2.0);
        assert!(coarse.value.unwrap() < 2.1);

        let harmonic = mixingale_coefficient(4.0, &BetaSequence::Power { b: 1.0, gamma: 1.0 }, 1000).unwrap();
        assert!(harmonic.divergent());

        let power = mixingale_coefficient(2.0, &BetaSequence::Power { b: 1.0, gamma: 3.0 }, 1000).unwrap();
        // Σ k^{-3} = ζ(3)
        assert!(power.value.unwrap() >= 2.0 * 1.2020569f64.sqrt());
        assert!(power.value.unwrap() < 2.0 * 1.2021f64.sqrt());

        assert!(mixingale_coefficient(2.0, &BetaSequence::Table { values: vec![0.5, -0.1] }, 10).is_err());
        assert!(mixingale_coefficient(2.0, &BetaSequence::Table { values: vec![0.5, 0.1] }, 10).unwrap().divergent());
    }

    #[test]
    fn sum_constant_clamps() {
        let c = SumConstant::Mixingale {
            beta: BetaSequence::Table { values: vec![0.0] },
            k_max: 10,
        };
        assert_eq!(c.value(2.0).unwrap(), 1.0);
        let d = SumConstant::Mixingale {
            beta: BetaSequence::Geometric { b: 1.0, r: 1.0 },
            k_max: 10,
        };
        assert!(matches!(d.value(2.0), Err(Error::Divergent(_))));
    }
}
