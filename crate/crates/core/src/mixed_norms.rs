//! Lebesgue, mixed anisotropic, and hybrid `CL(p)` / `L(p)C` norms of fields,
//! together with their continuity moduli.
//!
//! Finite exponents on the X axis integrate against the weights of the
//! measure space. The index set T carries no measure of its own, so finite
//! exponents on T use the counting measure; an infinite exponent on either
//! axis is a plain maximum of absolute values.

use crate::error::{Error, Result};
use crate::measure_grid::Field;
use crate::numeric::pairwise_sum_by;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A Lebesgue exponent: finite `p >= 1` or the supremum marker.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExponentRepr", into = "ExponentRepr")]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<ExponentRepr> for Exponent {
    type Error = Error;

    fn try_from(r: ExponentRepr) -> Result<Self> {
        match r {
            ExponentRepr::Number(p) => Exponent::finite(p),
            ExponentRepr::Text(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
                other => other
                    .parse::<f64>()
                    .map_err(|_| Error::Domain {
                        name: "exponent",
                        value: f64::NAN,
                        domain: "a number >= 1 or \"inf\"",
                    })
                    .and_then(Exponent::finite),
            },
        }
    }
}

impl From<Exponent> for ExponentRepr {
    fn from(e: Exponent) -> Self {
        match e {
            Exponent::Finite(p) => ExponentRepr::Number(p),
            Exponent::Infinity => ExponentRepr::Text("inf".into()),
        }
    }
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            return Ok(Exponent::Infinity);
        }
        if !(p >= 1.0) {
            return Err(Error::Domain {
                name: "p",
                value: p,
                domain: "[1, inf]",
            });
        }
        Ok(Exponent::Finite(p))
    }

    fn validate(self) -> Result<Self> {
        match self {
            Exponent::Finite(p) => Exponent::finite(p),
            Exponent::Infinity => Ok(self),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl From<f64> for Exponent {
    /// Unchecked conversion; validated when a norm is evaluated.
    fn from(p: f64) -> Self {
        if p == f64::INFINITY {
            Exponent::Infinity
        } else {
            Exponent::Finite(p)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    T,
}

/// Exponents per axis, innermost integral first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    exponents: Vec<(Axis, Exponent)>,
}

impl NormSpec {
    pub fn new(exponents: Vec<(Axis, Exponent)>) -> Result<Self> {
        for (i, (axis, e)) in exponents.iter().enumerate() {
            e.validate()?;
            if exponents[..i].iter().any(|(a, _)| a == axis) {
                return Err(Error::AxisMismatch(format!("axis {axis:?} appears twice")));
            }
        }
        Ok(Self { exponents })
    }

    /// `(p on inner, q on outer)`.
    pub fn pair(inner: (Axis, Exponent), outer: (Axis, Exponent)) -> Result<Self> {
        Self::new(vec![inner, outer])
    }

    pub fn exponents(&self) -> &[(Axis, Exponent)] {
        &self.exponents
    }
}

/// Weighted `L_p` norm; `weights = None` means counting measure. The
/// supremum ignores weights.
///
/// Evaluated as `m · (Σ w (|v|/m)^p)^{1/p}` with `m = max |v|`, which keeps
/// large exponents from overflowing.
pub fn lp_norm(values: &[f64], weights: Option<&[f64]>, p: Exponent) -> Result<f64> {
    let p = p.validate()?;
    if let Some(w) = weights {
        if w.len() != values.len() {
            return Err(Error::LengthMismatch {
                what: "weights",
                got: w.len(),
                expected: values.len(),
            });
        }
    }
    crate::error::check_finite("norm input", values)?;
    Ok(lp_unchecked(values, weights, p))
}

pub(crate) fn lp_unchecked(values: &[f64], weights: Option<&[f64]>, p: Exponent) -> f64 {
    let m = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let p = match p {
        Exponent::Infinity => return m,
        Exponent::Finite(p) => p,
    };
    let inv = 1.0 / m;
    let power = |x: f64| -> f64 {
        if p == 1.0 {
            x
        } else if p == 2.0 {
            x * x
        } else {
            x.powf(p)
        }
    };
    let s = match weights {
        Some(w) => pairwise_sum_by(values.len(), &|i| w[i] * power(values[i].abs() * inv)),
        None => pairwise_sum_by(values.len(), &|i| power(values[i].abs() * inv)),
    };
    let root = if p == 1.0 {
        s
    } else if p == 2.0 {
        s.sqrt()
    } else {
        s.powf(1.0 / p)
    };
    m * root
}

/// Mixed norm of a row-major array with arbitrary rank. `weights[a]` gives
/// the measure along axis `a` (`None` for counting measure); `order` lists
/// `(axis, exponent)` innermost first and must mention every axis once.
pub fn mixed_norm_nd(values: &[f64], shape: &[usize], weights: &[Option<&[f64]>], order: &[(usize, Exponent)]) -> Result<f64> {
    let total: usize = shape.iter().product();
    if values.len() != total {
        return Err(Error::LengthMismatch {
            what: "array values",
            got: values.len(),
            expected: total,
        });
    }
    if weights.len() != shape.len() || order.len() != shape.len() {
        return Err(Error::AxisMismatch(format!(
            "array has {} axes, {} weight entries and {} exponents",
            shape.len(),
            weights.len(),
            order.len()
        )));
    }
    for (a, w) in weights.iter().enumerate() {
        if let Some(w) = w {
            if w.len() != shape[a] {
                return Err(Error::LengthMismatch {
                    what: "axis weights",
                    got: w.len(),
                    expected: shape[a],
                });
            }
        }
    }
    let mut seen = vec![false; shape.len()];
    for (a, e) in order {
        if *a >= shape.len() || seen[*a] {
            return Err(Error::AxisMismatch(format!("axis {a} missing or repeated")));
        }
        seen[*a] = true;
        e.validate()?;
    }
    crate::error::check_finite("norm input", values)?;

    // reduce one axis at a time; `alive` tracks the original axis ids left
    let mut data = values.to_vec();
    let mut dims = shape.to_vec();
    let mut alive: Vec<usize> = (0..shape.len()).collect();
    let mut line = Vec::new();
    for (axis, e) in order {
        let pos = alive.iter().position(|a| a == axis).expect("validated axis");
        let len = dims[pos];
        let inner: usize = dims[pos + 1..].iter().product();
        let outer: usize = dims[..pos].iter().product();
        let mut next = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for i in 0..inner {
                line.clear();
                line.extend((0..len).map(|k| data[(o * len + k) * inner + i]));
                next.push(lp_unchecked(&line, weights[*axis], *e));
            }
        }
        data = next;
        dims.remove(pos);
        alive.remove(pos);
    }
    Ok(data[0])
}

/// `|f|_{p⃗}` with nesting fixed by `spec`.
pub fn mixed_norm(f: &Field, spec: &NormSpec) -> Result<f64> {
    let e = spec.exponents();
    let has = |a: Axis| e.iter().any(|(b, _)| *b == a);
    if e.len() != 2 || !has(Axis::X) || !has(Axis::T) {
        return Err(Error::AxisMismatch(format!(
            "a field has axes X and T, the spec lists {:?}",
            e.iter().map(|(a, _)| *a).collect::<Vec<_>>()
        )));
    }
    let order: Vec<(usize, Exponent)> = e
        .iter()
        .map(|(a, p)| (if *a == Axis::X { 0 } else { 1 }, *p))
        .collect();
    mixed_norm_nd(
        f.values(),
        &[f.nx(), f.nt()],
        &[Some(f.x_space().weights()), None],
        &order,
    )
}

fn column(f: &Field, t: usize, buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend((0..f.nx()).map(|x| f.get(x, t)));
}

/// `‖f‖_{CL(p)} = sup_t |f(·, t)|_p`.
pub fn cl_norm(f: &Field, p: impl Into<Exponent>) -> Result<f64> {
    let p = p.into().validate()?;
    let w = f.x_space().weights();
    let mut buf = Vec::with_capacity(f.nx());
    let mut best = 0.0f64;
    for t in 0..f.nt() {
        column(f, t, &mut buf);
        best = best.max(lp_unchecked(&buf, Some(w), p));
    }
    Ok(best)
}

/// `‖f‖_{L(p)C} = | sup_t |f(·, t)| |_p`.
pub fn lc_norm(f: &Field, p: impl Into<Exponent>) -> Result<f64> {
    let p = p.into().validate()?;
    let sup: Vec<f64> = (0..f.nx())
        .map(|x| f.row(x).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    Ok(lp_unchecked(&sup, Some(f.x_space().weights()), p))
}

fn close_pairs(f: &Field, eps: f64) -> Vec<(usize, usize)> {
    let t = f.t_space();
    let n = t.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        let row = t.row(i);
        for (j, d) in row.iter().enumerate().skip(i + 1) {
            if *d < eps {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "epsilon",
            value: eps,
            domain: "(0, inf)",
        })
    }
}

/// `sup_{d(t,s) < ε} |f(·,t) − f(·,s)|_p` on normalized distances; 0 when no
/// pair is that close.
pub fn cl_modulus(f: &Field, p: impl Into<Exponent>, eps: f64) -> Result<f64> {
    let p = p.into().validate()?;
    check_eps(eps)?;
    let w = f.x_space().weights();
    let mut buf = Vec::with_capacity(f.nx());
    let mut best = 0.0f64;
    for (t, s) in close_pairs(f, eps) {
        buf.clear();
        buf.extend((0..f.nx()).map(|x| f.get(x, t) - f.get(x, s)));
        best = best.max(lp_unchecked(&buf, Some(w), p));
    }
    Ok(best)
}

/// `[∫ sup_{d(t,s) < ε} |f(x,t) − f(x,s)|^p μ(dx)]^{1/p}`.
pub fn lc_modulus(f: &Field, p: impl Into<Exponent>, eps: f64) -> Result<f64> {
    let p = p.into().validate()?;
    check_eps(eps)?;
    let pairs = close_pairs(f, eps);
    let sup: Vec<f64> = (0..f.nx())
        .map(|x| {
            let row = f.row(x);
            pairs
                .iter()
                .fold(0.0f64, |m, (t, s)| m.max((row[*t] - row[*s]).abs()))
        })
        .collect();
    Ok(lp_unchecked(&sup, Some(f.x_space().weights()), p))
}
