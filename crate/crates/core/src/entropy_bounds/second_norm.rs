//! Per-realization quantities behind the second-norm bound
//! `|ξ|_{p,X;∞,T;pQ,Ω} <= (E λ_p^Q(Q))^{1/pQ}`.

use super::first_norm::check_pq;
use super::{series_over, BoundKind, MomentBoundReport};
use crate::error::Result;
use crate::measure_grid::Field;
use crate::metric_entropy::EntropyProfile;
use crate::measure_grid::IndexSpace;

/// `Δ`, the realization distance and the quantities it is compared with.
#[derive(Clone, Debug, PartialEq)]
pub struct Prop41Terms {
    /// `Δ = max_t [∫ |ξ(x,t)|^{pQ} μ(dx)]^{1/Q}`.
    pub delta: f64,
    /// `[∫ | |ξ(x,t)|^p − |ξ(x,s)|^p |^Q μ(dx)]^{1/Q}`, row-major.
    pub distance: Vec<f64>,
    /// `∫ max_t |ξ(x,t)|^{pQ} μ(dx)`, the integrand of the bounded norm.
    pub sup_inside: f64,
}

pub fn prop41_terms(field: &Field, p: f64, q: f64) -> Result<Prop41Terms> {
    check_pq(p, q, 1.0)?;
    let (nx, nt) = (field.nx(), field.nt());
    let weights = field.x_space().weights();
    let mut powered = vec![0.0; nx * nt];
    for x in 0..nx {
        for t in 0..nt {
            powered[x * nt + t] = field.get(x, t).abs().powf(p);
        }
    }
    let mut delta = 0.0f64;
    for t in 0..nt {
        let s: f64 = (0..nx).map(|x| weights[x] * powered[x * nt + t].powf(q)).sum();
        delta = delta.max(s.powf(1.0 / q));
    }
    let sup_inside = (0..nx)
        .map(|x| weights[x] * powered[x * nt..(x + 1) * nt].iter().fold(0.0f64, |m, v| m.max(*v)).powf(q))
        .sum();
    let mut distance = vec![0.0; nt * nt];
    for t in 0..nt {
        for s in (t + 1)..nt {
            let v: f64 = (0..nx)
                .map(|x| weights[x] * (powered[x * nt + t] - powered[x * nt + s]).abs().powf(q))
                .sum();
            let v = v.powf(1.0 / q);
            distance[t * nt + s] = v;
            distance[s * nt + t] = v;
        }
    }
    Ok(Prop41Terms {
        delta,
        distance,
        sup_inside,
    })
}

/// `λ_p(Q) = Δ inf_θ Σ θ^{k-1} N^{1/Q}(T, δ, θ^k)` for one realization, with
/// `δ = distance / Δ`; `λ >= [∫ max_t |ξ|^{pQ} μ(dx)]^{1/Q}` pointwise. A zero
/// realization gives `λ = 0`.
pub fn prop41_bound(field: &Field, p: f64, q: f64) -> Result<MomentBoundReport> {
    let terms = prop41_terms(field, p, q)?;
    let nt = field.nt();
    let outcome = if terms.delta > 0.0 {
        series_over(nt, &terms.distance, terms.delta, q)?
    } else {
        // zero realization: the distance vanishes too
        let space = IndexSpace::from_flat(nt, vec![0.0; nt * nt])?;
        let profile = EntropyProfile::for_space(&space)?;
        let optimum = super::optimize_theta(&profile, 0.0, q)?;
        super::SeriesOutcome { profile, optimum }
    };
    let total = outcome.optimum.nu;
    Ok(MomentBoundReport {
        kind: BoundKind::Prop41,
        p,
        q,
        sigma_bar: terms.delta,
        scale: terms.delta,
        t_len: nt,
        distance_matrix: terms.distance,
        alpha_choice: None,
        k_pq: None,
        dbar_form: None,
        profile: outcome.profile,
        theta: outcome.optimum.theta,
        evaluation: outcome.optimum.evaluation,
        series_total: total,
        nu: total.powf(1.0 / p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_grid::{IndexSpace, MeasureSpace};
    use std::sync::Arc;

    fn spaces(nx: usize, nt: usize) -> (Arc<MeasureSpace>, Arc<IndexSpace>) {
        let x = Arc::new(MeasureSpace::uniform(nx, 1.0).unwrap());
        let coords = (0..nt).map(|i| vec![i as f64]).collect();
        let t = Arc::new(IndexSpace::from_coords(coords, 1.0).unwrap());
        (x, t)
    }

    #[test]
    fn identity_realization() {
        let (x, t) = spaces(2, 2);
        let f = Field::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], x, t).unwrap();
        let r = prop41_bound(&f, 2.0, 1.0).unwrap();
        assert_eq!(r.scale, 1.0);
        assert_eq!(r.distance_matrix, vec![0.0, 2.0, 2.0, 0.0]);
        // two points at normalized distance 2: N = 2 at every radius θ^k < 2
        assert!((r.series_total - 2.0 / 0.99).abs() < 1e-12);
        let terms = prop41_terms(&f, 2.0, 1.0).unwrap();
        assert_eq!(terms.sup_inside, 2.0);
        assert!(r.series_total >= terms.sup_inside);
    }

    #[test]
    fn constant_in_t_and_zero() {
        let (x, t) = spaces(3, 4);
        let f = Field::from_rows(&[vec![1.0; 4], vec![-2.0; 4], vec![0.5; 4]], x.clone(), t.clone()).unwrap();
        let r = prop41_bound(&f, 2.0, 2.0).unwrap();
        let delta = (1.0f64 + 16.0 + 0.0625).sqrt();
        assert!((r.scale - delta).abs() < 1e-12);
        assert!((r.series_total - delta / 0.99).abs() < 1e-12);
        let z = prop41_bound(&Field::zeros(x, t), 2.0, 1.0).unwrap();
        assert_eq!(z.series_total, 0.0);
    }
}
