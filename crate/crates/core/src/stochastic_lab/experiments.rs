//! Monte Carlo experiments: moments and tails of functionals of normed
//! sums, convergence and equicontinuity diagnostics, Rosenthal ratios, and
//! the second-norm expectation.

use super::model::RandomFieldModel;
use super::rng::stream;
use super::sampling::{normed_sum_ladder_values, PathSampler};
use super::stats::{clopper_pearson_upper, ks_critical_99, ks_statistic, EmpiricalMoments, CONFIDENCE};
use crate::entropy_bounds::{prop41_bound, prop41_terms};
use crate::error::{Error, Result};
use crate::measure_grid::Field;
use crate::mixed_norms::cl_norm;
use crate::numeric::normal_abs_moment;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A real functional of a field.
pub type Functional<'a> = &'a (dyn Fn(&Field) -> f64 + Sync);

/// `|f|^p_{p,X;∞,T} = sup_t ∫ |f(x,t)|^p μ(dx)`.
pub fn first_norm_power(f: &Field, p: f64) -> f64 {
    cl_norm(f, p).map(|v| v.powf(p)).unwrap_or(f64::NAN)
}

fn check_replicates(replicates: usize, min: usize) -> Result<()> {
    if replicates < min {
        return Err(Error::Domain {
            name: "replicates",
            value: replicates as f64,
            domain: "too few replicates for the requested estimate",
        });
    }
    Ok(())
}

fn check_ladder(ladder: &[usize]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::Empty("n ladder"));
    }
    if ladder[0] == 0 || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Inconsistent("n ladder must be strictly increasing from 1 or more".into()));
    }
    Ok(())
}

/// `values[rung][functional][replicate]` of functionals of `S_n`, one path
/// per replicate with rungs taken from nested prefixes.
pub fn ladder_values(
    model: &RandomFieldModel,
    ladder: &[usize],
    functionals: &[Functional],
    replicates: usize,
    root_seed: u64,
    label: &str,
) -> Vec<Vec<Vec<f64>>> {
    let per_rep: Vec<Vec<Vec<f64>>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let sums = normed_sum_ladder_values(model, ladder, stream(root_seed, label, r));
            sums.into_iter()
                .map(|values| {
                    let field = Field::from_parts_unchecked(values, model.x_space().clone(), model.t_space().clone());
                    functionals.iter().map(|f| f(&field)).collect()
                })
                .collect()
        })
        .collect();
    let mut out = vec![vec![Vec::with_capacity(replicates); functionals.len()]; ladder.len()];
    for rep in per_rep {
        for (rung, vals) in rep.into_iter().enumerate() {
            for (k, v) in vals.into_iter().enumerate() {
                out[rung][k].push(v);
            }
        }
    }
    out
}

/// `E[functional(S_n)^order]` from `replicates` paths.
pub fn empirical_moment(
    model: &RandomFieldModel,
    n: usize,
    name: &str,
    functional: Functional,
    order: f64,
    replicates: usize,
    root_seed: u64,
) -> Result<EmpiricalMoments> {
    check_replicates(replicates, 100)?;
    let values = ladder_values(model, &[n.max(1)], &[functional], replicates, root_seed, name);
    let powered: Vec<f64> = values[0][0].iter().map(|v| v.powf(order)).collect();
    Ok(EmpiricalMoments::from_values(name, order, &powered, root_seed))
}

/// A functional and the power of it whose mean is estimated.
pub struct MomentFunctional<'a> {
    pub name: String,
    pub functional: Functional<'a>,
    pub order: f64,
}

/// [`empirical_moment`] for several functionals over a ladder, sharing the
/// same paths; indexed `[rung][functional]`.
pub fn empirical_moment_ladder(
    model: &RandomFieldModel,
    ladder: &[usize],
    functionals: &[MomentFunctional],
    replicates: usize,
    root_seed: u64,
    label: &str,
) -> Result<Vec<Vec<EmpiricalMoments>>> {
    check_replicates(replicates, 100)?;
    check_ladder(ladder)?;
    let fs: Vec<Functional> = functionals.iter().map(|f| f.functional).collect();
    let values = ladder_values(model, ladder, &fs, replicates, root_seed, label);
    Ok(values
        .iter()
        .zip(ladder)
        .map(|(rung, n)| {
            rung.iter()
                .zip(functionals)
                .map(|(vals, f)| {
                    let powered: Vec<f64> = vals.iter().map(|v| v.powf(f.order)).collect();
                    EmpiricalMoments::from_values(&format!("{}@n={n}", f.name), f.order, &powered, root_seed)
                })
                .collect()
        })
        .collect())
}

/// Empirical survival function with one-sided Clopper-Pearson upper bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub z: Vec<f64>,
    pub survival: Vec<f64>,
    pub cp_upper: Vec<f64>,
    pub replicates: usize,
    pub excluded: usize,
}

pub fn tail_from_values(values: &[f64], z_grid: &[f64]) -> TailEstimate {
    let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let n = finite.len();
    let mut survival = Vec::with_capacity(z_grid.len());
    let mut upper = Vec::with_capacity(z_grid.len());
    for z in z_grid {
        let above = n - finite.partition_point(|v| v <= z);
        survival.push(above as f64 / n as f64);
        upper.push(clopper_pearson_upper(above, n, CONFIDENCE));
    }
    TailEstimate {
        z: z_grid.to_vec(),
        survival,
        cp_upper: upper,
        replicates: n,
        excluded: values.len() - n,
    }
}

/// `P(functional(S_n) > z)` for each `z`.
pub fn empirical_tail(
    model: &RandomFieldModel,
    n: usize,
    functional: Functional,
    z_grid: &[f64],
    replicates: usize,
    root_seed: u64,
) -> Result<TailEstimate> {
    check_replicates(replicates, 1000)?;
    let values = ladder_values(model, &[n.max(1)], &[functional], replicates, root_seed, "tail");
    Ok(tail_from_values(&values[0][0], z_grid))
}

/// Kolmogorov-Smirnov distances between the laws of a functional of
/// `S_n` at consecutive ladder rungs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltDiagnostic {
    pub ladder: Vec<usize>,
    /// `ks[i]` compares rungs `i` and `i + 1`.
    pub ks: Vec<f64>,
    /// Two-sample critical value at level 0.99 (a configuration default).
    pub critical: f64,
    pub replicates: usize,
}

impl CltDiagnostic {
    pub fn all_below_critical(&self) -> bool {
        self.ks.iter().all(|d| *d < self.critical)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.ks.windows(2).all(|w| w[1] < w[0])
    }

    /// Distances strictly decreasing with the last one below `threshold`.
    pub fn converged(&self, threshold: f64) -> bool {
        self.strictly_decreasing() && self.ks.last().is_none_or(|d| *d < threshold)
    }
}

pub fn clt_diagnostic(
    model: &RandomFieldModel,
    ladder: &[usize],
    functional: Functional,
    replicates: usize,
    root_seed: u64,
) -> Result<CltDiagnostic> {
    check_replicates(replicates, 1000)?;
    check_ladder(ladder)?;
    let values = ladder_values(model, ladder, &[functional], replicates, root_seed, "clt");
    let ks = values.windows(2).map(|w| ks_statistic(&w[0][0], &w[1][0])).collect();
    Ok(CltDiagnostic {
        ladder: ladder.to_vec(),
        ks,
        critical: ks_critical_99(replicates, replicates),
        replicates,
    })
}

/// `max_n P(sup_{ρ(t,s)<ε} |τ_n(t) − τ_n(s)| > h)` over the ladder, with
/// `τ_n(t) = ∫ |S_n(x,t)|^p μ(dx)` and `ρ` the normalized distance on `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquicontinuityTable {
    pub ladder: Vec<usize>,
    pub eps: Vec<f64>,
    pub h: Vec<f64>,
    /// `probability[i][j]` for `eps[i]`, `h[j]`.
    pub probability: Vec<Vec<f64>>,
    pub cp_upper: Vec<Vec<f64>>,
    pub replicates: usize,
}

pub fn equicontinuity_diagnostic(
    model: &RandomFieldModel,
    ladder: &[usize],
    p: f64,
    eps_grid: &[f64],
    h_grid: &[f64],
    replicates: usize,
    root_seed: u64,
) -> Result<EquicontinuityTable> {
    if eps_grid.is_empty() || h_grid.is_empty() {
        return Err(Error::Empty("equicontinuity grids"));
    }
    check_replicates(replicates, 1)?;
    check_ladder(ladder)?;
    let t_space = model.t_space().clone();
    let nt = t_space.len();
    let weights = model.x_space().weights().to_vec();
    // per replicate and rung: the modulus at each ε
    let moduli: Vec<Vec<Vec<f64>>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let sums = normed_sum_ladder_values(model, ladder, stream(root_seed, "equicontinuity", r));
            sums.iter()
                .map(|s| {
                    let tau: Vec<f64> = (0..nt)
                        .map(|t| weights.iter().enumerate().map(|(x, w)| w * s[x * nt + t].abs().powf(p)).sum())
                        .collect();
                    eps_grid
                        .iter()
                        .map(|eps| {
                            let mut m = 0.0f64;
                            for t in 0..nt {
                                for u in (t + 1)..nt {
                                    if t_space.distance(t, u) < *eps {
                                        m = m.max((tau[t] - tau[u]).abs());
                                    }
                                }
                            }
                            m
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut probability = vec![vec![0.0; h_grid.len()]; eps_grid.len()];
    let mut cp_upper = vec![vec![0.0; h_grid.len()]; eps_grid.len()];
    for (i, _) in eps_grid.iter().enumerate() {
        for (j, h) in h_grid.iter().enumerate() {
            let worst = (0..ladder.len())
                .map(|rung| moduli.iter().filter(|rep| rep[rung][i] > *h).count())
                .max()
                .unwrap_or(0);
            probability[i][j] = worst as f64 / replicates as f64;
            cp_upper[i][j] = clopper_pearson_upper(worst, replicates, CONFIDENCE);
        }
    }
    Ok(EquicontinuityTable {
        ladder: ladder.to_vec(),
        eps: eps_grid.to_vec(),
        h: h_grid.to_vec(),
        probability,
        cp_upper,
        replicates,
    })
}

/// Centered unit-variance scalar laws for Rosenthal-ratio experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarLaw {
    Rademacher,
    Uniform,
    Gaussian,
}

impl ScalarLaw {
    /// `E|ζ|^p`.
    pub fn abs_moment(&self, p: f64) -> f64 {
        match self {
            ScalarLaw::Rademacher => 1.0,
            ScalarLaw::Uniform => 3f64.powf(0.5 * p) / (p + 1.0),
            ScalarLaw::Gaussian => normal_abs_moment(p),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            ScalarLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            ScalarLaw::Uniform => 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0),
            ScalarLaw::Gaussian => rng.sample(StandardNormal),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub n: usize,
    pub ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// `|n^{-1/2} Σ ζ_k|_p / |ζ_1|_p` along a ladder, with the exact denominator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RosenthalRatio {
    pub law: ScalarLaw,
    pub p: f64,
    pub points: Vec<RatioPoint>,
    pub max_ratio: f64,
    pub max_upper: f64,
}

pub fn rosenthal_ratio_experiment(
    law: ScalarLaw,
    p_values: &[f64],
    ladder: &[usize],
    replicates: usize,
    root_seed: u64,
) -> Result<Vec<RosenthalRatio>> {
    check_ladder(ladder)?;
    check_replicates(replicates, 100)?;
    if let Some(p) = p_values.iter().find(|p| !(**p >= 2.0)) {
        return Err(Error::Domain {
            name: "p",
            value: *p,
            domain: "[2, inf)",
        });
    }
    let label = format!("rosenthal/{law:?}");
    // sums[replicate][rung]
    let sums: Vec<Vec<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(root_seed, &label, r);
            let mut s = 0.0;
            let mut done = 0;
            ladder
                .iter()
                .map(|&n| {
                    while done < n {
                        s += law.sample(&mut rng);
                        done += 1;
                    }
                    s / (n as f64).sqrt()
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(p_values.len());
    for &p in p_values {
        let denom = law.abs_moment(p).powf(1.0 / p);
        let mut points = Vec::with_capacity(ladder.len());
        for (rung, &n) in ladder.iter().enumerate() {
            let vals: Vec<f64> = sums.iter().map(|s| s[rung].abs().powf(p)).collect();
            let e = EmpiricalMoments::from_values(&format!("{label}/p={p}/n={n}"), p, &vals, root_seed);
            let (lo, mid, hi) = e.root();
            points.push(RatioPoint {
                n,
                ratio: mid / denom,
                ci_low: lo / denom,
                ci_high: hi / denom,
            });
        }
        let max_ratio = points.iter().map(|q| q.ratio).fold(0.0, f64::max);
        let max_upper = points.iter().map(|q| q.ci_high).fold(0.0, f64::max);
        out.push(RosenthalRatio {
            law,
            p,
            points,
            max_ratio,
            max_upper,
        });
    }
    Ok(out)
}

/// Monte Carlo comparison of the second norm with `(E λ_p^Q(Q))^{1/pQ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop41Estimate {
    pub p: f64,
    pub q: f64,
    /// `E ∫ max_t |ξ|^{pQ} dμ`, the quantity `λ` bounds pointwise.
    pub lhs_second: EmpiricalMoments,
    /// `E max_t (∫ |ξ|^p dμ)^Q`.
    pub lhs_first: EmpiricalMoments,
    /// `E λ_p^Q(Q)`.
    pub rhs: EmpiricalMoments,
    /// Replicates whose series could not be evaluated.
    pub divergent: usize,
}

pub fn prop41_expectation(model: &RandomFieldModel, p: f64, q: f64, replicates: usize, root_seed: u64) -> Result<Prop41Estimate> {
    check_replicates(replicates, 100)?;
    let rows: Vec<(f64, f64, f64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut sampler = PathSampler::new(model, stream(root_seed, "prop41", r));
            let mut values = vec![0.0; model.nx() * model.nt()];
            sampler.next_into(&mut values);
            let field = Field::from_parts_unchecked(values, model.x_space().clone(), model.t_space().clone());
            let terms = prop41_terms(&field, p, q);
            let lambda = prop41_bound(&field, p, q).map(|b| b.series_total);
            match (terms, lambda) {
                (Ok(t), Ok(l)) => (t.sup_inside, t.delta.powf(q), l.powf(q)),
                _ => (f64::NAN, f64::NAN, f64::NAN),
            }
        })
        .collect();
    let divergent = rows.iter().filter(|r| !r.2.is_finite()).count();
    let pick = |k: usize| -> Vec<f64> {
        rows.iter()
            .map(|r| match k {
                0 => r.0,
                1 => r.1,
                _ => r.2,
            })
            .collect()
    };
    let order = p * q;
    Ok(Prop41Estimate {
        p,
        q,
        lhs_second: EmpiricalMoments::from_values("second_norm", order, &pick(0), root_seed),
        lhs_first: EmpiricalMoments::from_values("first_norm", order, &pick(1), root_seed),
        rhs: EmpiricalMoments::from_values("lambda", order, &pick(2), root_seed),
        divergent,
    })
}

#[cfg(test)]
mod tests {
    use super::super::model::{Kernel, ModelKind, ModelSpec};
    use super::*;
    use crate::measure_grid::{IndexSpace, MeasureSpace};
    use std::sync::Arc;

    fn model(kind: ModelKind, t_kernel: Kernel) -> RandomFieldModel {
        let x = Arc::new(MeasureSpace::uniform(2, 0.5).unwrap());
        let t = Arc::new(IndexSpace::from_coords((0..4).map(|i| vec![i as f64]).collect(), 1.0).unwrap());
        let spec = ModelSpec {
            kind,
            scale: 1.0,
            x_kernel: Kernel::Independent,
            t_kernel,
        };
        RandomFieldModel::new(spec, x, t).unwrap()
    }

    #[test]
    fn constant_functional() {
        let m = model(ModelKind::Gaussian, Kernel::Independent);
        let one = |_: &Field| 1.0;
        let e = empirical_moment(&m, 3, "one", &one, 1.0, 200, 1).unwrap();
        assert_eq!((e.estimate, e.ci_low, e.ci_high), (1.0, 1.0, 1.0));
        assert!(empirical_moment(&m, 3, "one", &one, 1.0, 50, 1).is_err());
    }

    #[test]
    fn tail_edges() {
        let t = tail_from_values(&[1.0, 2.0, 3.0], &[0.5, 10.0]);
        assert_eq!(t.survival, vec![1.0, 0.0]);
        assert!((t.cp_upper[1] - (1.0 - 0.01f64.powf(1.0 / 3.0))).abs() < 1e-15);
    }

    #[test]
    fn zero_model_diagnostics() {
        let m = model(ModelKind::Gaussian, Kernel::Zero);
        let f = |s: &Field| first_norm_power(s, 2.0);
        let d = clt_diagnostic(&m, &[1, 2, 4], &f, 1000, 3).unwrap();
        assert!(d.ks.iter().all(|k| *k == 0.0));
        let eq = equicontinuity_diagnostic(&m, &[1, 2], 2.0, &[0.5], &[0.1], 100, 3).unwrap();
        assert_eq!(eq.probability[0][0], 0.0);
    }

    #[test]
    fn equicontinuity_constant_and_empty() {
        let m = model(ModelKind::Gaussian, Kernel::Constant);
        let eq = equicontinuity_diagnostic(&m, &[1, 4], 2.0, &[1.5], &[1e-9], 200, 4).unwrap();
        assert_eq!(eq.probability[0][0], 0.0);
        let m = model(ModelKind::Gaussian, Kernel::Independent);
        // normalized spacing is 1/1.5: ε below it selects no pairs
        let eq = equicontinuity_diagnostic(&m, &[1, 4], 2.0, &[0.5, 2.0], &[1e-9], 200, 4).unwrap();
        assert_eq!(eq.probability[0][0], 0.0);
        assert!(eq.probability[1][0] > 0.9);
    }

    #[test]
    fn rademacher_ratio_at_one() {
        let r = rosenthal_ratio_experiment(ScalarLaw::Rademacher, &[2.0, 4.0], &[1, 2, 8], 200, 9).unwrap();
        for rr in &r {
            assert_eq!(rr.points[0].ratio, 1.0);
        }
        // p = 2: |S_n|_2 = 1 in law for every n
        assert!((r[0].points[2].ratio - 1.0).abs() < 0.15);
    }

    #[test]
    fn prop41_zero_model() {
        let m = model(ModelKind::Gaussian, Kernel::Zero);
        let e = prop41_expectation(&m, 2.0, 1.0, 100, 1).unwrap();
        assert_eq!(e.lhs_second.estimate, 0.0);
        assert_eq!(e.rhs.estimate, 0.0);
    }
}
