//! Monte Carlo properties of the simulated models. Sample sizes follow the
//! stated tolerances; seeds are fixed.

use lcbounds::measure_grid::{Field, IndexSpace, MeasureSpace, PointId};
use lcbounds::mixed_norms::cl_norm;
use lcbounds::stochastic_lab::rng::{derive_seed, stream};
use lcbounds::stochastic_lab::stats::{clopper_pearson_upper, ks_critical_99, ks_statistic};
use lcbounds::stochastic_lab::{
    clt_diagnostic, equicontinuity_diagnostic, ladder_values, prop41_expectation, rosenthal_ratio_experiment,
    sample_field, tail_from_values, EmpiricalMoments, Kernel, ModelKind, ModelSpec, PathSampler, RandomFieldModel,
    ScalarLaw,
};
use rayon::prelude::*;
use std::sync::Arc;

fn model(kind: ModelKind, n: usize) -> RandomFieldModel {
    let x = MeasureSpace::new((0..n).map(|i| PointId::Scalar(i as f64)).collect(), vec![1.0 / n as f64; n]).unwrap();
    let t = IndexSpace::from_coords((0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect(), 1.0).unwrap();
    let spec = ModelSpec {
        kind,
        scale: 1.0,
        x_kernel: Kernel::Exponential { length: 0.5 },
        t_kernel: Kernel::Exponential { length: 0.5 },
    };
    RandomFieldModel::new(spec, Arc::new(x), Arc::new(t)).unwrap()
}

fn all_kinds() -> Vec<ModelKind> {
    vec![
        ModelKind::Gaussian,
        ModelKind::SymmetrizedUniform,
        ModelKind::HeavyTailT { dof: 6.0 },
        ModelKind::MartingaleDifference { low: 0.5, high: 1.5 },
        ModelKind::MixingaleAr { a: 0.5, signal: 0.7 },
    ]
}

/// Per-cell sample mean and standard error over `draws` independent fields.
fn cell_moments(m: &RandomFieldModel, draws: u64, label: &str) -> (Vec<f64>, Vec<f64>) {
    let width = m.nx() * m.nt();
    let (sum, sq) = (0..draws)
        .into_par_iter()
        .map(|r| sample_field(m, derive_seed(7, label, r)).values().to_vec())
        .fold(
            || (vec![0.0; width], vec![0.0; width]),
            |(mut s, mut q), v| {
                for i in 0..width {
                    s[i] += v[i];
                    q[i] += v[i] * v[i];
                }
                (s, q)
            },
        )
        .reduce(
            || (vec![0.0; width], vec![0.0; width]),
            |(mut s, mut q), (s2, q2)| {
                for i in 0..width {
                    s[i] += s2[i];
                    q[i] += q2[i];
                }
                (s, q)
            },
        );
    let n = draws as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let var: Vec<f64> = sq.iter().zip(&mean).map(|(q, m)| q / n - m * m).collect();
    (mean, var)
}

#[test]
fn every_model_is_mean_zero() {
    let draws = 100_000;
    for kind in all_kinds() {
        let m = model(kind.clone(), 4);
        let (mean, var) = cell_moments(&m, draws, "mean-zero");
        for (mu, v) in mean.iter().zip(&var) {
            let se = (v / draws as f64).sqrt();
            assert!(mu.abs() <= 4.0 * se, "{kind:?}: mean {mu} with standard error {se}");
        }
    }
}

#[test]
fn gaussian_variance_matches_kernel() {
    let m = model(ModelKind::Gaussian, 4);
    let (_, var) = cell_moments(&m, 100_000, "variance");
    for x in 0..4 {
        for t in 0..4 {
            let v = var[x * 4 + t];
            assert!((v / m.variance(x, t) - 1.0).abs() < 0.05, "({x},{t}): {v} vs {}", m.variance(x, t));
        }
    }
}

#[test]
fn scaling_is_equivariant() {
    for kind in all_kinds() {
        let m = model(kind.clone(), 4);
        let doubled = m.scaled(2.0).unwrap();
        let norm = |f: &Field| cl_norm(f, 3.0).unwrap();
        let functionals: [&(dyn Fn(&Field) -> f64 + Sync); 1] = [&norm];
        let a = ladder_values(&m, &[1, 8], &functionals, 200, 3, "scaling");
        let b = ladder_values(&doubled, &[1, 8], &functionals, 200, 3, "scaling");
        for rung in 0..2 {
            for order in [1.0, 2.5, 6.0] {
                let ma: f64 = a[rung][0].iter().map(|v| v.powf(order)).sum();
                let mb: f64 = b[rung][0].iter().map(|v| v.powf(order)).sum();
                assert!((mb / ma / 2f64.powf(order) - 1.0).abs() < 1e-10, "{kind:?} order {order}");
            }
        }
    }
}

#[test]
fn martingale_differences_are_uncorrelated_with_the_past() {
    let m = model(ModelKind::MartingaleDifference { low: 0.3, high: 2.0 }, 2);
    let paths = 100_000u64;
    let lags = 3;
    // products ξ_k(0,0) · tanh(ξ_{k-j}(0,0)) at the last step of a path
    let rows: Vec<Vec<f64>> = (0..paths)
        .into_par_iter()
        .map(|r| {
            let mut sampler = PathSampler::new(&m, stream(11, "mds", r));
            let mut path = vec![vec![0.0; 4]; lags + 1];
            for f in path.iter_mut() {
                sampler.next_into(f);
            }
            let last = path[lags][0];
            (1..=lags).map(|j| last * path[lags - j][0].tanh()).collect()
        })
        .collect();
    for j in 0..lags {
        let vals: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(mean.abs() <= 4.0 * se, "lag {}: {mean} with standard error {se}", j + 1);
    }
    // the conditional scale does depend on the past
    let sq: Vec<f64> = (0..20_000u64)
        .into_par_iter()
        .map(|r| {
            let mut sampler = PathSampler::new(&m, stream(12, "mds", r));
            let (mut a, mut b) = (vec![0.0; 4], vec![0.0; 4]);
            sampler.next_into(&mut a);
            sampler.next_into(&mut b);
            b[0] * b[0] * a[0].signum()
        })
        .collect();
    assert!(sq.iter().sum::<f64>() / sq.len() as f64 > 0.1);
}

#[test]
fn gaussian_sums_keep_their_law() {
    let m = model(ModelKind::Gaussian, 4);
    let norm = |f: &Field| cl_norm(f, 2.0).unwrap();
    let values = ladder_values(&m, &[1, 64], &[&norm], 4000, 5, "stability");
    assert!(ks_statistic(&values[0][0], &values[1][0]) < ks_critical_99(4000, 4000));
    let d = clt_diagnostic(&m, &[1, 2, 4, 8, 16], &norm, 2000, 6).unwrap();
    assert!(d.all_below_critical(), "{:?}", d.ks);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let m = model(ModelKind::MixingaleAr { a: 0.5, signal: 0.7 }, 4);
    let norm = |f: &Field| cl_norm(f, 2.0).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| ladder_values(&m, &[1, 3, 9], &[&norm], 300, 21, "threads"))
    };
    let one = run(1);
    for threads in [2, 4] {
        let other = run(threads);
        for (a, b) in one.iter().flatten().flatten().zip(other.iter().flatten().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn gaussian_rosenthal_ratio_is_flat() {
    let ladder = [1, 2, 4, 8, 16, 32, 64, 128, 256];
    let out = rosenthal_ratio_experiment(ScalarLaw::Gaussian, &[2.0, 4.0], &ladder, 10_000, 8).unwrap();
    // at level 0.99 about 0.2 of the 18 intervals are expected to miss 1
    let misses = out
        .iter()
        .flat_map(|r| &r.points)
        .filter(|p| !(p.ci_low <= 1.0 && 1.0 <= p.ci_high))
        .count();
    assert!(misses <= 1, "{misses} intervals exclude the exact ratio");
    let rad = rosenthal_ratio_experiment(ScalarLaw::Rademacher, &[4.0], &[1, 4], 500, 8).unwrap();
    assert_eq!(rad[0].points[0].ratio, 1.0);
}

#[test]
fn equicontinuity_probabilities_shrink_with_eps() {
    let m = model(ModelKind::Gaussian, 6);
    let eps = [0.9, 0.6, 0.4, 0.1];
    let h = [0.05, 0.2, 0.5];
    let table = equicontinuity_diagnostic(&m, &[1, 4, 16], 2.0, &eps, &h, 2000, 9).unwrap();
    for j in 0..h.len() {
        for i in 1..eps.len() {
            assert!(table.probability[i][j] <= table.probability[i - 1][j]);
        }
    }
    // 0.1 is below the smallest normalized distance
    assert!(table.probability[3].iter().all(|p| *p == 0.0));
}

#[test]
fn empirical_summaries() {
    let ones = EmpiricalMoments::from_values("one", 1.0, &[1.0; 500], 1);
    assert_eq!((ones.estimate, ones.ci_low, ones.ci_high), (1.0, 1.0, 1.0));

    let tail = tail_from_values(&[1.0, 2.0, 3.0, f64::NAN], &[0.5, 10.0]);
    assert_eq!(tail.survival, vec![1.0, 0.0]);
    assert_eq!(tail.excluded, 1);
    assert!((tail.cp_upper[1] - (1.0 - 0.01f64.powf(1.0 / 3.0))).abs() < 1e-15);
    assert_eq!(clopper_pearson_upper(3, 3, 0.99), 1.0);
}

#[test]
fn second_norm_bound_holds_in_repetitions() {
    let m = model(ModelKind::Gaussian, 4);
    for rep in 0..20 {
        let seed = derive_seed(13, "prop41", rep);
        let e = prop41_expectation(&m, 2.0, 1.0, 2000, seed).unwrap();
        assert_eq!(e.divergent, 0);
        assert!(e.lhs_second.root().2 <= e.rhs.root().0, "repetition {rep}");
    }
}
