//! Stage execution.

use crate::report::{
    BoundReport, BoundRow, EntropyReport, NormRow, NormsReport, SimulateReport, StageReport, ValidateReport,
};
use crate::spec::{Experiment, Stage};
use anyhow::{Context, Result};
use lcbounds::entropy_bounds::{prop21_bound, thm32_bound, BoundOptions, DbarForm, RosenthalParams, DEFAULT_ALPHA_GRID};
use lcbounds::metric_entropy::{entropy_dimension_fit_window, EntropyProfile, FitWindow};
use lcbounds::mixed_norms::{cl_norm, lc_norm};
use lcbounds::stochastic_lab::rng::derive_seed;
use lcbounds::stochastic_lab::{
    first_norm_domination, ladder_values, normed_sum_domination, sample_field, second_norm_domination, smallest_slack,
    tail_domination, DominationRow, Functional, ModelKind,
};
use lcbounds::measure_grid::Field;

pub fn bound_options(exp: &Experiment) -> BoundOptions {
    let flags = &exp.spec.flags;
    let params = RosenthalParams::new(flags.symmetric_constant);
    BoundOptions {
        alpha_grid: exp.spec.alpha_grid.clone().unwrap_or_else(|| DEFAULT_ALPHA_GRID.to_vec()),
        dbar_form: if flags.literal_26_form {
            DbarForm::Literal
        } else {
            DbarForm::Derived
        },
        constant: exp.model.sum_constant(params, flags.mixingale_terms),
    }
}

/// Factor on the normed-sum bound tolerated for this model.
pub fn slack_allowed(exp: &Experiment) -> f64 {
    match exp.model.kind() {
        ModelKind::MartingaleDifference { .. } => exp.spec.flags.martingale_slack,
        _ => 1.0,
    }
}

pub fn run_stage(exp: &Experiment, stage: Stage) -> Result<StageReport> {
    match stage {
        Stage::Norms => norms(exp).map(StageReport::Norms),
        Stage::Entropy => entropy(exp).map(StageReport::Entropy),
        Stage::Bound => bound(exp).map(StageReport::Bound),
        Stage::Simulate => simulate(exp).map(|(r, _)| StageReport::Simulate(r)),
        Stage::Validate => validate(exp).map(StageReport::Validate),
    }
    .with_context(|| format!("stage {stage}"))
}

fn norms(exp: &Experiment) -> Result<NormsReport> {
    let seed = derive_seed(exp.root_seed, "norms", 0);
    let field = sample_field(&exp.model, seed);
    let rows = exp
        .spec
        .p
        .iter()
        .map(|&p| {
            Ok(NormRow {
                p,
                cl_norm: cl_norm(&field, p)?,
                lc_norm: lc_norm(&field, p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormsReport {
        realization_seed: seed,
        rows,
    })
}

fn entropy(exp: &Experiment) -> Result<EntropyReport> {
    let space = exp.model.t_space();
    let profile = EntropyProfile::for_space(space)?;
    let fit = entropy_dimension_fit_window(&profile, FitWindow::GRID).ok();
    Ok(EntropyReport {
        t_len: space.len(),
        radius: space.radius(),
        profile,
        fit,
    })
}

fn bound(exp: &Experiment) -> Result<BoundReport> {
    let options = bound_options(exp);
    let m = &exp.model;
    let mut rows = Vec::new();
    for &p in &exp.spec.p {
        for &q in &exp.spec.q {
            let mut reports = vec![prop21_bound(m, p, q, m.x_space(), m.nt(), &options)?];
            if p >= 2.0 {
                reports.push(thm32_bound(m, p, q, m.x_space(), m.nt(), &options)?);
            }
            for r in reports {
                rows.push(BoundRow {
                    kind: serde_json::to_value(r.kind)?.as_str().unwrap_or_default().to_string(),
                    p,
                    q,
                    sigma_bar: r.sigma_bar,
                    scale: r.scale,
                    theta_star: r.theta,
                    series_total: r.series_total,
                    nu: r.nu,
                    k_pq: r.k_pq,
                });
            }
        }
    }
    Ok(BoundReport { rows })
}

/// Per-replicate values `|S_n|_{p,∞}` as `(replicate, n, functional, value)`.
pub type ReplicateRow = (usize, usize, String, f64);

pub fn simulate(exp: &Experiment) -> Result<(SimulateReport, Option<Vec<ReplicateRow>>)> {
    let spec = &exp.spec;
    let slack = slack_allowed(exp);
    let rows = normed_sum_domination(
        &exp.model,
        &spec.p,
        &spec.q,
        &spec.n_ladder,
        spec.replicates.moments,
        exp.root_seed,
        &bound_options(exp),
        slack,
    )?;
    let per_replicate = spec.flags.per_replicate.then(|| replicate_values(exp));
    Ok((
        SimulateReport {
            replicates: spec.replicates.moments,
            slack_allowed: slack,
            rows,
        },
        per_replicate,
    ))
}

/// The same paths as [`simulate`], one row per replicate, rung and `p`.
fn replicate_values(exp: &Experiment) -> Vec<ReplicateRow> {
    let spec = &exp.spec;
    let closures: Vec<Box<dyn Fn(&Field) -> f64 + Sync>> = spec
        .p
        .iter()
        .map(|&p| Box::new(move |f: &Field| cl_norm(f, p).unwrap_or(f64::NAN)) as Box<dyn Fn(&Field) -> f64 + Sync>)
        .collect();
    let functionals: Vec<Functional> = closures.iter().map(|b| b.as_ref()).collect();
    let values = ladder_values(&exp.model, &spec.n_ladder, &functionals, spec.replicates.moments, exp.root_seed, "thm32");
    let mut out = Vec::new();
    for (rung, &n) in spec.n_ladder.iter().enumerate() {
        for (i, p) in spec.p.iter().enumerate() {
            for (r, v) in values[rung][i].iter().enumerate() {
                out.push((r, n, format!("cl_norm_p{p}"), *v));
            }
        }
    }
    out
}

fn validate(exp: &Experiment) -> Result<ValidateReport> {
    let spec = &exp.spec;
    let options = bound_options(exp);
    let (sim, _) = simulate(exp)?;
    let mut rows: Vec<DominationRow> = sim.rows;
    rows.extend(first_norm_domination(
        &exp.model,
        &spec.p,
        &spec.q,
        spec.replicates.moments,
        exp.root_seed,
        &options,
    )?);
    rows.extend(second_norm_domination(&exp.model, &spec.p, &spec.q, spec.replicates.second_norm, exp.root_seed)?);
    let tail = if spec.z_grid.is_empty() {
        None
    } else {
        let p = spec.p[0];
        Some(tail_domination(
            &exp.model,
            p,
            &spec.q_grid,
            &spec.z_grid,
            spec.replicates.tail,
            exp.root_seed,
            &options,
        )?)
    };
    let violations = rows.iter().filter(|r| !r.dominated).count()
        + tail.as_ref().map_or(0, |t| {
            t.cp_upper
                .iter()
                .zip(t.legendre.iter().zip(&t.example21))
                .filter(|(u, (l, e))| u > l || u > e)
                .count()
        });
    Ok(ValidateReport {
        verdict: if violations == 0 { "pass" } else { "fail" }.to_string(),
        slack_allowed: sim.slack_allowed,
        smallest_slack: smallest_slack(&rows),
        violations,
        rows,
        tail,
    })
}
