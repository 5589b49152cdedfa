//! Plot-ready CSV tables from report files.

use crate::report::{Report, StageReport, SCHEMA_VERSION};
use lcbounds::stochastic_lab::DominationRow;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: schema mismatch: {reason}")]
    Schema { path: PathBuf, reason: String },
}

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub const SIMULATE_HEADER: &str = "n,functional,estimate,ci_lo,ci_hi,bound,dominated";
pub const BOUND_HEADER: &str = "kind,p,Q,sigma_bar,theta_star,nu";
pub const TAIL_HEADER: &str = "z,theoretical,empirical,cp_upper";
pub const VALIDATE_HEADER: &str = "check,n,functional,p,Q,estimate,ci_lo,ci_hi,bound,slack,dominated";
pub const NORMS_HEADER: &str = "p,cl_norm,lc_norm";
pub const ENTROPY_HEADER: &str = "eps,cover_upper,pack_lower";

pub fn simulate_csv(rows: &[DominationRow]) -> String {
    let mut s = format!("{SIMULATE_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{}_q{},{},{},{},{},{}\n",
            r.n,
            r.functional,
            r.q,
            fmt_float(r.estimate),
            fmt_float(r.ci_lo),
            fmt_float(r.ci_hi),
            fmt_float(r.bound),
            r.dominated
        ));
    }
    s
}

/// CSV tables for one report, as `(file name, contents)`.
pub fn tables(report: &Report) -> Vec<(String, String)> {
    match &report.body {
        StageReport::Norms(n) => {
            let mut s = format!("{NORMS_HEADER}\n");
            for r in &n.rows {
                s.push_str(&format!("{},{},{}\n", r.p, fmt_float(r.cl_norm), fmt_float(r.lc_norm)));
            }
            vec![("norms.csv".into(), s)]
        }
        StageReport::Entropy(e) => {
            let mut s = format!("{ENTROPY_HEADER}\n");
            let p = &e.profile;
            for i in 0..p.eps_grid.len() {
                s.push_str(&format!(
                    "{},{},{}\n",
                    fmt_float(p.eps_grid[i]),
                    fmt_float(p.cover_upper[i]),
                    fmt_float(p.pack_lower[i])
                ));
            }
            vec![("entropy.csv".into(), s)]
        }
        StageReport::Bound(b) => {
            let mut s = format!("{BOUND_HEADER}\n");
            for r in &b.rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.kind,
                    r.p,
                    r.q,
                    fmt_float(r.sigma_bar),
                    fmt_float(r.theta_star),
                    fmt_float(r.nu)
                ));
            }
            vec![("bound.csv".into(), s)]
        }
        StageReport::Simulate(sim) => vec![("simulate.csv".into(), simulate_csv(&sim.rows))],
        StageReport::Validate(v) => {
            let mut s = format!("{VALIDATE_HEADER}\n");
            for r in &v.rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.check,
                    r.n,
                    r.functional,
                    r.p,
                    r.q,
                    fmt_float(r.estimate),
                    fmt_float(r.ci_lo),
                    fmt_float(r.ci_hi),
                    fmt_float(r.bound),
                    fmt_float(r.slack),
                    r.dominated
                ));
            }
            let mut t = format!("{TAIL_HEADER}\n");
            if let Some(tail) = &v.tail {
                for i in 0..tail.z.len() {
                    // the tighter of the two certified bounds
                    let theoretical = tail.legendre[i].min(tail.example21[i]);
                    t.push_str(&format!(
                        "{},{},{},{}\n",
                        fmt_float(tail.z[i]),
                        fmt_float(theoretical),
                        fmt_float(tail.empirical[i]),
                        fmt_float(tail.cp_upper[i])
                    ));
                }
            }
            vec![("validate.csv".into(), s), ("tail.csv".into(), t)]
        }
    }
}

pub fn read_report(path: &Path) -> Result<Report, RenderError> {
    let text = fs::read_to_string(path).map_err(|source| RenderError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let schema = |reason: String| RenderError::Schema {
        path: path.to_path_buf(),
        reason,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| schema(e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(schema(format!("schema_version {v}, expected {SCHEMA_VERSION}"))),
        None => return Err(schema("no schema_version field".into())),
    }
    serde_json::from_value(value).map_err(|e| schema(e.to_string()))
}

/// Renders each report into `out`; returns the written paths.
pub fn render(reports: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>, RenderError> {
    let parsed = reports.iter().map(|p| read_report(p)).collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(out).map_err(|source| RenderError::Write {
        path: out.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for report in &parsed {
        for (name, contents) in tables(report) {
            let path = out.join(name);
            fs::write(&path, contents).map_err(|source| RenderError::Write {
                path: path.clone(),
                source,
            })?;
            written.push(path);
        }
    }
    Ok(written)
}
