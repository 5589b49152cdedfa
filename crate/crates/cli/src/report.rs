//! Versioned report files written by each stage.

use lcbounds::metric_entropy::{DimensionFit, EntropyProfile};
use lcbounds::stochastic_lab::{DominationRow, TailDomination};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub spec_name: String,
    pub spec_hash: String,
    pub root_seed: u64,
    #[serde(flatten)]
    pub body: StageReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum StageReport {
    Norms(NormsReport),
    Entropy(EntropyReport),
    Bound(BoundReport),
    Simulate(SimulateReport),
    Validate(ValidateReport),
}

impl StageReport {
    pub fn stage_name(&self) -> &'static str {
        match self {
            StageReport::Norms(_) => "norms",
            StageReport::Entropy(_) => "entropy",
            StageReport::Bound(_) => "bound",
            StageReport::Simulate(_) => "simulate",
            StageReport::Validate(_) => "validate",
        }
    }
}

/// Norms of one sampled field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormsReport {
    pub realization_seed: u64,
    pub rows: Vec<NormRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub p: f64,
    /// `sup_t (∫ |f|^p dμ)^{1/p}`.
    pub cl_norm: f64,
    /// `(∫ sup_t |f|^p dμ)^{1/p}`.
    pub lc_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub t_len: usize,
    pub radius: f64,
    pub profile: EntropyProfile,
    /// Absent when too few profile entries fall in the fit window.
    pub fit: Option<DimensionFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub kind: String,
    pub p: f64,
    pub q: f64,
    pub sigma_bar: f64,
    /// Normalizer of the distance on `T`.
    pub scale: f64,
    pub theta_star: f64,
    pub series_total: f64,
    pub nu: f64,
    /// Constant at order `pQ`, for the normed-sum bound.
    pub k_pq: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub replicates: usize,
    pub slack_allowed: f64,
    pub rows: Vec<DominationRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidateReport {
    /// `"pass"` when every check holds, otherwise `"fail"`.
    pub verdict: String,
    pub slack_allowed: f64,
    /// Largest `ci_hi / bound` over all moment rows.
    pub smallest_slack: f64,
    pub violations: usize,
    pub rows: Vec<DominationRow>,
    pub tail: Option<TailDomination>,
}
