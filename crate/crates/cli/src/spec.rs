//! Experiment specification files and their validation.

use lcbounds::measure_grid::{IndexSpace, IndexSpaceDescriptor, MeasureSpace, MeasureSpaceDescriptor, PointId};
use lcbounds::stochastic_lab::{ModelKind, ModelSpec, RandomFieldModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Norms,
    Entropy,
    Bound,
    Simulate,
    Validate,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Norms, Stage::Entropy, Stage::Bound, Stage::Simulate, Stage::Validate];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Norms => "norms",
            Stage::Entropy => "entropy",
            Stage::Bound => "bound",
            Stage::Simulate => "simulate",
            Stage::Validate => "validate",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.name() == s)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Evenly spaced scalar points on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineGrid {
    pub n: usize,
    #[serde(default)]
    pub lo: f64,
    #[serde(default = "one")]
    pub hi: f64,
}

fn one() -> f64 {
    1.0
}

impl LineGrid {
    fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XSpaceSpec {
    File { file: PathBuf },
    /// Grid points with equal weights summing to `mass`.
    Grid {
        grid: LineGrid,
        #[serde(default = "one")]
        mass: f64,
    },
    Inline(MeasureSpaceDescriptor),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TSpaceSpec {
    File { file: PathBuf },
    /// Grid points with distance `|t − s|^alpha`.
    Grid {
        grid: LineGrid,
        #[serde(default = "one")]
        alpha: f64,
    },
    Inline(IndexSpaceDescriptor),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spaces {
    pub x: XSpaceSpec,
    pub t: TSpaceSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replicates {
    /// Normed-sum and single-field moments.
    #[serde(default = "default_moments")]
    pub moments: usize,
    #[serde(default = "default_second_norm")]
    pub second_norm: usize,
    #[serde(default = "default_tail")]
    pub tail: usize,
}

fn default_moments() -> usize {
    10_000
}

fn default_second_norm() -> usize {
    2_000
}

fn default_tail() -> usize {
    100_000
}

impl Default for Replicates {
    fn default() -> Self {
        Self {
            moments: default_moments(),
            second_norm: default_second_norm(),
            tail: default_tail(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    /// Use the displayed form of the single-field distance instead of the
    /// one obtained from the Minkowski step.
    #[serde(default)]
    pub literal_26_form: bool,
    /// Factor on the normed-sum bound allowed for martingale-difference
    /// models, whose constant is known only up to an absolute factor.
    #[serde(default = "default_slack")]
    pub martingale_slack: f64,
    /// Use the Rosenthal constant for symmetric summands.
    #[serde(default)]
    pub symmetric_constant: bool,
    /// Explicit terms in mixingale coefficient sums before the tail bound.
    #[serde(default = "default_terms")]
    pub mixingale_terms: usize,
    /// Write per-replicate functional values from `simulate`.
    #[serde(default)]
    pub per_replicate: bool,
}

fn default_slack() -> f64 {
    2.0
}

fn default_terms() -> usize {
    1000
}

impl Default for Flags {
    fn default() -> Self {
        Self {
            literal_26_form: false,
            martingale_slack: default_slack(),
            symmetric_constant: false,
            mixingale_terms: default_terms(),
            per_replicate: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    pub spaces: Spaces,
    pub model: ModelSpec,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Orders used for tail bounds.
    #[serde(default)]
    pub q_grid: Vec<f64>,
    /// Tail thresholds; no tail check when empty.
    #[serde(default)]
    pub z_grid: Vec<f64>,
    pub n_ladder: Vec<usize>,
    #[serde(default)]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub replicates: Replicates,
    pub root_seed: Option<u64>,
    #[serde(default)]
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub flags: Flags,
}

/// Every problem found in a spec.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationErrors(pub Vec<String>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "spec has {} problem(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

/// A validated spec with its spaces and model built.
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub root_seed: u64,
    pub model: RandomFieldModel,
    /// Hex SHA-256 of the resolved spec without its stage list and output
    /// directory, which do not affect results.
    pub spec_hash: String,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, ValidationErrors> {
        serde_json::from_str(text).map_err(|e| ValidationErrors(vec![format!("spec is not valid JSON for this schema: {e}")]))
    }

    pub fn load(path: &Path) -> Result<Self, ValidationErrors> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ValidationErrors(vec![format!("cannot read {}: {e}", path.display())]))?;
        let mut spec = Self::from_json(&text)?;
        spec.resolve_files(path.parent().unwrap_or(Path::new(".")))?;
        Ok(spec)
    }

    /// Replaces file references with their contents, read relative to `base`.
    pub fn resolve_files(&mut self, base: &Path) -> Result<(), ValidationErrors> {
        let mut errors = Vec::new();
        if let XSpaceSpec::File { file } = &self.spaces.x {
            match read_json::<MeasureSpaceDescriptor>(&base.join(file)) {
                Ok(d) => self.spaces.x = XSpaceSpec::Inline(d),
                Err(e) => errors.push(format!("spaces.x: {e}")),
            }
        }
        if let TSpaceSpec::File { file } = &self.spaces.t {
            match read_json::<IndexSpaceDescriptor>(&base.join(file)) {
                Ok(d) => self.spaces.t = TSpaceSpec::Inline(d),
                Err(e) => errors.push(format!("spaces.t: {e}")),
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ValidationErrors(errors))
        }
    }

    /// Checks the whole spec and builds the model; all problems are
    /// reported together.
    pub fn validate(self, seed_override: Option<u64>) -> Result<Experiment, ValidationErrors> {
        let mut errors = Vec::new();
        let root_seed = seed_override.or(self.root_seed);
        if root_seed.is_none() {
            errors.push("root_seed is missing (no default seed is used)".to_string());
        }
        check_grid(&mut errors, "p", &self.p, |p| p >= 1.0 && p.is_finite(), "finite and >= 1");
        check_grid(&mut errors, "q", &self.q, |q| q >= 1.0 && q.is_finite(), "finite and >= 1");
        if !self.z_grid.is_empty() || !self.q_grid.is_empty() {
            check_grid(&mut errors, "q_grid", &self.q_grid, |q| q > 0.0 && q.is_finite(), "finite and positive");
            check_grid(&mut errors, "z_grid", &self.z_grid, |z| z > 0.0 && z.is_finite(), "finite and positive");
            if self.q_grid.len() == 1 {
                errors.push("q_grid needs at least 2 orders for the power-growth fit".into());
            }
        }
        if let Some(a) = &self.alpha_grid {
            check_grid(&mut errors, "alpha_grid", a, |a| a > 1.0 && a.is_finite(), "finite and > 1");
        }
        if self.n_ladder.is_empty() {
            errors.push("n_ladder is empty".into());
        } else if self.n_ladder[0] == 0 || self.n_ladder.windows(2).any(|w| w[1] <= w[0]) {
            errors.push("n_ladder must be strictly increasing and start at 1 or more".into());
        }
        let needs_sums = self.stages.iter().any(|s| matches!(s, Stage::Simulate | Stage::Validate));
        if needs_sums && self.p.iter().any(|p| *p < 2.0) {
            errors.push("simulate and validate compare against the normed-sum bound, which needs every p >= 2".into());
        }
        if self.replicates.moments < 100 {
            errors.push(format!("replicates.moments = {} (need >= 100)", self.replicates.moments));
        }
        if self.replicates.second_norm < 100 {
            errors.push(format!("replicates.second_norm = {} (need >= 100)", self.replicates.second_norm));
        }
        if !self.z_grid.is_empty() && self.replicates.tail < 1000 {
            errors.push(format!("replicates.tail = {} (need >= 1000)", self.replicates.tail));
        }
        if !(self.flags.martingale_slack >= 1.0 && self.flags.martingale_slack.is_finite()) {
            errors.push(format!("flags.martingale_slack = {} (need a finite value >= 1)", self.flags.martingale_slack));
        }
        if self.flags.mixingale_terms == 0 {
            errors.push("flags.mixingale_terms must be positive".into());
        }
        if let ModelKind::HeavyTailT { dof } = self.model.kind {
            let top = self.p.iter().flat_map(|p| self.q.iter().chain(&self.q_grid).map(move |q| p * q)).fold(0.0, f64::max);
            if !(dof > top) {
                errors.push(format!(
                    "heavy_tail_t with dof = {dof} has no moment of order {top} requested by the p and Q grids"
                ));
            }
        }
        let x = build_x(&self.spaces.x).map_err(|e| errors.push(format!("spaces.x: {e}"))).ok();
        let t = build_t(&self.spaces.t).map_err(|e| errors.push(format!("spaces.t: {e}"))).ok();
        let model = match (x, t) {
            (Some(x), Some(t)) => RandomFieldModel::new(self.model.clone(), Arc::new(x), Arc::new(t))
                .map_err(|e| errors.push(format!("model: {e}")))
                .ok(),
            _ => None,
        };
        if !errors.is_empty() {
            return Err(ValidationErrors(errors));
        }
        let mut spec = self;
        spec.root_seed = root_seed;
        let spec_hash = hash_spec(&spec);
        Ok(Experiment {
            spec,
            root_seed: root_seed.expect("checked above"),
            model: model.expect("checked above"),
            spec_hash,
        })
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn check_grid(errors: &mut Vec<String>, name: &str, grid: &[f64], ok: impl Fn(f64) -> bool, want: &str) {
    if grid.is_empty() {
        errors.push(format!("{name} grid is empty"));
    }
    for v in grid {
        if !ok(*v) {
            errors.push(format!("{name} entry {v} must be {want}"));
        }
    }
}

fn build_x(spec: &XSpaceSpec) -> Result<MeasureSpace, String> {
    match spec {
        XSpaceSpec::File { file } => Err(format!("unresolved file reference {}", file.display())),
        XSpaceSpec::Grid { grid, mass } => {
            if grid.n == 0 {
                return Err("grid has no points".into());
            }
            let w = mass / grid.n as f64;
            MeasureSpace::new(grid.points().into_iter().map(PointId::Scalar).collect(), vec![w; grid.n])
                .map_err(|e| e.to_string())
        }
        XSpaceSpec::Inline(d) => d.build().map_err(|e| e.to_string()),
    }
}

fn build_t(spec: &TSpaceSpec) -> Result<IndexSpace, String> {
    match spec {
        TSpaceSpec::File { file } => Err(format!("unresolved file reference {}", file.display())),
        TSpaceSpec::Grid { grid, alpha } => {
            IndexSpace::from_coords(grid.points().into_iter().map(|t| vec![t]).collect(), *alpha).map_err(|e| e.to_string())
        }
        TSpaceSpec::Inline(d) => d.build().map_err(|e| e.to_string()),
    }
}

fn hash_spec(spec: &ExperimentSpec) -> String {
    let mut hashed = spec.clone();
    hashed.stages.clear();
    hashed.output_dir = None;
    let bytes = serde_json::to_vec(&hashed).expect("spec serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
