//! Running a spec end to end and writing its outputs.

use crate::render::{fmt_float, simulate_csv};
use crate::report::{Report, StageReport, SCHEMA_VERSION, TOOL_VERSION};
use crate::spec::{Experiment, ExperimentSpec, Stage, ValidationErrors};
use crate::stages::{run_stage, simulate};
use anyhow::{Context, Result};
use std::fs;
use std::path::{Path, PathBuf};

pub const QUARANTINE_DIR: &str = "quarantine";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub spec: PathBuf,
    /// Overrides the spec's stage list when present.
    pub stages: Option<Vec<Stage>>,
    /// Overrides the spec's output directory.
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Worker threads; the machine default when absent.
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub enum RunStatus {
    /// All stages ran and every domination check held.
    Ok,
    /// `validate` found at least one violated bound.
    Violations(usize),
}

#[derive(Debug)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub written: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Ok => 0,
            RunStatus::Violations(_) => 1,
        }
    }
}

/// Parses a comma-separated stage list; an empty string is no stages.
pub fn parse_stages(list: &str) -> Result<Vec<Stage>, ValidationErrors> {
    let mut stages = Vec::new();
    let mut bad = Vec::new();
    for s in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match Stage::parse(s) {
            Some(st) => stages.push(st),
            None => bad.push(format!("unknown stage {s:?}")),
        }
    }
    if bad.is_empty() {
        Ok(stages)
    } else {
        Err(ValidationErrors(bad))
    }
}

pub fn load_experiment(opts: &RunOptions) -> Result<(Experiment, Vec<Stage>, PathBuf), ValidationErrors> {
    let mut spec = ExperimentSpec::load(&opts.spec)?;
    if let Some(stages) = &opts.stages {
        spec.stages = stages.clone();
    }
    let base = opts.spec.parent().unwrap_or(Path::new("."));
    let out = match (&opts.out, &spec.output_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => PathBuf::from("out"),
    };
    let exp = spec.validate(opts.seed)?;
    let mut stages = exp.spec.stages.clone();
    stages.dedup();
    Ok((exp, stages, out))
}

pub fn run(opts: &RunOptions) -> Result<RunOutcome> {
    let (exp, stages, out) = load_experiment(opts)?;
    if stages.is_empty() {
        return Ok(RunOutcome {
            status: RunStatus::Ok,
            written: Vec::new(),
        });
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().context("building the worker pool")?;
    pool.install(|| execute(&exp, &stages, &out))
}

fn envelope(exp: &Experiment, body: StageReport) -> Report {
    Report {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        spec_name: exp.spec.name.clone(),
        spec_hash: exp.spec_hash.clone(),
        root_seed: exp.root_seed,
        body,
    }
}

struct Output {
    name: String,
    bytes: Vec<u8>,
}

fn execute(exp: &Experiment, stages: &[Stage], out: &Path) -> Result<RunOutcome> {
    let mut outputs = Vec::new();
    let mut violations = 0;
    for &stage in stages {
        let result = stage_outputs(exp, stage, &mut violations);
        match result {
            Ok(mut o) => outputs.append(&mut o),
            Err(e) => {
                let q = out.join(QUARANTINE_DIR);
                outputs.push(Output {
                    name: "error.txt".into(),
                    bytes: format!("{e:#}\n").into_bytes(),
                });
                write_all(&q, &outputs)?;
                return Err(e.context(format!("partial outputs written to {}", q.display())));
            }
        }
    }
    let written = write_all(out, &outputs)?;
    Ok(RunOutcome {
        status: if violations == 0 {
            RunStatus::Ok
        } else {
            RunStatus::Violations(violations)
        },
        written,
    })
}

fn json_bytes(report: &Report) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(report)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn stage_outputs(exp: &Experiment, stage: Stage, violations: &mut usize) -> Result<Vec<Output>> {
    let mut outputs = Vec::new();
    if stage == Stage::Simulate {
        let (report, per_rep) = simulate(exp).context("stage simulate")?;
        outputs.push(Output {
            name: "simulate.csv".into(),
            bytes: simulate_csv(&report.rows).into_bytes(),
        });
        if let Some(rows) = per_rep {
            let mut csv = String::from("replicate,n,functional,value\n");
            for (r, n, f, v) in rows {
                csv.push_str(&format!("{r},{n},{f},{}\n", fmt_float(v)));
            }
            outputs.push(Output {
                name: "simulate_replicates.csv".into(),
                bytes: csv.into_bytes(),
            });
        }
        outputs.push(Output {
            name: "simulate.json".into(),
            bytes: json_bytes(&envelope(exp, StageReport::Simulate(report)))?,
        });
        return Ok(outputs);
    }
    let body = run_stage(exp, stage)?;
    if let StageReport::Validate(v) = &body {
        *violations += v.violations;
    }
    outputs.push(Output {
        name: format!("{stage}.json"),
        bytes: json_bytes(&envelope(exp, body))?,
    });
    Ok(outputs)
}

fn write_all(dir: &Path, outputs: &[Output]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::with_capacity(outputs.len());
    for o in outputs {
        let path = dir.join(&o.name);
        fs::write(&path, &o.bytes).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
