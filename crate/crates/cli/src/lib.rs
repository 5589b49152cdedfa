//! Spec-driven experiment runner: builds spaces and models from a JSON
//! spec, computes bounds, runs the Monte Carlo checks, and writes versioned
//! reports and CSV tables.

pub mod render;
pub mod report;
pub mod run;
pub mod spec;
pub mod stages;

pub use run::{run, RunOptions, RunOutcome, RunStatus};
pub use spec::{ExperimentSpec, Stage, ValidationErrors};
