//! Moment and tail bounds for random fields in hybrid Lebesgue-continuous
//! spaces over discretized domains, with Monte Carlo validation.

pub mod entropy_bounds;
pub mod error;
pub mod measure_grid;
pub mod metric_entropy;
pub mod mixed_norms;
pub mod numeric;
pub mod stochastic_lab;

pub use error::{Error, Result};
