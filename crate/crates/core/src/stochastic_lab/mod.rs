//! Seeded simulation of independent, martingale-difference and mixingale
//! random field sequences, their normed sums, and Monte Carlo estimates
//! used to check the bounds.

mod domination;
mod experiments;
mod model;
pub mod rng;
mod sampling;
pub mod stats;

pub use domination::{
    first_norm_domination, first_norm_moment_bounds, normed_sum_domination, second_norm_domination, smallest_slack,
    suffix_minima, tail_domination, DominationRow, TailDomination,
};
pub use experiments::{
    clt_diagnostic, empirical_moment, empirical_moment_ladder, empirical_tail, equicontinuity_diagnostic,
    first_norm_power, ladder_values, prop41_expectation, rosenthal_ratio_experiment, tail_from_values, CltDiagnostic,
    EquicontinuityTable, Functional, MomentFunctional, Prop41Estimate, RatioPoint, RosenthalRatio, ScalarLaw,
    TailEstimate,
};
pub use model::{Kernel, ModelKind, ModelSpec, RandomFieldModel};
pub use sampling::{normed_sum, normed_sum_ladder_with, sample_field, PathSampler};
pub use stats::EmpiricalMoments;
