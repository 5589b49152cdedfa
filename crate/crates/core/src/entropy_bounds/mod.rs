//! Moment and tail bounds for suprema of random fields: Rosenthal and
//! mixingale constants, the entropy series and its optimization, and the
//! first-norm, normed-sum and second-norm moment bounds built on them.

mod first_norm;
mod moments;
mod normed_sums;
mod rosenthal;
mod second_norm;
mod series;
mod tail;

pub use first_norm::{dbar_distance, dbar_matrix, prop11_bound, prop21_bound, sigma_bar, DbarForm};
pub use moments::{
    uniform_sum_moment, GaussianMoments, MomentOracle, ScaleLaw, UniformSumMoments, ZeroMoments,
    UNIFORM_MAX_EVEN_ORDER,
};
pub use normed_sums::thm32_bound;
pub use rosenthal::{
    mixingale_coefficient, rosenthal_constant, BetaSequence, MixingaleCoefficient, RosenthalParams, SumConstant,
};
pub use second_norm::{prop41_bound, prop41_terms, Prop41Terms};
pub use series::{closed_form_bound, optimize_theta, pisier_series, SeriesEvaluation, ThetaOptimum};
pub use tail::{
    example21_tail, fit_power_growth, legendre_tail, legendre_tail_table, PowerGrowthFit, TailBound,
    POOR_FIT_RESIDUAL,
};

use crate::error::Result;
use crate::measure_grid::IndexSpace;
use crate::metric_entropy::EntropyProfile;
use serde::{Deserialize, Serialize};

/// Hölder exponents `α` tried in the conjugate-pair infima; `β = α/(α-1)`.
pub const DEFAULT_ALPHA_GRID: [f64; 16] = [
    1.05, 1.1, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 15.0, 20.0,
];

pub fn conjugate(alpha: f64) -> f64 {
    alpha / (alpha - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Entropy series for a given distance and scale.
    Prop11,
    /// First-norm moment of a single field.
    Prop21,
    /// Moments of normed sums, uniformly in `n`.
    Thm32,
    /// Per-realization second-norm quantity.
    Prop41,
}

/// Settings shared by the moment bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    pub alpha_grid: Vec<f64>,
    pub dbar_form: DbarForm,
    pub constant: SumConstant,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            dbar_form: DbarForm::Derived,
            constant: SumConstant::default(),
        }
    }
}

/// A moment bound with every intermediate it was computed from.
///
/// `distance_matrix` holds the raw distance on `T` (`d̄`, `r`, or the
/// realization distance), `scale` the normalizer (`σ̄`, `σ̂`, or `Δ`); the
/// series runs over `distance_matrix / scale`. `series_total` is the
/// optimized series (`ψ_p^p`, `ν_p^p`, or `λ_p`) and `nu` its `p`-th root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentBoundReport {
    pub kind: BoundKind,
    pub p: f64,
    pub q: f64,
    pub sigma_bar: f64,
    pub scale: f64,
    pub t_len: usize,
    pub distance_matrix: Vec<f64>,
    /// Minimizing Hölder exponent per pair (normed-sum bound only).
    pub alpha_choice: Option<Vec<Option<f64>>>,
    /// Constant at order `pQ` (normed-sum bound only).
    pub k_pq: Option<f64>,
    pub dbar_form: Option<DbarForm>,
    pub profile: EntropyProfile,
    pub theta: f64,
    pub evaluation: SeriesEvaluation,
    pub series_total: f64,
    pub nu: f64,
}

pub(crate) struct SeriesOutcome {
    pub profile: EntropyProfile,
    pub optimum: ThetaOptimum,
}

/// Optimized series over `T` with distance `raw / scale`.
pub(crate) fn series_over(n: usize, raw: &[f64], scale: f64, q: f64) -> Result<SeriesOutcome> {
    let normalized: Vec<f64> = if scale > 0.0 {
        raw.iter().map(|d| d / scale).collect()
    } else {
        vec![0.0; raw.len()]
    };
    let space = IndexSpace::from_flat(n, normalized)?;
    let profile = EntropyProfile::for_space(&space)?.with_unit(space.radius());
    let optimum = optimize_theta(&profile, scale, q)?;
    Ok(SeriesOutcome { profile, optimum })
}
