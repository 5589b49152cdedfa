//! Covering and packing numbers of finite semi-metric spaces, entropy
//! profiles for series evaluation, and entropy-dimension fits.
//!
//! Balls are closed (`d <= ε`) and centered at points of `T`. Radii are in
//! the normalized units of [`IndexSpace`] unless a profile carries an explicit
//! distance unit (see [`EntropyProfile::with_unit`]).

use crate::error::{Error, Result};
use crate::measure_grid::IndexSpace;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

/// Default size limit for [`covering_number_exact`].
pub const EXACT_CAP: usize = 24;

/// Profiles tabulate every distinct distance while the number of distances
/// times `|T|²` stays below this work limit.
pub const STEP_PROFILE_WORK: usize = 1 << 28;

/// Ratio of the geometric grid used when a step profile would be too large.
pub const GEOMETRIC_RATIO: f64 = 0.95;

struct Balls {
    words: usize,
    bits: Vec<u64>,
    // first and one-past-last nonzero word of each row
    span: Vec<(u32, u32)>,
}

impl Balls {
    fn new(space: &IndexSpace, eps: f64) -> Self {
        let n = space.len();
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        let mut span = Vec::with_capacity(n);
        for i in 0..n {
            let row = space.row(i);
            let out = &mut bits[i * words..(i + 1) * words];
            for (w, chunk) in row.chunks(64).enumerate() {
                let mut word = 0u64;
                for (b, d) in chunk.iter().enumerate() {
                    word |= u64::from(*d <= eps) << b;
                }
                out[w] = word;
            }
            let lo = out.iter().position(|w| *w != 0).unwrap_or(0);
            let hi = out.iter().rposition(|w| *w != 0).map_or(lo, |h| h + 1);
            span.push((lo as u32, hi as u32));
        }
        Self { words, bits, span }
    }

    fn gain(&self, i: usize, uncovered: &[u64]) -> u32 {
        let (lo, hi) = (self.span[i].0 as usize, self.span[i].1 as usize);
        let row = &self.bits[i * self.words..(i + 1) * self.words];
        row[lo..hi]
            .iter()
            .zip(&uncovered[lo..hi])
            .map(|(x, y)| (x & y).count_ones())
            .sum()
    }
}

fn full_set(n: usize) -> Vec<u64> {
    let mut set = vec![u64::MAX; n.div_ceil(64)];
    if n % 64 != 0 {
        *set.last_mut().unwrap() = (1u64 << (n % 64)) - 1;
    }
    set
}

/// Greedy set cover by closed ε-balls; returns the chosen centers in order.
/// Each step takes the ball covering most uncovered points, ties to the
/// lowest index.
pub fn greedy_cover(space: &IndexSpace, eps: f64) -> Vec<usize> {
    let n = space.len();
    if eps >= 1.0 {
        return vec![space.center()];
    }
    let balls = Balls::new(space, eps);
    let mut uncovered = full_set(n);
    let mut left = n as u32;
    // lazy evaluation: stored gains only ever overestimate
    let mut heap: BinaryHeap<(u32, Reverse<usize>)> =
        (0..n).map(|i| (balls.gain(i, &uncovered), Reverse(i))).collect();
    let mut centers = Vec::new();
    while left > 0 {
        let (stored, Reverse(i)) = heap.pop().expect("uncovered points remain");
        let gain = balls.gain(i, &uncovered);
        if gain < stored {
            heap.push((gain, Reverse(i)));
            continue;
        }
        let (lo, hi) = (balls.span[i].0 as usize, balls.span[i].1 as usize);
        let row = &balls.bits[i * balls.words..(i + 1) * balls.words];
        for (u, b) in uncovered[lo..hi].iter_mut().zip(&row[lo..hi]) {
            *u &= !b;
        }
        left -= gain;
        centers.push(i);
    }
    centers
}

/// Greedy covers with at most this many balls are refined by k-center search.
pub const REFINE_LIMIT: usize = 64;

const REFINE_ROUNDS: usize = 30;
const REFINE_PATIENCE: usize = 3;
const REFINE_CANDIDATES: usize = 64;

/// Try to cover `T` with `k` closed ε-balls: farthest-first seeding from the
/// center of `T`, then alternate nearest-center assignment and re-centering
/// each cluster at the best of its members nearest the old center. Returns
/// centers only when they cover.
pub fn k_center_cover(space: &IndexSpace, k: usize, eps: f64) -> Option<Vec<usize>> {
    let n = space.len();
    if k == 0 || k > n {
        return None;
    }
    let mut centers = vec![space.center()];
    let mut near: Vec<f64> = space.row(space.center()).to_vec();
    while centers.len() < k {
        // farthest point, lowest index on ties
        let mut far = 0;
        for j in 1..n {
            if near[j] > near[far] {
                far = j;
            }
        }
        centers.push(far);
        for (m, d) in near.iter_mut().zip(space.row(far)) {
            *m = m.min(*d);
        }
    }
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut candidates: Vec<(f64, usize)> = Vec::new();
    let mut record = f64::INFINITY;
    let mut stale = 0;
    for _ in 0..REFINE_ROUNDS {
        for c in clusters.iter_mut() {
            c.clear();
        }
        for j in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, c) in centers.iter().enumerate() {
                let d = space.distance(*c, j);
                if d < best_d {
                    best = i;
                    best_d = d;
                }
            }
            clusters[best].push(j);
        }
        let mut next = Vec::with_capacity(k);
        let mut worst = 0.0f64;
        for (i, members) in clusters.iter().enumerate() {
            if members.is_empty() {
                next.push(centers[i]);
                continue;
            }
            // candidate centers: the members nearest the current center
            let here = space.row(centers[i]);
            candidates.clear();
            candidates.extend(members.iter().map(|m| (here[*m], *m)));
            if candidates.len() > REFINE_CANDIDATES {
                candidates.select_nth_unstable_by(REFINE_CANDIDATES, |a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
                candidates.truncate(REFINE_CANDIDATES);
            }
            candidates.sort_by_key(|c| c.1);
            let mut best = (centers[i], f64::INFINITY);
            for &(_, a) in &candidates {
                let row = space.row(a);
                let ecc = members.iter().fold(0.0f64, |m, b| m.max(row[*b]));
                if ecc < best.1 {
                    best = (a, ecc);
                }
            }
            next.push(best.0);
            worst = worst.max(best.1);
        }
        if worst <= eps {
            return Some(next);
        }
        if worst < record {
            record = worst;
            stale = 0;
        } else {
            stale += 1;
        }
        if next == centers || stale >= REFINE_PATIENCE {
            return None;
        }
        centers = next;
    }
    None
}

/// Best cover found at radius `eps`: the greedy cover, shrunk one ball at a
/// time by [`k_center_cover`] while that succeeds (only when the greedy cover
/// has at most [`REFINE_LIMIT`] balls).
pub fn upper_cover(space: &IndexSpace, eps: f64) -> Vec<usize> {
    let mut best = greedy_cover(space, eps);
    if best.len() <= REFINE_LIMIT {
        while best.len() > 1 {
            match k_center_cover(space, best.len() - 1, eps) {
                Some(c) => best = c,
                None => break,
            }
        }
    }
    best
}

/// Radii at which covers are tabulated, decreasing, all in `(0, 1)`:
/// every distinct distance when there are few enough of them (see
/// [`STEP_PROFILE_WORK`]), otherwise a geometric grid down to the smallest
/// positive distance.
pub fn cover_thresholds(space: &IndexSpace) -> Vec<f64> {
    thresholds(space).0
}

/// Thresholds plus whether they are every distinct distance.
fn thresholds(space: &IndexSpace) -> (Vec<f64>, bool) {
    let mut distinct: Vec<f64> = space
        .distances()
        .iter()
        .copied()
        .filter(|d| *d > 0.0 && *d < 1.0)
        .collect();
    distinct.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    distinct.dedup();
    let n = space.len();
    if distinct.len().saturating_mul(n * n) <= STEP_PROFILE_WORK {
        (distinct, true)
    } else {
        let floor = space.min_positive_distance().unwrap_or(1.0);
        (geometric_grid(GEOMETRIC_RATIO, floor).split_off(1), false)
    }
}

/// Upper bound on `N(T, ρ, ε)`: the smallest cover from [`upper_cover`]
/// found at any tabulated radius not above `ε` (including 0). A cover at a
/// smaller radius is also a cover at `ε`; taking the minimum keeps the
/// bound monotone in `ε`, which a single greedy count is not.
pub fn covering_number_upper(space: &IndexSpace, eps: f64) -> usize {
    if eps >= 1.0 {
        return 1;
    }
    let mut radii: Vec<f64> = cover_thresholds(space).into_iter().filter(|d| *d <= eps).collect();
    radii.push(0.0);
    radii
        .par_iter()
        .map(|r| upper_cover(space, *r).len())
        .min()
        .expect("radius 0 is always present")
}

/// Minimal number of closed ε-balls, by branch and bound; limited to
/// `|T| <= cap` (and never more than 64 points).
pub fn covering_number_exact(space: &IndexSpace, eps: f64, cap: usize) -> Result<usize> {
    let n = space.len();
    if n > cap.min(64) {
        return Err(Error::ExactCapExceeded {
            size: n,
            cap: cap.min(64),
        });
    }
    if eps >= 1.0 {
        return Ok(1);
    }
    let masks: Vec<u64> = (0..n)
        .map(|i| {
            space
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, d)| **d <= eps)
                .fold(0u64, |m, (j, _)| m | (1 << j))
        })
        .collect();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = greedy_cover(space, eps).len();
    branch(&masks, all, 0, &mut best);
    Ok(best)
}

fn branch(masks: &[u64], uncovered: u64, depth: usize, best: &mut usize) {
    if uncovered == 0 {
        *best = (*best).min(depth);
        return;
    }
    let largest = masks.iter().map(|m| (m & uncovered).count_ones()).max().unwrap_or(0) as usize;
    let need = (uncovered.count_ones() as usize).div_ceil(largest.max(1));
    if depth + need >= *best {
        return;
    }
    // the lowest uncovered point must lie in one of the chosen balls
    let u = uncovered.trailing_zeros() as usize;
    let mut options: Vec<(u32, usize)> = (0..masks.len())
        .filter(|c| masks[*c] >> u & 1 == 1)
        .map(|c| ((masks[c] & uncovered).count_ones(), c))
        .collect();
    options.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, c) in options {
        branch(masks, uncovered & !masks[c], depth + 1, best);
    }
}

/// Size of a greedy maximal `2ε`-separated subset (scanned in index order).
/// Points more than `2ε` apart cannot share a closed ε-ball when the
/// triangle inequality holds, so this is a lower bound on `N(T, ρ, ε)` for
/// metric inputs.
pub fn packing_number_lower(space: &IndexSpace, eps: f64) -> usize {
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..space.len() {
        let row = space.row(i);
        if chosen.iter().all(|j| row[*j] > 2.0 * eps) {
            chosen.push(i);
        }
    }
    chosen.len()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSource {
    Computed,
    /// `N(ε) = scale · ε^{-kappa}` for `ε < 1`, with `scale = K^Q`.
    Analytic { scale: f64, kappa: f64 },
}

/// Covering and packing bounds over a decreasing grid of radii in `(0, 1]`.
/// Packing bounds are made monotone by a running maximum from the coarse end
/// of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub eps_grid: Vec<f64>,
    pub cover_upper: Vec<f64>,
    pub pack_lower: Vec<f64>,
    pub source: ProfileSource,
    /// Number of points in the underlying space, if finite.
    pub cardinality: Option<usize>,
    /// Smallest positive normalized distance; below it the cover is `saturation`.
    pub floor: Option<f64>,
    /// Cover valid at every radius (points at distance zero grouped); absent
    /// for analytic profiles.
    pub saturation: Option<f64>,
    /// Queries at radius `r` read the profile at `r / unit`.
    pub unit: f64,
}

fn check_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() {
        return Err(Error::Empty("epsilon grid"));
    }
    for (i, e) in eps_grid.iter().enumerate() {
        if !(*e > 0.0 && *e <= 1.0) {
            return Err(Error::Domain {
                name: "epsilon",
                value: *e,
                domain: "(0, 1]",
            });
        }
        if i > 0 && *e >= eps_grid[i - 1] {
            return Err(Error::Domain {
                name: "epsilon",
                value: *e,
                domain: "strictly decreasing grid",
            });
        }
    }
    Ok(())
}

/// Covering and packing bounds on `eps_grid`. Cover entries are the
/// smallest cover found at any grid radius not above the entry's radius;
/// for spaces with tabulated distinct distances this equals
/// [`covering_number_upper`].
pub fn entropy_profile(space: &IndexSpace, eps_grid: &[f64]) -> Result<EntropyProfile> {
    check_grid(eps_grid)?;
    // covers at every grid radius (and every distinct distance when those
    // are tabulated exactly), then a running minimum from the fine end
    let (thresholds, exact) = thresholds(space);
    let mut radii: Vec<f64> = eps_grid
        .iter()
        .copied()
        .filter(|e| *e < 1.0)
        .chain(std::iter::once(0.0))
        .collect();
    if exact {
        radii.extend(thresholds);
    }
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    radii.dedup();
    let mut hull: Vec<f64> = radii
        .par_iter()
        .map(|r| upper_cover(space, *r).len() as f64)
        .collect();
    for i in 1..hull.len() {
        hull[i] = hull[i].min(hull[i - 1]);
    }
    let saturation = hull[0];
    let cover: Vec<f64> = eps_grid
        .iter()
        .map(|e| {
            if *e >= 1.0 {
                1.0
            } else {
                hull[radii.partition_point(|r| r <= e) - 1]
            }
        })
        .collect();
    let mut pack: Vec<f64> = eps_grid
        .par_iter()
        .map(|e| packing_number_lower(space, *e) as f64)
        .collect();
    for i in 1..pack.len() {
        pack[i] = pack[i].max(pack[i - 1]);
    }
    Ok(EntropyProfile {
        eps_grid: eps_grid.to_vec(),
        cover_upper: cover,
        pack_lower: pack,
        source: ProfileSource::Computed,
        cardinality: Some(space.len()),
        floor: space.min_positive_distance(),
        saturation: Some(saturation),
        unit: 1.0,
    })
}

/// `ratio^k` for `k = 0, 1, ...` while it stays at or above `floor`, then one
/// more point below it.
pub fn geometric_grid(ratio: f64, floor: f64) -> Vec<f64> {
    let mut grid = vec![1.0];
    let mut e = 1.0;
    while e >= floor && grid.len() < 100_000 {
        e *= ratio;
        grid.push(e);
    }
    grid
}

impl EntropyProfile {
    /// Profile on `{1} ∪ cover_thresholds(space)`, so that lookups reproduce
    /// [`covering_number_upper`] exactly.
    pub fn for_space(space: &IndexSpace) -> Result<Self> {
        let mut grid = vec![1.0];
        grid.extend(cover_thresholds(space));
        entropy_profile(space, &grid)
    }

    /// Power-law profile `N(ε) = scale · ε^{-kappa}` tabulated on `eps_grid`.
    pub fn analytic(scale: f64, kappa: f64, eps_grid: &[f64]) -> Result<Self> {
        check_grid(eps_grid)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain {
                name: "scale",
                value: scale,
                domain: "(0, inf)",
            });
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Domain {
                name: "kappa",
                value: kappa,
                domain: "[0, inf)",
            });
        }
        let cover = eps_grid
            .iter()
            .map(|e| if *e >= 1.0 { 1.0 } else { scale * e.powf(-kappa) })
            .collect();
        Ok(Self {
            eps_grid: eps_grid.to_vec(),
            cover_upper: cover,
            pack_lower: vec![1.0; eps_grid.len()],
            source: ProfileSource::Analytic { scale, kappa },
            cardinality: None,
            floor: None,
            saturation: None,
            unit: 1.0,
        })
    }

    /// Same profile for queries measured in a distance whose normalization
    /// radius is `unit`.
    pub fn with_unit(mut self, unit: f64) -> Self {
        self.unit = unit;
        self
    }

    /// Conservative `N(eps)`: 1 for `eps >= unit`, the power law for analytic
    /// profiles, otherwise the entry at the largest grid radius not above the
    /// query, or the saturation value below the grid.
    pub fn covering_at(&self, eps: f64) -> f64 {
        let e = eps / self.unit;
        if e >= 1.0 {
            return 1.0;
        }
        if let ProfileSource::Analytic { scale, kappa } = self.source {
            return scale * e.powf(-kappa);
        }
        let saturation = self.saturation.unwrap_or(f64::INFINITY);
        if self.floor.is_none_or(|f| e < f) {
            // below every positive distance each ball only holds its own class
            return saturation;
        }
        // grid is decreasing: first index with grid value <= e
        let idx = self.eps_grid.partition_point(|g| *g > e);
        match self.cover_upper.get(idx) {
            Some(v) => *v,
            None => saturation,
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.source, ProfileSource::Analytic { .. })
    }
}

/// Least-squares fit of `log N = log K̂ + κ̂ log(1/ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    /// Slope, clamped at 0.
    pub kappa: f64,
    /// `exp(intercept)`, an estimate of `K^Q`.
    pub scale: f64,
    pub residual: f64,
    pub points: usize,
}

/// Which profile entries take part in a dimension fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitWindow {
    /// Entries with fewer balls are dominated by boundary effects.
    pub min_cover: f64,
    /// Entries above `max_fraction · |T|` are dominated by the discretization.
    pub max_fraction: f64,
}

impl FitWindow {
    pub const ALL: FitWindow = FitWindow {
        min_cover: 0.0,
        max_fraction: f64::INFINITY,
    };

    /// Window for dense grids: at least 4 balls, at most `|T|/32`.
    pub const GRID: FitWindow = FitWindow {
        min_cover: 4.0,
        max_fraction: 1.0 / 32.0,
    };
}

/// Fit over all entries with `ε < 1`.
pub fn entropy_dimension_fit(profile: &EntropyProfile) -> Result<DimensionFit> {
    entropy_dimension_fit_window(profile, FitWindow::ALL)
}

pub fn entropy_dimension_fit_window(profile: &EntropyProfile, window: FitWindow) -> Result<DimensionFit> {
    let limit = profile
        .cardinality
        .map_or(f64::INFINITY, |n| window.max_fraction * n as f64);
    let pts: Vec<(f64, f64)> = profile
        .eps_grid
        .iter()
        .zip(&profile.cover_upper)
        .filter(|(e, n)| **e < 1.0 && **n >= window.min_cover && **n <= limit)
        .map(|(e, n)| (-(e.ln()), n.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints {
            usable: pts.len(),
            needed: 3,
        });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let kappa = slope.max(0.0);
    let intercept = my - kappa * mx;
    let residual = pts.iter().map(|p| (p.1 - intercept - kappa * p.0).powi(2)).sum();
    Ok(DimensionFit {
        kappa,
        scale: intercept.exp(),
        residual,
        points: pts.len(),
    })
}
