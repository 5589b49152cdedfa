//! Finite measure spaces `(X, μ)`, finite semi-metric index sets `T`, and
//! fields `f(x, t)` sampled on their product.
//!
//! Index sets are always stored normalized: the center `t₀` minimizes the
//! maximal distance over the point set, every distance is divided by that
//! radius, and the original radius is kept so raw distances can be recovered.

use crate::error::{check_finite, Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Identifier of a point: a label, a scalar coordinate, or a coordinate vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointId {
    Scalar(f64),
    Coords(Vec<f64>),
    Label(String),
}

impl PointId {
    pub fn coords(&self) -> Option<Vec<f64>> {
        match self {
            PointId::Scalar(x) => Some(vec![*x]),
            PointId::Coords(c) => Some(c.clone()),
            PointId::Label(_) => None,
        }
    }
}

/// Discrete σ-finite measure space: points with strictly positive masses.
/// The total mass is finite but need not be 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureSpace {
    points: Vec<PointId>,
    weights: Vec<f64>,
    total_mass: f64,
}

impl MeasureSpace {
    pub fn new(points: Vec<PointId>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("measure space points"));
        }
        if weights.len() != points.len() {
            return Err(Error::LengthMismatch {
                what: "weights",
                got: weights.len(),
                expected: points.len(),
            });
        }
        if let Some(index) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidWeight {
                index,
                value: weights[index],
            });
        }
        let total_mass = crate::numeric::pairwise_sum(&weights);
        Ok(Self {
            points,
            weights,
            total_mass,
        })
    }

    /// `n` unlabeled points (indices) each carrying `mass`.
    pub fn uniform(n: usize, mass: f64) -> Result<Self> {
        let points = (0..n).map(|i| PointId::Scalar(i as f64)).collect();
        Self::new(points, vec![mass; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }
}

pub fn build_measure_space(points: Vec<PointId>, weights: Vec<f64>) -> Result<MeasureSpace> {
    MeasureSpace::new(points, weights)
}

/// Finite index set with a dense, normalized semi-distance matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexSpace {
    points: Vec<PointId>,
    #[serde(skip)]
    distance: Vec<f64>,
    n: usize,
    center: usize,
    radius: f64,
}

/// Absolute asymmetry tolerance for user-supplied matrices, relative to
/// `max(1, largest entry)`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

impl IndexSpace {
    /// `ρ(t, s) = ‖t − s‖₂^α`, then normalized by the exact 1-center radius.
    pub fn from_coords(coords: Vec<Vec<f64>>, alpha: f64) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("index space coordinates"));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain {
                name: "alpha",
                value: alpha,
                domain: "(0, 1]",
            });
        }
        let dim = coords[0].len();
        for (i, c) in coords.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::LengthMismatch {
                    what: "coordinate vector",
                    got: c.len(),
                    expected: dim,
                });
            }
            if let Some(j) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "coordinates",
                    index: i * dim + j,
                    value: c[j],
                });
            }
        }
        let n = coords.len();
        let mut distance = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let sq: f64 = coords[i]
                    .iter()
                    .zip(&coords[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let d = if alpha == 1.0 {
                    sq.sqrt()
                } else {
                    sq.powf(0.5 * alpha)
                };
                distance[i * n + j] = d;
                distance[j * n + i] = d;
            }
        }
        let points = coords.into_iter().map(PointId::Coords).collect();
        Ok(Self::normalize(points, distance, n))
    }

    /// Build from a symmetric, zero-diagonal, non-negative matrix.
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::Empty("distance matrix"));
        }
        let mut flat = Vec::with_capacity(n * n);
        for row in matrix {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    what: "distance matrix row",
                    got: row.len(),
                    expected: n,
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(n, flat)
    }

    /// Row-major `n × n` variant of [`IndexSpace::from_matrix`].
    pub fn from_flat(n: usize, mut flat: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("distance matrix"));
        }
        if flat.len() != n * n {
            return Err(Error::LengthMismatch {
                what: "distance matrix",
                got: flat.len(),
                expected: n * n,
            });
        }
        check_finite("distance matrix", &flat)?;
        let scale = flat.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = SYMMETRY_TOLERANCE * scale;
        for i in 0..n {
            for j in 0..n {
                let v = flat[i * n + j];
                if v < 0.0 {
                    return Err(Error::NotSemiDistance(format!(
                        "negative entry {v} at ({i}, {j})"
                    )));
                }
            }
            if flat[i * n + i] > tol {
                return Err(Error::NotSemiDistance(format!(
                    "nonzero diagonal {} at {i}",
                    flat[i * n + i]
                )));
            }
            flat[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let (a, b) = (flat[i * n + j], flat[j * n + i]);
                if (a - b).abs() > tol {
                    return Err(Error::NotSemiDistance(format!(
                        "asymmetric entries {a} and {b} at ({i}, {j})"
                    )));
                }
                let m = 0.5 * (a + b);
                flat[i * n + j] = m;
                flat[j * n + i] = m;
            }
        }
        let points = (0..n).map(|i| PointId::Scalar(i as f64)).collect();
        Ok(Self::normalize(points, flat, n))
    }

    fn normalize(points: Vec<PointId>, mut distance: Vec<f64>, n: usize) -> Self {
        let (center, radius) = one_center(&distance, n);
        // all points coincide: keep distances at 0 and store radius 1
        let radius = if radius > 0.0 { radius } else { 1.0 };
        if radius != 1.0 {
            for d in distance.iter_mut() {
                *d /= radius;
            }
        }
        Self {
            points,
            distance,
            n,
            center,
            radius,
        }
    }

    /// Normalize the already-normalized distances again (radius product kept).
    pub fn renormalized(&self) -> Self {
        let mut out = Self::normalize(self.points.clone(), self.distance.clone(), self.n);
        out.radius *= self.radius;
        out
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Radius of the raw distance before normalization.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Normalized distance.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distance[i * self.n + j]
    }

    pub fn raw_distance(&self, i: usize, j: usize) -> f64 {
        self.distance(i, j) * self.radius
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.distance[i * self.n..(i + 1) * self.n]
    }

    pub fn distances(&self) -> &[f64] {
        &self.distance
    }

    /// Smallest strictly positive normalized distance, if any.
    pub fn min_positive_distance(&self) -> Option<f64> {
        self.distance
            .iter()
            .copied()
            .filter(|d| *d > 0.0)
            .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))))
    }

    pub fn max_distance_from(&self, i: usize) -> f64 {
        self.row(i).iter().fold(0.0f64, |m, d| m.max(*d))
    }
}

/// Exact 1-center over the point set; ties go to the lowest index.
fn one_center(distance: &[f64], n: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for i in 0..n {
        let ecc = distance[i * n..(i + 1) * n]
            .iter()
            .fold(0.0f64, |m, d| m.max(*d));
        if ecc < best.1 {
            best = (i, ecc);
        }
    }
    best
}

pub fn build_index_space(coords: Vec<Vec<f64>>, metric_exponent: f64) -> Result<IndexSpace> {
    IndexSpace::from_coords(coords, metric_exponent)
}

pub fn build_index_space_from_matrix(matrix: &[Vec<f64>]) -> Result<IndexSpace> {
    IndexSpace::from_matrix(matrix)
}

/// One realization `f(x, t)`, stored row-major over `X × T`.
#[derive(Clone, Debug)]
pub struct Field {
    values: Vec<f64>,
    x_space: Arc<MeasureSpace>,
    t_space: Arc<IndexSpace>,
}

impl Field {
    pub fn new(values: Vec<f64>, x_space: Arc<MeasureSpace>, t_space: Arc<IndexSpace>) -> Result<Self> {
        let expected = x_space.len() * t_space.len();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                what: "field values",
                got: values.len(),
                expected,
            });
        }
        check_finite("field values", &values)?;
        Ok(Self {
            values,
            x_space,
            t_space,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], x_space: Arc<MeasureSpace>, t_space: Arc<IndexSpace>) -> Result<Self> {
        if rows.len() != x_space.len() {
            return Err(Error::LengthMismatch {
                what: "field rows",
                got: rows.len(),
                expected: x_space.len(),
            });
        }
        let mut values = Vec::with_capacity(x_space.len() * t_space.len());
        for r in rows {
            if r.len() != t_space.len() {
                return Err(Error::LengthMismatch {
                    what: "field row",
                    got: r.len(),
                    expected: t_space.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(values, x_space, t_space)
    }

    pub fn zeros(x_space: Arc<MeasureSpace>, t_space: Arc<IndexSpace>) -> Self {
        let n = x_space.len() * t_space.len();
        Self {
            values: vec![0.0; n],
            x_space,
            t_space,
        }
    }

    /// Skips the finiteness scan; callers guarantee finite values.
    pub(crate) fn from_parts_unchecked(values: Vec<f64>, x_space: Arc<MeasureSpace>, t_space: Arc<IndexSpace>) -> Self {
        debug_assert_eq!(values.len(), x_space.len() * t_space.len());
        Self {
            values,
            x_space,
            t_space,
        }
    }

    pub fn nx(&self) -> usize {
        self.x_space.len()
    }

    pub fn nt(&self) -> usize {
        self.t_space.len()
    }

    #[inline]
    pub fn get(&self, x: usize, t: usize) -> f64 {
        self.values[x * self.t_space.len() + t]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let nt = self.nt();
        &self.values[x * nt..(x + 1) * nt]
    }

    pub fn x_space(&self) -> &Arc<MeasureSpace> {
        &self.x_space
    }

    pub fn t_space(&self) -> &Arc<IndexSpace> {
        &self.t_space
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Field) -> Result<Self> {
        if self.values.len() != other.values.len() {
            return Err(Error::LengthMismatch {
                what: "field values",
                got: other.values.len(),
                expected: self.values.len(),
            });
        }
        Ok(Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }
}

/// `f(x, t) = g1(x) · g2(t)`.
pub fn tensor_field(g1: &[f64], g2: &[f64], x_space: Arc<MeasureSpace>, t_space: Arc<IndexSpace>) -> Result<Field> {
    if g1.len() != x_space.len() {
        return Err(Error::LengthMismatch {
            what: "g1",
            got: g1.len(),
            expected: x_space.len(),
        });
    }
    if g2.len() != t_space.len() {
        return Err(Error::LengthMismatch {
            what: "g2",
            got: g2.len(),
            expected: t_space.len(),
        });
    }
    let values = g1.iter().flat_map(|a| g2.iter().map(move |b| a * b)).collect();
    Field::new(values, x_space, t_space)
}

/// JSON descriptor `{"points": [...], "weights": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpaceDescriptor {
    pub points: Vec<PointId>,
    pub weights: Vec<f64>,
}

impl MeasureSpaceDescriptor {
    pub fn build(&self) -> Result<MeasureSpace> {
        MeasureSpace::new(self.points.clone(), self.weights.clone())
    }
}

/// JSON descriptor `{"coords": [[...]], "alpha": a}` or `{"matrix": [[...]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IndexSpaceDescriptor {
    Coords { coords: Vec<Vec<f64>>, alpha: f64 },
    Matrix { matrix: Vec<Vec<f64>> },
}

impl IndexSpaceDescriptor {
    pub fn build(&self) -> Result<IndexSpace> {
        match self {
            IndexSpaceDescriptor::Coords { coords, alpha } => IndexSpace::from_coords(coords.clone(), *alpha),
            IndexSpaceDescriptor::Matrix { matrix } => IndexSpace::from_matrix(matrix),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> Vec<Vec<f64>> {
        points.iter().map(|p| vec![*p]).collect()
    }

    #[test]
    fn measure_space_examples() {
        let one = MeasureSpace::new(vec![PointId::Label("x1".into())], vec![1.0]).unwrap();
        assert_eq!(one.total_mass(), 1.0);
        let three = MeasureSpace::uniform(3, 1.0).unwrap();
        assert_eq!(three.len(), 3);
        let mixed = MeasureSpace::new(
            vec![PointId::Scalar(0.0), PointId::Scalar(1.0), PointId::Scalar(2.0)],
            vec![0.5, 0.5, 2.0],
        )
        .unwrap();
        assert_eq!(mixed.total_mass(), 3.0);
        let bad = MeasureSpace::new(vec![PointId::Scalar(0.0)], vec![-1.0]);
        assert_eq!(bad, Err(Error::InvalidWeight { index: 0, value: -1.0 }));
    }

    #[test]
    fn measure_space_rejects_empty_and_nan() {
        assert!(matches!(MeasureSpace::new(vec![], vec![]), Err(Error::Empty(_))));
        let err = MeasureSpace::new(vec![PointId::Scalar(0.0), PointId::Scalar(1.0)], vec![1.0, f64::NAN]);
        assert!(matches!(err, Err(Error::InvalidWeight { index: 1, .. })));
        let err = MeasureSpace::new(vec![PointId::Scalar(0.0)], vec![0.0]);
        assert!(matches!(err, Err(Error::InvalidWeight { index: 0, .. })));
    }

    #[test]
    fn singleton_index_space() {
        let s = IndexSpace::from_coords(vec![vec![0.3, 0.1]], 1.0).unwrap();
        assert_eq!(s.radius(), 1.0);
        assert_eq!(s.distance(0, 0), 0.0);
        assert_eq!(s.center(), 0);
    }

    #[test]
    fn two_points_on_the_line() {
        let s = IndexSpace::from_coords(line(&[0.0, 1.0]), 1.0).unwrap();
        assert_eq!(s.radius(), 1.0);
        assert_eq!(s.center(), 0);
        assert_eq!(s.distances(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn five_points_center_is_midpoint() {
        let pts = [0.0, 0.25, 0.5, 0.75, 1.0];
        let s = IndexSpace::from_coords(line(&pts), 1.0).unwrap();
        assert_eq!(s.center(), 2);
        assert_eq!(s.radius(), 0.5);
        for i in 0..5 {
            for j in 0..5 {
                let want = (pts[i] - pts[j]).abs() / 0.5;
                assert!((s.distance(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn alpha_out_of_range() {
        assert!(IndexSpace::from_coords(line(&[0.0, 1.0]), 0.0).is_err());
        assert!(IndexSpace::from_coords(line(&[0.0, 1.0]), 1.5).is_err());
    }

    #[test]
    fn duplicate_points_are_allowed() {
        let s = IndexSpace::from_coords(line(&[0.0, 0.0, 1.0]), 1.0).unwrap();
        assert_eq!(s.distance(0, 1), 0.0);
        assert_eq!(s.min_positive_distance(), Some(1.0));
    }

    #[test]
    fn matrix_examples() {
        let s = IndexSpace::from_matrix(&[vec![0.0]]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.radius(), 1.0);

        let s = IndexSpace::from_matrix(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(s.radius(), 2.0);
        assert_eq!(s.distances(), &[0.0, 1.0, 1.0, 0.0]);

        let err = IndexSpace::from_matrix(&[vec![0.0, -0.1], vec![-0.1, 0.0]]);
        assert!(matches!(err, Err(Error::NotSemiDistance(_))));
        let err = IndexSpace::from_matrix(&[vec![0.0, 1.0], vec![1.1, 0.0]]);
        assert!(matches!(err, Err(Error::NotSemiDistance(_))));
        let err = IndexSpace::from_matrix(&[vec![0.5, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(err, Err(Error::NotSemiDistance(_))));
    }

    #[test]
    fn tensor_field_examples() {
        let x = Arc::new(MeasureSpace::uniform(2, 1.0).unwrap());
        let t1 = Arc::new(IndexSpace::from_coords(vec![vec![0.0]], 1.0).unwrap());
        let f = tensor_field(&[1.0, 2.0], &[3.0], x.clone(), t1).unwrap();
        assert_eq!(f.values(), &[3.0, 6.0]);
        let t2 = Arc::new(IndexSpace::from_coords(line(&[0.0, 1.0]), 1.0).unwrap());
        let f = tensor_field(&[0.0, 0.0], &[5.0, -2.0], x.clone(), t2.clone()).unwrap();
        assert!(f.values().iter().all(|v| *v == 0.0));
        let f = tensor_field(&[1.0, 1.0], &[1.0, 1.0], x.clone(), t2.clone()).unwrap();
        assert_eq!(f.values(), &[1.0; 4]);
        assert!(tensor_field(&[1.0], &[1.0, 1.0], x, t2).is_err());
    }

    #[test]
    fn descriptors_parse() {
        let x: MeasureSpaceDescriptor =
            serde_json::from_str(r#"{"points": ["a", 1.5, [0.0, 1.0]], "weights": [1, 2, 3]}"#).unwrap();
        assert_eq!(x.build().unwrap().total_mass(), 6.0);
        let t: IndexSpaceDescriptor = serde_json::from_str(r#"{"coords": [[0.0], [1.0]], "alpha": 0.5}"#).unwrap();
        assert_eq!(t.build().unwrap().len(), 2);
        let t: IndexSpaceDescriptor = serde_json::from_str(r#"{"matrix": [[0, 3], [3, 0]]}"#).unwrap();
        assert_eq!(t.build().unwrap().radius(), 3.0);
    }
}
