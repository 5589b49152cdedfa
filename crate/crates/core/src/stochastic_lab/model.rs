//! Random field models on `X × T`: linear images `scale · L v` of i.i.d.
//! innovations with separable covariance `K_X ⊗ K_T`, optionally modulated
//! by a scalar or sequenced into dependent paths.

use crate::entropy_bounds::{
    BetaSequence, MomentOracle, RosenthalParams, ScaleLaw, SumConstant, UniformSumMoments,
};
use crate::error::{Error, Result};
use crate::measure_grid::{IndexSpace, MeasureSpace};
use crate::numeric::{gaussian_power_increment_moment, normal_abs_moment, shifted_normal_abs_moment};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

/// Law of the field sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// Centered Gaussian, independent copies.
    Gaussian,
    /// Innovations uniform on `(−√3, √3)`, independent copies.
    SymmetrizedUniform,
    /// Gaussian divided by `sqrt(W/dof)`, `W ~ χ²(dof)` shared over the field.
    HeavyTailT { dof: f64 },
    /// `ξ_k = g_k · G_k` with `g_k = low + (high − low) Φ(z_{k−1,0})` read off
    /// the previous innovation: a stationary martingale-difference sequence.
    MartingaleDifference { low: f64, high: f64 },
    /// `ξ_k = signal · η_k + sqrt(1 − signal²) · G_k` with `η_k = ±1` a
    /// stationary Markov chain with `Corr(η_0, η_n) = a^n`; superstrong mixing
    /// with `β(n) = |a|^n`.
    MixingaleAr { a: f64, signal: f64 },
}

/// Covariance kernel on one axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    /// All entries 1: the field does not vary along the axis.
    Constant,
    /// Identity: independent coordinates.
    Independent,
    /// `exp(−d / length)`.
    Exponential { length: f64 },
    /// `exp(−d² / (2 length²))`.
    SquaredExponential { length: f64 },
    /// Explicit covariance matrix.
    Matrix { matrix: Vec<Vec<f64>> },
    /// Zero covariance: the field vanishes.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    #[serde(default = "one")]
    pub scale: f64,
    pub x_kernel: Kernel,
    pub t_kernel: Kernel,
}

fn one() -> f64 {
    1.0
}

/// PSD tolerance relative to the largest eigenvalue.
const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug)]
pub struct RandomFieldModel {
    spec: ModelSpec,
    x_space: Arc<MeasureSpace>,
    t_space: Arc<IndexSpace>,
    kx: Vec<f64>,
    kt: Vec<f64>,
    lx: Vec<f64>,
    lt: Vec<f64>,
    uniform: OnceLock<UniformSumMoments>,
}

impl Clone for RandomFieldModel {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            x_space: self.x_space.clone(),
            t_space: self.t_space.clone(),
            kx: self.kx.clone(),
            kt: self.kt.clone(),
            lx: self.lx.clone(),
            lt: self.lt.clone(),
            uniform: OnceLock::new(),
        }
    }
}

fn kernel_matrix(kernel: &Kernel, n: usize, dist: &dyn Fn(usize, usize) -> Option<f64>, axis: &str) -> Result<Vec<f64>> {
    let mut k = vec![0.0; n * n];
    let need = |i: usize, j: usize| {
        dist(i, j).ok_or_else(|| Error::InvalidModel(format!("{axis} kernel needs coordinates")))
    };
    let check_length = |length: f64| {
        if length > 0.0 && length.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("{axis} kernel length must be positive, got {length}")))
        }
    };
    match kernel {
        Kernel::Constant => k.fill(1.0),
        Kernel::Zero => {}
        Kernel::Independent => {
            for i in 0..n {
                k[i * n + i] = 1.0;
            }
        }
        Kernel::Exponential { length } => {
            check_length(*length)?;
            for i in 0..n {
                for j in 0..n {
                    k[i * n + j] = (-need(i, j)? / length).exp();
                }
            }
        }
        Kernel::SquaredExponential { length } => {
            check_length(*length)?;
            for i in 0..n {
                for j in 0..n {
                    let d = need(i, j)?;
                    k[i * n + j] = (-0.5 * (d / length).powi(2)).exp();
                }
            }
        }
        Kernel::Matrix { matrix } => {
            if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidModel(format!("{axis} covariance matrix must be {n} x {n}")));
            }
            for i in 0..n {
                for j in 0..n {
                    let (a, b) = (matrix[i][j], matrix[j][i]);
                    if !a.is_finite() || (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                        return Err(Error::InvalidModel(format!("{axis} covariance matrix is not symmetric")));
                    }
                    k[i * n + j] = 0.5 * (a + b);
                }
            }
        }
    }
    Ok(k)
}

/// Symmetric square root of a PSD matrix (row-major); rejects matrices
/// with eigenvalues below `-PSD_TOLERANCE · max(1, λ_max)`.
fn psd_sqrt(k: &[f64], n: usize, axis: &str) -> Result<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, k);
    let eig = SymmetricEigen::new(m);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    if min < -PSD_TOLERANCE * max.max(1.0) {
        return Err(Error::InvalidModel(format!(
            "{axis} covariance is not positive semidefinite (eigenvalue {min})"
        )));
    }
    let sqrt = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let l = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt) * eig.eigenvectors.transpose();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = l[(i, j)];
        }
    }
    Ok(out)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

impl RandomFieldModel {
    pub fn new(spec: ModelSpec, x_space: Arc<MeasureSpace>, t_space: Arc<IndexSpace>) -> Result<Self> {
        if !(spec.scale >= 0.0 && spec.scale.is_finite()) {
            return Err(Error::InvalidModel(format!("scale must be finite and non-negative, got {}", spec.scale)));
        }
        match spec.kind {
            ModelKind::HeavyTailT { dof } if !(dof > 0.0 && dof.is_finite()) => {
                return Err(Error::InvalidModel(format!("degrees of freedom must be positive, got {dof}")));
            }
            ModelKind::MartingaleDifference { low, high } if !(low > 0.0 && high >= low && high.is_finite()) => {
                return Err(Error::InvalidModel(format!("need 0 < low <= high, got {low}, {high}")));
            }
            ModelKind::MixingaleAr { a, signal } if !(a.abs() < 1.0 && (0.0..=1.0).contains(&signal)) => {
                return Err(Error::InvalidModel(format!(
                    "need |a| < 1 and signal in [0, 1], got a = {a}, signal = {signal}"
                )));
            }
            _ => {}
        }
        let nx = x_space.len();
        let nt = t_space.len();
        let xc: Vec<Option<Vec<f64>>> = x_space.points().iter().map(|p| p.coords()).collect();
        let x_dist = |i: usize, j: usize| match (&xc[i], &xc[j]) {
            (Some(a), Some(b)) if a.len() == b.len() => Some(euclid(a, b)),
            _ => None,
        };
        let t_dist = |i: usize, j: usize| Some(t_space.raw_distance(i, j));
        let kx = kernel_matrix(&spec.x_kernel, nx, &x_dist, "X")?;
        let kt = kernel_matrix(&spec.t_kernel, nt, &t_dist, "T")?;
        let lx = psd_sqrt(&kx, nx, "X")?;
        let lt = psd_sqrt(&kt, nt, "T")?;
        Ok(Self {
            spec,
            x_space,
            t_space,
            kx,
            kt,
            lx,
            lt,
            uniform: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> &ModelKind {
        &self.spec.kind
    }

    pub fn nx(&self) -> usize {
        self.x_space.len()
    }

    pub fn nt(&self) -> usize {
        self.t_space.len()
    }

    pub fn x_space(&self) -> &Arc<MeasureSpace> {
        &self.x_space
    }

    pub fn t_space(&self) -> &Arc<IndexSpace> {
        &self.t_space
    }

    /// The same model with every field multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.scale *= c;
        Self::new(spec, self.x_space.clone(), self.t_space.clone())
    }

    pub(crate) fn lx(&self) -> &[f64] {
        &self.lx
    }

    pub(crate) fn lt(&self) -> &[f64] {
        &self.lt
    }

    /// Covariance of the unmodulated linear part `scale · L v` between
    /// `(x, t)` and `(y, s)`.
    pub fn base_covariance(&self, x: usize, t: usize, y: usize, s: usize) -> f64 {
        let (nx, nt) = (self.nx(), self.nt());
        self.spec.scale.powi(2) * self.kx[x * nx + y] * self.kt[t * nt + s]
    }

    /// `Var ξ(x, t)`.
    pub fn variance(&self, x: usize, t: usize) -> f64 {
        let base = self.base_covariance(x, t, x, t);
        match self.spec.kind {
            ModelKind::Gaussian | ModelKind::SymmetrizedUniform => base,
            ModelKind::HeavyTailT { dof } => {
                if dof > 2.0 {
                    base * dof / (dof - 2.0)
                } else {
                    f64::INFINITY
                }
            }
            ModelKind::MartingaleDifference { low, high } => {
                base * ScaleLaw::Uniform { low, high }.moment(2.0).unwrap_or(f64::INFINITY)
            }
            ModelKind::MixingaleAr { signal, .. } => {
                self.spec.scale.powi(2) * signal * signal + (1.0 - signal * signal) * base
            }
        }
    }

    /// Whether successive copies are independent.
    pub fn is_independent(&self) -> bool {
        matches!(
            self.spec.kind,
            ModelKind::Gaussian | ModelKind::SymmetrizedUniform | ModelKind::HeavyTailT { .. }
        )
    }

    /// Superstrong mixing coefficients of the sequence, when it has them in
    /// closed form.
    pub fn beta_sequence(&self) -> Option<BetaSequence> {
        match self.spec.kind {
            ModelKind::MixingaleAr { a, .. } => Some(BetaSequence::Geometric { b: 1.0, r: a.abs() }),
            _ if self.is_independent() => Some(BetaSequence::Table { values: vec![0.0] }),
            _ => None,
        }
    }

    /// Constant for the normed-sum bound: the Rosenthal bound for
    /// independent and martingale-difference sequences (the latter only up
    /// to an unknown absolute factor), the mixingale coefficient otherwise.
    pub fn sum_constant(&self, params: RosenthalParams, k_max: usize) -> SumConstant {
        match self.spec.kind {
            ModelKind::MixingaleAr { a, .. } => SumConstant::Mixingale {
                beta: BetaSequence::Geometric { b: 1.0, r: a.abs() },
                k_max,
            },
            _ => SumConstant::Rosenthal { params },
        }
    }

    fn uniform_oracle(&self) -> &UniformSumMoments {
        self.uniform.get_or_init(|| {
            let (nx, nt) = (self.nx(), self.nt());
            let width = nx * nt;
            let mut c = vec![0.0; width * width];
            for x in 0..nx {
                for t in 0..nt {
                    let row = &mut c[(x * nt + t) * width..(x * nt + t + 1) * width];
                    for i in 0..nx {
                        let a = self.spec.scale * self.lx[x * nx + i];
                        if a == 0.0 {
                            continue;
                        }
                        for j in 0..nt {
                            row[i * nt + j] = a * self.lt[t * nt + j];
                        }
                    }
                }
            }
            UniformSumMoments::new(nx, nt, width, c).expect("coefficients have the model's shape")
        })
    }

    fn law(&self) -> ScaleLaw {
        match self.spec.kind {
            ModelKind::HeavyTailT { dof } => ScaleLaw::StudentT { dof },
            ModelKind::MartingaleDifference { low, high } => ScaleLaw::Uniform { low, high },
            _ => ScaleLaw::Unit,
        }
    }
}

impl MomentOracle for RandomFieldModel {
    fn abs_moment(&self, gamma: f64, x: usize, t: usize) -> Result<f64> {
        match self.spec.kind {
            ModelKind::SymmetrizedUniform => self.uniform_oracle().abs_moment(gamma, x, t),
            ModelKind::MixingaleAr { signal, .. } => {
                // η = ±1 is independent of the Gaussian part and symmetric
                let b2 = 1.0 - signal * signal;
                let sd = (b2 * self.base_covariance(x, t, x, t)).max(0.0).sqrt();
                Ok(shifted_normal_abs_moment(self.spec.scale * signal, sd, gamma))
            }
            _ => {
                let v = self.base_covariance(x, t, x, t).max(0.0);
                Ok(self.law().moment(gamma)? * v.powf(0.5 * gamma) * normal_abs_moment(gamma))
            }
        }
    }

    fn increment_moment(&self, v: f64, x: usize, t: usize, s: usize) -> Result<f64> {
        if t == s {
            return Ok(0.0);
        }
        let inc = |factor: f64| {
            (factor
                * (self.base_covariance(x, t, x, t) + self.base_covariance(x, s, x, s)
                    - 2.0 * self.base_covariance(x, t, x, s)))
            .max(0.0)
        };
        match self.spec.kind {
            ModelKind::SymmetrizedUniform => self.uniform_oracle().increment_moment(v, x, t, s),
            ModelKind::MixingaleAr { signal, .. } => {
                // the chain term cancels in increments
                Ok(inc(1.0 - signal * signal).powf(0.5 * v) * normal_abs_moment(v))
            }
            _ => Ok(self.law().moment(v)? * inc(1.0).powf(0.5 * v) * normal_abs_moment(v)),
        }
    }

    fn power_increment_moment(&self, p: f64, q: f64, x: usize, t: usize, s: usize) -> Option<Result<f64>> {
        match self.spec.kind {
            ModelKind::SymmetrizedUniform | ModelKind::MixingaleAr { .. } => None,
            _ => {
                if t == s {
                    return Some(Ok(0.0));
                }
                let g = match self.law().moment(p * q) {
                    Ok(g) => g,
                    Err(e) => return Some(Err(e)),
                };
                let (va, vb) = (self.base_covariance(x, t, x, t), self.base_covariance(x, s, x, s));
                let c = self.base_covariance(x, t, x, s);
                Some(Ok(g * gaussian_power_increment_moment(va, vb, c, p, q)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spaces() -> (Arc<MeasureSpace>, Arc<IndexSpace>) {
        let x = Arc::new(MeasureSpace::uniform(3, 1.0 / 3.0).unwrap());
        let t = Arc::new(IndexSpace::from_coords((0..4).map(|i| vec![i as f64]).collect(), 1.0).unwrap());
        (x, t)
    }

    fn spec(kind: ModelKind) -> ModelSpec {
        ModelSpec {
            kind,
            scale: 1.5,
            x_kernel: Kernel::Exponential { length: 1.0 },
            t_kernel: Kernel::SquaredExponential { length: 2.0 },
        }
    }

    #[test]
    fn square_root_reproduces_covariance() {
        let (x, t) = spaces();
        let m = RandomFieldModel::new(spec(ModelKind::Gaussian), x, t).unwrap();
        let n = m.nt();
        for i in 0..n {
            for j in 0..n {
                let c: f64 = (0..n).map(|k| m.lt[i * n + k] * m.lt[j * n + k]).sum();
                assert!((c - m.kt[i * n + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_invalid_models() {
        let (x, t) = spaces();
        let bad = ModelSpec {
            t_kernel: Kernel::Matrix {
                matrix: vec![vec![1.0, 2.0, 0.0, 0.0], vec![2.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]],
            },
            ..spec(ModelKind::Gaussian)
        };
        assert!(RandomFieldModel::new(bad, x.clone(), t.clone()).is_err());
        let bad = spec(ModelKind::MixingaleAr { a: 1.0, signal: 0.5 });
        assert!(RandomFieldModel::new(bad, x.clone(), t.clone()).is_err());
        let labels = Arc::new(
            MeasureSpace::new(
                vec![crate::measure_grid::PointId::Label("a".into()), crate::measure_grid::PointId::Label("b".into())],
                vec![1.0, 1.0],
            )
            .unwrap(),
        );
        assert!(RandomFieldModel::new(spec(ModelKind::Gaussian), labels, t).is_err());
    }

    #[test]
    fn oracle_second_moments_match_variance() {
        let (x, t) = spaces();
        for kind in [
            ModelKind::Gaussian,
            ModelKind::SymmetrizedUniform,
            ModelKind::HeavyTailT { dof: 7.0 },
            ModelKind::MartingaleDifference { low: 0.5, high: 1.5 },
            ModelKind::MixingaleAr { a: 0.5, signal: 0.6 },
        ] {
            let m = RandomFieldModel::new(spec(kind.clone()), x.clone(), t.clone()).unwrap();
            for xi in 0..3 {
                for ti in 0..4 {
                    let v = m.abs_moment(2.0, xi, ti).unwrap();
                    assert!((v - m.variance(xi, ti)).abs() < 1e-10 * v, "{kind:?}");
                }
            }
        }
    }

    #[test]
    fn beta_sequences() {
        let (x, t) = spaces();
        let m = RandomFieldModel::new(spec(ModelKind::MixingaleAr { a: -0.5, signal: 0.5 }), x, t).unwrap();
        let beta = m.beta_sequence().unwrap();
        let values: Vec<f64> = (1..30).map(|k| beta.at(k)).collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(values.last().unwrap() < &1e-8);
    }
}
