//! Drawing fields and normed sums from a model.

use super::model::{ModelKind, RandomFieldModel};
use super::rng::stream;
use crate::measure_grid::Field;
use crate::numeric::normal_cdf;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, Uniform};

/// Sequential sampler of `ξ_1, ξ_2, ...` from one generator; dependent
/// kinds start in their stationary law.
pub struct PathSampler<'a> {
    model: &'a RandomFieldModel,
    rng: ChaCha8Rng,
    innovations: Vec<f64>,
    scratch: Vec<f64>,
    /// Previous innovation's first coordinate (martingale kind).
    previous: f64,
    /// Current chain state (mixingale kind).
    regime: f64,
    uniform: Uniform<f64>,
    chi: Option<ChiSquared<f64>>,
}

impl<'a> PathSampler<'a> {
    pub fn new(model: &'a RandomFieldModel, mut rng: ChaCha8Rng) -> Self {
        let width = model.nx() * model.nt();
        let root3 = 3f64.sqrt();
        let previous = rng.sample(StandardNormal);
        let regime = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let chi = match model.kind() {
            ModelKind::HeavyTailT { dof } => Some(ChiSquared::new(*dof).expect("validated degrees of freedom")),
            _ => None,
        };
        Self {
            model,
            rng,
            innovations: vec![0.0; width],
            scratch: vec![0.0; width],
            previous,
            regime,
            uniform: Uniform::new(-root3, root3).expect("finite bounds"),
            chi,
        }
    }

    /// Writes the next field of the path into `out` (row-major, `x` outer).
    pub fn next_into(&mut self, out: &mut [f64]) {
        let model = self.model;
        match model.kind() {
            ModelKind::SymmetrizedUniform => {
                for v in self.innovations.iter_mut() {
                    *v = self.uniform.sample(&mut self.rng);
                }
            }
            _ => {
                for v in self.innovations.iter_mut() {
                    *v = self.rng.sample(StandardNormal);
                }
            }
        }
        self.apply_factor(out);
        let scale = model.spec().scale;
        match *model.kind() {
            ModelKind::Gaussian | ModelKind::SymmetrizedUniform => {
                out.iter_mut().for_each(|v| *v *= scale);
            }
            ModelKind::HeavyTailT { dof } => {
                let w: f64 = self.chi.as_ref().expect("chi-square law").sample(&mut self.rng);
                let g = scale * (dof / w).sqrt();
                out.iter_mut().for_each(|v| *v *= g);
            }
            ModelKind::MartingaleDifference { low, high } => {
                let g = scale * (low + (high - low) * normal_cdf(self.previous));
                out.iter_mut().for_each(|v| *v *= g);
                self.previous = self.innovations[0];
            }
            ModelKind::MixingaleAr { a, signal } => {
                let stay = 0.5 * (1.0 + a);
                if self.rng.random::<f64>() >= stay {
                    self.regime = -self.regime;
                }
                let b = (1.0 - signal * signal).sqrt();
                let shift = scale * signal * self.regime;
                out.iter_mut().for_each(|v| *v = shift + scale * b * *v);
            }
        }
    }

    /// `out = L_X Z L_T^T` for the innovation matrix `Z`.
    fn apply_factor(&mut self, out: &mut [f64]) {
        let (nx, nt) = (self.model.nx(), self.model.nt());
        let (lx, lt) = (self.model.lx(), self.model.lt());
        // scratch = Z L_T^T
        for i in 0..nx {
            let z = &self.innovations[i * nt..(i + 1) * nt];
            for t in 0..nt {
                let l = &lt[t * nt..(t + 1) * nt];
                self.scratch[i * nt + t] = z.iter().zip(l).map(|(a, b)| a * b).sum();
            }
        }
        out.fill(0.0);
        for x in 0..nx {
            let row = &mut out[x * nt..(x + 1) * nt];
            for i in 0..nx {
                let c = lx[x * nx + i];
                if c == 0.0 {
                    continue;
                }
                for (o, s) in row.iter_mut().zip(&self.scratch[i * nt..(i + 1) * nt]) {
                    *o += c * s;
                }
            }
        }
    }
}

fn to_field(model: &RandomFieldModel, values: Vec<f64>) -> Field {
    Field::from_parts_unchecked(values, model.x_space().clone(), model.t_space().clone())
}

/// One realization; a pure function of `(model, seed)`.
pub fn sample_field(model: &RandomFieldModel, seed: u64) -> Field {
    let mut sampler = PathSampler::new(model, stream(seed, "field", 0));
    let mut out = vec![0.0; model.nx() * model.nt()];
    sampler.next_into(&mut out);
    to_field(model, out)
}

/// `S_n = n^{-1/2} Σ_{k<=n} ξ_k` along one path.
pub fn normed_sum(model: &RandomFieldModel, n: usize, seed: u64) -> Field {
    let mut fields = normed_sum_ladder_with(model, &[n.max(1)], stream(seed, "normed_sum", 0));
    fields.pop().expect("one rung")
}

/// `S_n` for every `n` in an increasing ladder, from nested prefixes of a
/// single path drawn from `rng`.
pub fn normed_sum_ladder_with(model: &RandomFieldModel, ladder: &[usize], rng: ChaCha8Rng) -> Vec<Field> {
    normed_sum_ladder_values(model, ladder, rng)
        .into_iter()
        .map(|v| to_field(model, v))
        .collect()
}

pub(crate) fn normed_sum_ladder_values(model: &RandomFieldModel, ladder: &[usize], rng: ChaCha8Rng) -> Vec<Vec<f64>> {
    let width = model.nx() * model.nt();
    let mut sampler = PathSampler::new(model, rng);
    let mut sum = vec![0.0; width];
    let mut draw = vec![0.0; width];
    let mut out = Vec::with_capacity(ladder.len());
    let mut done = 0usize;
    for &n in ladder {
        assert!(n >= done.max(1), "ladder must be increasing and start at 1 or more");
        while done < n {
            sampler.next_into(&mut draw);
            for (s, d) in sum.iter_mut().zip(&draw) {
                *s += d;
            }
            done += 1;
        }
        let c = 1.0 / (n as f64).sqrt();
        out.push(sum.iter().map(|v| v * c).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::model::{Kernel, ModelSpec};
    use super::*;
    use crate::measure_grid::{IndexSpace, MeasureSpace};
    use std::sync::Arc;

    fn model(kind: ModelKind, x_kernel: Kernel) -> RandomFieldModel {
        let x = Arc::new(MeasureSpace::uniform(3, 1.0).unwrap());
        let t = Arc::new(IndexSpace::from_coords((0..4).map(|i| vec![i as f64]).collect(), 1.0).unwrap());
        let spec = ModelSpec {
            kind,
            scale: 1.0,
            x_kernel,
            t_kernel: Kernel::Exponential { length: 2.0 },
        };
        RandomFieldModel::new(spec, x, t).unwrap()
    }

    #[test]
    fn deterministic_and_zero() {
        let m = model(ModelKind::Gaussian, Kernel::Independent);
        assert_eq!(sample_field(&m, 5).values(), sample_field(&m, 5).values());
        assert_ne!(sample_field(&m, 5).values(), sample_field(&m, 6).values());
        let z = model(ModelKind::Gaussian, Kernel::Zero);
        assert!(sample_field(&z, 1).values().iter().all(|v| *v == 0.0));
        assert!(normed_sum(&z, 10, 1).values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_rung_is_single_draw() {
        let m = model(ModelKind::SymmetrizedUniform, Kernel::Independent);
        let rng = stream(3, "ladder", 0);
        let one = normed_sum_ladder_with(&m, &[1], rng.clone());
        let mut sampler = PathSampler::new(&m, rng);
        let mut draw = vec![0.0; 12];
        sampler.next_into(&mut draw);
        assert_eq!(one[0].values(), &draw[..]);
    }

    #[test]
    fn scaling_is_exact() {
        let m = model(ModelKind::MixingaleAr { a: 0.5, signal: 0.5 }, Kernel::Independent);
        let m2 = m.scaled(2.0).unwrap();
        let a = normed_sum(&m, 7, 11);
        let b = normed_sum(&m2, 7, 11);
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((2.0 * u - v).abs() <= 1e-14 * v.abs().max(1.0));
        }
    }
}
