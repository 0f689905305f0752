//! Perturbation models for robustness evaluation.
//!
//! The zero-mean i.i.d. models all have per-coordinate variance `sigma^2`:
//! uniform on `[-sigma*sqrt(3), sigma*sqrt(3)]`, Laplace with scale
//! `sigma/sqrt(2)`, and Rademacher `+-sigma`. Sample `k` of seed `s` is drawn
//! from ChaCha8 stream `k` of `s`, so samples can be generated in any order.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::rng::{normal, stream_rng, unit_vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    Uniform { sigma: f64 },
    Laplace { sigma: f64 },
    Rademacher { sigma: f64 },
    /// Deterministic rounding of both modalities, see [`Quantizer`].
    Quantize { levels: usize, lo: f64, hi: f64 },
    /// Every row shifted along one random unit direction by its own
    /// `N(0, sigma^2)` amount.
    Rank1Shift { sigma: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { sigma }
            | NoiseModel::Uniform { sigma }
            | NoiseModel::Laplace { sigma }
            | NoiseModel::Rademacher { sigma }
            | NoiseModel::Rank1Shift { sigma } => {
                if sigma >= 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::BadModel(format!("sigma must be non-negative and finite, got {sigma}")))
                }
            }
            NoiseModel::Quantize { levels, lo, hi } => Quantizer::new(levels, lo, hi).map(|_| ()),
        }
    }

    pub fn quantizer(&self) -> Option<Quantizer> {
        match *self {
            NoiseModel::Quantize { levels, lo, hi } => Some(Quantizer { levels, lo, hi }),
            _ => None,
        }
    }
}

/// Clamps to `[lo, hi]` and snaps to the nearest of `levels` evenly spaced
/// values including both endpoints. Exact midpoints snap down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    levels: usize,
    lo: f64,
    hi: f64,
}

impl Quantizer {
    pub fn new(levels: usize, lo: f64, hi: f64) -> Result<Quantizer> {
        if levels < 2 {
            return Err(Error::BadRange(format!("need at least 2 levels, got {levels}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::BadRange(format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Quantizer { levels, lo, hi })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.levels - 1) as f64
    }

    pub fn apply(&self, v: f64) -> f64 {
        let step = self.step();
        let t = (v.clamp(self.lo, self.hi) - self.lo) / step;
        let below = t.floor();
        let k = if t - below > 0.5 { below + 1.0 } else { below };
        let k = k.min((self.levels - 1) as f64);
        if k as usize == self.levels - 1 {
            self.hi
        } else {
            self.lo + k * step
        }
    }

    pub fn apply_matrix(&self, m: &EmbeddingMatrix) -> EmbeddingMatrix {
        let mut out = m.clone();
        out.values_mut().iter_mut().for_each(|v| *v = self.apply(*v));
        out
    }
}

pub fn quantize_matrix(m: &EmbeddingMatrix, levels: usize, lo: f64, hi: f64) -> Result<EmbeddingMatrix> {
    Ok(Quantizer::new(levels, lo, hi)?.apply_matrix(m))
}

/// Noise sample `sample_index` of `seed` with shape `n x d`.
pub fn sample_noise(model: &NoiseModel, n: usize, d: usize, seed: u64, sample_index: u64) -> Result<EmbeddingMatrix> {
    model.validate()?;
    let mut out = EmbeddingMatrix::zeros(n, d)?;
    fill_noise(model, d, seed, sample_index, out.values_mut())?;
    Ok(out)
}

/// Writes the sample into `buf` (row-major, `d` columns).
pub(crate) fn fill_noise(model: &NoiseModel, d: usize, seed: u64, sample_index: u64, buf: &mut [f64]) -> Result<()> {
    let mut rng = stream_rng(seed, sample_index);
    match *model {
        NoiseModel::Gaussian { sigma } => buf.iter_mut().for_each(|v| *v = sigma * normal(&mut rng)),
        NoiseModel::Uniform { sigma } => {
            let half = sigma * 3f64.sqrt();
            buf.iter_mut().for_each(|v| *v = half * (2.0 * rng.random::<f64>() - 1.0));
        }
        NoiseModel::Laplace { sigma } => {
            let scale = sigma / 2f64.sqrt();
            for v in buf.iter_mut() {
                // inverse CDF on u in (-1/2, 1/2)
                let u = loop {
                    let u = rng.random::<f64>() - 0.5;
                    if u > -0.5 {
                        break u;
                    }
                };
                *v = -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
            }
        }
        NoiseModel::Rademacher { sigma } => {
            buf.iter_mut().for_each(|v| *v = if rng.random::<bool>() { sigma } else { -sigma });
        }
        NoiseModel::Rank1Shift { sigma } => {
            let direction = unit_vector(&mut rng, d);
            for row in buf.chunks_exact_mut(d) {
                let a = sigma * normal(&mut rng);
                row.iter_mut().zip(&direction).for_each(|(v, c)| *v = a * c);
            }
        }
        NoiseModel::Quantize { .. } => {
            return Err(Error::BadModel("quantization is a deterministic map, not a noise sample".into()));
        }
    }
    Ok(())
}
