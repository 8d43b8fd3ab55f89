//! Stochastic gradient oracles.
//!
//! Every oracle returns a dual vector whose conditional mean is the exact
//! gradient of the objective at the query point. Randomness comes from a
//! seeded ChaCha stream owned by the oracle, so a given seed and query
//! sequence always reproduce the same gradients bit for bit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Pareto, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DualVector, Vector};
use crate::objectives::Objective;

/// Distribution of the i.i.d. per-coordinate noise, before scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    /// Student-t with `dof` degrees of freedom; the variance is finite only for `dof > 2`.
    StudentT {
        dof: f64,
    },
    /// Pareto(1, shape) magnitude with a random sign.
    SymmetricPareto {
        shape: f64,
    },
}

impl NoiseFamily {
    /// E[ξ²] of one unscaled coordinate.
    pub fn second_moment(&self) -> Result<f64> {
        match *self {
            Self::Gaussian => Ok(1.0),
            Self::StudentT { dof } if dof > 2.0 => Ok(dof / (dof - 2.0)),
            Self::SymmetricPareto { shape } if shape > 2.0 => Ok(shape / (shape - 2.0)),
            Self::StudentT { dof } => Err(Error::InvalidParameter(format!(
                "Student-t noise needs dof > 2 for a finite variance, got {dof}"
            ))),
            Self::SymmetricPareto { shape } => Err(Error::InvalidParameter(format!(
                "Pareto noise needs shape > 2 for a finite variance, got {shape}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub scale: f64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, scale: f64) -> Result<Self> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise scale must be >= 0, got {scale}"
            )));
        }
        family.second_moment()?;
        Ok(Self { family, scale })
    }

    pub fn zero() -> Self {
        Self {
            family: NoiseFamily::Gaussian,
            scale: 0.0,
        }
    }

    /// Scale giving a certified σ of exactly `sigma` in dimension `dim`.
    pub fn with_sigma(family: NoiseFamily, sigma: f64, dim: usize) -> Result<Self> {
        let unit = certified_sigma(&Self::new(family, 1.0)?, dim)?;
        Self::new(family, sigma / unit)
    }
}

/// σ with E‖ξ‖₂² ≤ σ² for the d-dimensional scaled noise vector.
pub fn certified_sigma(noise: &NoiseSpec, dim: usize) -> Result<f64> {
    let m2 = noise.family.second_moment()?;
    Ok(noise.scale * (dim as f64 * m2).sqrt())
}

/// Source of stochastic gradients.
pub trait GradientOracle {
    /// Stochastic gradient of `obj` at `point`; `t` is the 1-based round index.
    fn query(&mut self, obj: &Objective, point: &Vector, t: usize) -> Result<DualVector>;
}

enum NoiseSampler {
    Gaussian(Normal<f64>),
    StudentT(StudentT<f64>),
    SymmetricPareto(Pareto<f64>),
}

impl NoiseSampler {
    fn new(family: NoiseFamily) -> Result<Self> {
        let bad = |e: &dyn std::fmt::Display| Error::InvalidParameter(e.to_string());
        Ok(match family {
            NoiseFamily::Gaussian => Self::Gaussian(Normal::new(0.0, 1.0).map_err(|e| bad(&e))?),
            NoiseFamily::StudentT { dof } => Self::StudentT(StudentT::new(dof).map_err(|e| bad(&e))?),
            NoiseFamily::SymmetricPareto { shape } => {
                Self::SymmetricPareto(Pareto::new(1.0, shape).map_err(|e| bad(&e))?)
            }
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Self::Gaussian(d) => d.sample(rng),
            Self::StudentT(d) => d.sample(rng),
            Self::SymmetricPareto(d) => {
                let magnitude = d.sample(rng);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }
}

/// Exact gradient plus i.i.d. scaled noise on each coordinate.
pub struct SyntheticOracle {
    noise: NoiseSpec,
    sampler: NoiseSampler,
    rng: ChaCha8Rng,
}

impl SyntheticOracle {
    pub fn new(noise: NoiseSpec, seed: u64) -> Result<Self> {
        Ok(Self {
            sampler: NoiseSampler::new(noise.family)?,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    /// One draw of the scaled noise vector.
    pub fn sample_noise(&mut self, dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|_| self.noise.scale * self.sampler.sample(&mut self.rng))
            .collect()
    }
}

impl GradientOracle for SyntheticOracle {
    fn query(&mut self, obj: &Objective, point: &Vector, _t: usize) -> Result<DualVector> {
        let grad = obj.gradient(point)?;
        if self.noise.scale == 0.0 {
            return Ok(grad);
        }
        let noise = self.sample_noise(grad.dim());
        DualVector::new(grad.iter().zip(&noise).map(|(g, e)| g + e).collect())
    }
}

/// Mean of per-example gradients over consecutive batches of an epoch
/// permutation of the objective's examples.
pub struct MiniBatchOracle {
    batch_size: usize,
    shuffle: bool,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    cursor: usize,
    epochs_started: usize,
}

impl MiniBatchOracle {
    pub fn new(batch_size: usize, shuffle: bool, seed: u64) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be at least 1".into()));
        }
        Ok(Self {
            batch_size,
            shuffle,
            rng: ChaCha8Rng::seed_from_u64(seed),
            order: Vec::new(),
            cursor: 0,
            epochs_started: 0,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn epochs_started(&self) -> usize {
        self.epochs_started
    }

    /// Indices of the next batch out of `n_examples`. A fresh permutation is
    /// drawn at the start of each epoch; the last batch of an epoch may be short.
    pub fn next_batch(&mut self, n_examples: usize) -> Result<Vec<usize>> {
        if n_examples == 0 {
            return Err(Error::InvalidParameter(
                "mini-batch oracle over an empty dataset".into(),
            ));
        }
        if self.order.len() != n_examples || self.cursor >= self.order.len() {
            if self.epochs_started > 0 && !self.shuffle && self.order.len() == n_examples {
                return Err(Error::OracleExhausted { served: self.cursor });
            }
            self.order = (0..n_examples).collect();
            if self.shuffle {
                self.order.shuffle(&mut self.rng);
            }
            self.cursor = 0;
            self.epochs_started += 1;
        }
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let batch = self.order[self.cursor..end].to_vec();
        self.cursor = end;
        Ok(batch)
    }
}

impl GradientOracle for MiniBatchOracle {
    fn query(&mut self, obj: &Objective, point: &Vector, _t: usize) -> Result<DualVector> {
        let batch = self.next_batch(obj.n_examples())?;
        obj.batch_gradient(point, &batch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    MiniBatch { batch_size: usize, shuffle: bool },
    Synthetic { noise: NoiseSpec },
}

impl OracleSpec {
    pub fn build(&self, seed: u64) -> Result<Box<dyn GradientOracle + Send>> {
        Ok(match *self {
            Self::MiniBatch { batch_size, shuffle } => Box::new(MiniBatchOracle::new(batch_size, shuffle, seed)?),
            Self::Synthetic { noise } => Box::new(SyntheticOracle::new(noise, seed)?),
        })
    }
}

/// Derives an independent 64-bit seed from a master seed and a path of
/// indices (trial, method, …) by chained SplitMix64 mixing.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}
