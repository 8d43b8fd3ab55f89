//! Online learners producing the ancillary sequence `h_t`.
//!
//! Each learner sees only processed gradients `Ḡ_t` and the deterministic
//! weight sequence; it never queries the objective itself.

mod aoftrl;
mod ftrl;
mod smd;

pub use aoftrl::{aoftrl_step, OptimisticFtrl};
pub use ftrl::{ftrl_regret_bound, ftrl_step, Ftrl, FtrlRegretPoint};
pub use smd::{smd_regret_slack, smd_step, MirrorDescent, MirrorStep};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DualVector, Vector};

/// Feedback delivered to a learner at round `t` (1-based).
#[derive(Debug, Clone, Copy)]
pub struct Round<'a> {
    pub t: usize,
    /// `α_t`, the weight of this round's feedback.
    pub weight: f64,
    /// `α_{t+1}`, needed by optimistic learners to weigh their hint.
    pub next_weight: f64,
    pub feedback: &'a DualVector,
}

pub trait OnlineLearner: Send {
    /// The current ancillary iterate `h_t`.
    fn current(&self) -> &Vector;

    /// Step size `β_t` used at round `t`, for learners that have one.
    fn step_size(&self, t: usize) -> Option<f64>;

    /// Consumes round `t` feedback and advances to `h_{t+1}`.
    fn update(&mut self, round: Round<'_>) -> Result<()>;

    fn name(&self) -> &'static str;
}

/// Strengths `s_t` of the quadratic regularizers `ψ_t(h) = (s_t/2)‖h‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegularizerSchedule {
    Constant {
        strength: f64,
    },
    /// `s_t = scale·√t`.
    SqrtGrowth {
        scale: f64,
    },
    /// `s_1, s_2, …`; the last value repeats past the end.
    Explicit {
        strengths: Vec<f64>,
    },
}

impl RegularizerSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            Self::Constant { strength } if !(*strength > 0.0 && strength.is_finite()) => {
                bad(format!("regularizer strength must be > 0, got {strength}"))
            }
            Self::SqrtGrowth { scale } if !(*scale > 0.0 && scale.is_finite()) => {
                bad(format!("regularizer scale must be > 0, got {scale}"))
            }
            Self::Explicit { strengths } => {
                if strengths.is_empty() {
                    return bad("explicit regularizer schedule is empty".into());
                }
                if strengths.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return bad("regularizer strengths must be finite and > 0".into());
                }
                if strengths.windows(2).any(|w| w[1] < w[0]) {
                    return bad("regularizer strengths must be nondecreasing".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `s_t` for `t ≥ 1`.
    pub fn strength(&self, t: usize) -> f64 {
        let t = t.max(1);
        match self {
            Self::Constant { strength } => *strength,
            Self::SqrtGrowth { scale } => scale * (t as f64).sqrt(),
            Self::Explicit { strengths } => strengths[(t - 1).min(strengths.len() - 1)],
        }
    }

    /// `ψ_t(h)`.
    pub fn value(&self, t: usize, h: &Vector) -> f64 {
        0.5 * self.strength(t) * h.iter().map(|x| x * x).sum::<f64>()
    }
}

/// Step sizes `β_t` for mirror descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant {
        beta: f64,
    },
    /// `β_1, β_2, …`; the last value repeats past the end.
    Sequence {
        betas: Vec<f64>,
    },
}

impl StepSchedule {
    pub fn constant(beta: f64) -> Result<Self> {
        let s = Self::Constant { beta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Constant { beta } => *beta > 0.0 && beta.is_finite(),
            Self::Sequence { betas } => !betas.is_empty() && betas.iter().all(|b| *b > 0.0 && b.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("step sizes must be finite and > 0".into()))
        }
    }

    pub fn at(&self, t: usize) -> f64 {
        match self {
            Self::Constant { beta } => *beta,
            Self::Sequence { betas } => betas[(t.max(1) - 1).min(betas.len() - 1)],
        }
    }

    pub fn take(&self, horizon: usize) -> Vec<f64> {
        (1..=horizon).map(|t| self.at(t)).collect()
    }

    /// Checks `β_t ≤ s/λ` and `α_t/α_{t−1} ≥ β_t/β_{t−1}` over the horizon
    /// of `weights`, the conditions under which the mirror-descent envelope applies.
    pub fn validate_against(&self, weights: &[f64], strong_convexity: f64, smoothness: f64) -> Result<()> {
        let cap = strong_convexity / smoothness;
        for t in 1..=weights.len() {
            let beta = self.at(t);
            if beta > cap * (1.0 + 1e-12) {
                return Err(Error::Precondition(format!(
                    "step size beta_{t} = {beta} exceeds s/lambda = {cap}"
                )));
            }
            if t > 1 {
                let (a_ratio, b_ratio) = (weights[t - 1] / weights[t - 2], beta / self.at(t - 1));
                if a_ratio < b_ratio * (1.0 - 1e-12) {
                    return Err(Error::Precondition(format!(
                        "weight ratio alpha_{t}/alpha_{} = {a_ratio} is below step ratio {b_ratio}",
                        t - 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Named weight sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightPreset {
    ConstantOne,
    /// Largest weights with `(λ/s_t)α_t² ≤ α_{1:t−1}`, starting from `α_1 = 1`.
    OptimisticCompatible {
        smoothness: f64,
        regularizers: RegularizerSchedule,
    },
    Explicit {
        weights: Vec<f64>,
    },
}

pub fn weight_preset(preset: &WeightPreset, horizon: usize) -> Result<Vec<f64>> {
    match preset {
        WeightPreset::ConstantOne => Ok(vec![1.0; horizon]),
        WeightPreset::OptimisticCompatible {
            smoothness,
            regularizers,
        } => {
            if !(*smoothness > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "smoothness must be > 0, got {smoothness}"
                )));
            }
            regularizers.validate()?;
            let mut weights = Vec::with_capacity(horizon);
            let mut total = 0.0;
            for t in 1..=horizon {
                let a = if t == 1 {
                    1.0
                } else {
                    (regularizers.strength(t) / smoothness * total).sqrt()
                };
                weights.push(a);
                total += a;
            }
            Ok(weights)
        }
        WeightPreset::Explicit { weights } => {
            if weights.len() < horizon {
                return Err(Error::InvalidParameter(format!(
                    "{} explicit weights for horizon {horizon}",
                    weights.len()
                )));
            }
            if weights.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                return Err(Error::InvalidParameter("weights must be finite and > 0".into()));
            }
            Ok(weights[..horizon].to_vec())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_weights() {
        assert_eq!(weight_preset(&WeightPreset::ConstantOne, 5).unwrap(), vec![1.0; 5]);
    }

    #[test]
    fn optimistic_weights_recursion() {
        let preset = WeightPreset::OptimisticCompatible {
            smoothness: 1.0,
            regularizers: RegularizerSchedule::Constant { strength: 1.0 },
        };
        let w = weight_preset(&preset, 4).unwrap();
        assert_eq!(w[0], 1.0);
        assert_eq!(w[1], 1.0);
        assert!((w[2] - 2f64.sqrt()).abs() < 1e-15);
        assert!((w[3] - (2.0 + 2f64.sqrt()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn optimistic_weights_satisfy_condition() {
        let regs = RegularizerSchedule::SqrtGrowth { scale: 0.7 };
        let preset = WeightPreset::OptimisticCompatible {
            smoothness: 2.5,
            regularizers: regs.clone(),
        };
        let w = weight_preset(&preset, 200).unwrap();
        let mut total = w[0];
        for t in 2..=200 {
            let a = w[t - 1];
            assert!(2.5 / regs.strength(t) * a * a <= total * (1.0 + 1e-12));
            total += a;
        }
    }

    #[test]
    fn regularizer_schedules() {
        let r = RegularizerSchedule::Explicit {
            strengths: vec![1.0, 2.0],
        };
        assert_eq!(r.strength(1), 1.0);
        assert_eq!(r.strength(5), 2.0);
        assert!(RegularizerSchedule::Explicit {
            strengths: vec![2.0, 1.0]
        }
        .validate()
        .is_err());
        assert_eq!(RegularizerSchedule::SqrtGrowth { scale: 2.0 }.strength(4), 4.0);
    }

    #[test]
    fn step_conditions() {
        let steps = StepSchedule::constant(1.0).unwrap();
        assert!(steps.validate_against(&[1.0; 10], 1.0, 1.0).is_ok());
        assert!(steps.validate_against(&[1.0; 10], 1.0, 2.0).is_err());
        let growing = StepSchedule::Sequence { betas: vec![0.1, 0.2] };
        assert!(growing.validate_against(&[1.0, 1.0], 1.0, 1.0).is_err());
        assert!(growing.validate_against(&[1.0, 2.0], 1.0, 1.0).is_ok());
    }
}
