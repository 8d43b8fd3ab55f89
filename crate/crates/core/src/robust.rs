//! Norm truncation of stochastic gradients around a fixed anchor.
//!
//! A raw gradient `G` farther than `c` (in dual norm) from the dual anchor
//! `g̃` is replaced by `g̃` itself; otherwise it passes through unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{DualVector, Norm, Vector};
use crate::objectives::Objective;

/// Primal/dual anchor pair. `eps_sigma` is the accuracy budget of `g̃` as an
/// estimate of the gradient at `h̃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub h_tilde: Vector,
    pub g_tilde: DualVector,
    pub eps_sigma: f64,
    pub delta: f64,
}

impl Anchor {
    pub fn new(h_tilde: Vector, g_tilde: DualVector, eps_sigma: f64, delta: f64) -> Result<Self> {
        check_dim(h_tilde.dim(), g_tilde.dim())?;
        if !(eps_sigma >= 0.0 && eps_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "anchor accuracy must be >= 0, got {eps_sigma}"
            )));
        }
        check_confidence(delta)?;
        Ok(Self {
            h_tilde,
            g_tilde,
            eps_sigma,
            delta,
        })
    }
}

pub(crate) fn check_confidence(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "confidence delta must lie in (0, 1), got {delta}"
        )))
    }
}

/// How the truncation radius `c_t` is chosen at each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdSchedule {
    /// `ε̃σ + λ‖h̃ − h̄_t‖ + c₀`.
    SmoothTheory {
        eps_sigma: f64,
        smoothness: f64,
        offset: f64,
    },
    /// A fixed radius.
    Heuristic { c: f64 },
}

impl ThresholdSchedule {
    pub fn smooth_theory(eps_sigma: f64, smoothness: f64, offset: f64) -> Result<Self> {
        if !(eps_sigma >= 0.0 && smoothness >= 0.0 && offset > 0.0) || !(eps_sigma + smoothness + offset).is_finite() {
            return Err(Error::InvalidParameter(format!(
                "threshold needs eps_sigma >= 0, smoothness >= 0, offset > 0; got {eps_sigma}, {smoothness}, {offset}"
            )));
        }
        Ok(Self::SmoothTheory {
            eps_sigma,
            smoothness,
            offset,
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("threshold must be > 0, got {c}")));
        }
        Ok(Self::Heuristic { c })
    }

    /// `√(n_train / ln δ⁻¹)`, the benchmark default.
    pub fn heuristic(n_train: usize, delta: f64) -> Result<Self> {
        check_confidence(delta)?;
        if n_train == 0 {
            return Err(Error::InvalidParameter("heuristic threshold needs n_train >= 1".into()));
        }
        Self::constant((n_train as f64 / (1.0 / delta).ln()).sqrt())
    }

    /// Threshold at main iterate `h_bar`, with distances in `norm`.
    pub fn threshold_at(&self, h_bar: &Vector, anchor: &Anchor, norm: Norm) -> Result<f64> {
        match *self {
            Self::SmoothTheory {
                eps_sigma,
                smoothness,
                offset,
            } => {
                let dist = anchor.h_tilde.sub(h_bar)?.norm(norm);
                Ok(eps_sigma + smoothness * dist + offset)
            }
            Self::Heuristic { c } => Ok(c),
        }
    }
}

/// The offset `c₀ = max{λD, σ√(T / ln δ⁻¹)} + ε̃σ`, valid once the horizon
/// satisfies `T ≥ ln(δ⁻¹)·⌈ε̃σ⌉²`.
pub fn truncation_offset(
    smoothness: f64,
    diameter: f64,
    sigma: f64,
    horizon: usize,
    delta: f64,
    eps_sigma: f64,
) -> Result<f64> {
    check_confidence(delta)?;
    for (name, v) in [
        ("smoothness", smoothness),
        ("diameter", diameter),
        ("sigma", sigma),
        ("eps_sigma", eps_sigma),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }
    let log_inv = (1.0 / delta).ln();
    let minimum = (log_inv * eps_sigma.ceil().powi(2)).ceil() as usize;
    if horizon == 0 || horizon < minimum {
        return Err(Error::HorizonTooShort {
            horizon,
            minimum: minimum.max(1),
        });
    }
    let offset = (smoothness * diameter).max(sigma * (horizon as f64 / log_inv).sqrt()) + eps_sigma;
    if !(offset > 0.0) {
        return Err(Error::InvalidParameter(
            "truncation offset is zero; at least one of smoothness·diameter, sigma, eps_sigma must be positive".into(),
        ));
    }
    Ok(offset)
}

/// Returns `(g̃, true)` when `‖G − g̃‖ > c` in the dual of `norm`, else `(G, false)`.
pub fn process(g: &DualVector, anchor: &Anchor, c: f64, norm: Norm) -> Result<(DualVector, bool)> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "truncation threshold must be > 0, got {c}"
        )));
    }
    let deviation = g.sub(&anchor.g_tilde)?.dual_norm(norm);
    if deviation > c {
        Ok((anchor.g_tilde.clone(), true))
    } else {
        Ok((g.clone(), false))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TruncationStats {
    pub flags: Vec<bool>,
}

impl TruncationStats {
    pub fn record(&mut self, truncated: bool) {
        self.flags.push(truncated);
    }

    pub fn total_queries(&self) -> usize {
        self.flags.len()
    }

    pub fn truncated_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn rate(&self) -> f64 {
        if self.flags.is_empty() {
            0.0
        } else {
            self.truncated_count() as f64 / self.flags.len() as f64
        }
    }
}

/// How the anchor pair is formed.
#[derive(Debug, Clone, PartialEq)]
pub enum AnchorStrategy {
    /// `g̃ = ∇R(h̃)` exactly, with zero accuracy budget.
    Exact { h_tilde: Vector },
    /// `g̃` is the mean of per-example gradients at `h̃` over `indices`
    /// (all examples when `None`). The accuracy budget is left unspecified (0).
    EmpiricalMean {
        h_tilde: Vector,
        indices: Option<Vec<usize>>,
    },
}

pub fn build_anchor(strategy: &AnchorStrategy, obj: &Objective, delta: f64) -> Result<Anchor> {
    match strategy {
        AnchorStrategy::Exact { h_tilde } => {
            check_feasible(obj, h_tilde)?;
            Anchor::new(h_tilde.clone(), obj.gradient(h_tilde)?, 0.0, delta)
        }
        AnchorStrategy::EmpiricalMean { h_tilde, indices } => {
            check_feasible(obj, h_tilde)?;
            let n = obj.n_examples();
            if n == 0 {
                return Err(Error::InvalidParameter(
                    "empirical-mean anchor needs an objective backed by examples".into(),
                ));
            }
            let g = match indices {
                Some(idx) if idx.is_empty() => {
                    return Err(Error::InvalidParameter(
                        "empirical-mean anchor over zero examples".into(),
                    ))
                }
                Some(idx) => obj.batch_gradient(h_tilde, idx)?,
                None => obj.batch_gradient(h_tilde, &(0..n).collect::<Vec<_>>())?,
            };
            Anchor::new(h_tilde.clone(), g, 0.0, delta)
        }
    }
}

fn check_feasible(obj: &Objective, h: &Vector) -> Result<()> {
    if obj.feasible().contains(h) {
        Ok(())
    } else {
        Err(Error::Domain("anchor point lies outside the feasible set".into()))
    }
}
