//! Closed-form high-probability envelopes.
//!
//! Everything here is a pure function of the problem constants and the
//! weight/step sequences; audits compare these against measured quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::robust::check_confidence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Diameter `D` of the feasible set.
    pub diameter: f64,
    /// Noise level `σ` with `E‖G − ∇R‖*² ≤ σ²`.
    pub sigma: f64,
    /// Smoothness `λ`.
    pub smoothness: f64,
    pub delta: f64,
    /// `α_1, …, α_T`; the horizon is its length.
    pub weights: Vec<f64>,
    /// `β_1, …, β_T`, when a step-size method is involved.
    pub steps: Vec<f64>,
    /// `sup B_Φ(h; h')` over the feasible set.
    pub bregman_diameter: Option<f64>,
    /// Strong convexity `s` of the mirror map.
    pub strong_convexity: f64,
}

impl BoundInputs {
    /// Unit weights and a constant step over `horizon` rounds, Euclidean geometry
    /// (`D_Φ = 2D²`, `s = 1`).
    pub fn sgd(diameter: f64, sigma: f64, smoothness: f64, delta: f64, horizon: usize, beta: f64) -> Self {
        Self {
            diameter,
            sigma,
            smoothness,
            delta,
            weights: vec![1.0; horizon],
            steps: vec![beta; horizon],
            bregman_diameter: Some(2.0 * diameter * diameter),
            strong_convexity: 1.0,
        }
    }

    pub fn horizon(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_confidence(self.delta)?;
        for (name, v) in [
            ("diameter", self.diameter),
            ("sigma", self.sigma),
            ("smoothness", self.smoothness),
            ("strong_convexity", self.strong_convexity),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.weights.is_empty() {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.weights.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("weights must be finite and > 0".into()));
        }
        if !self.steps.is_empty() && self.steps.len() != self.weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} step sizes for horizon {}",
                self.steps.len(),
                self.weights.len()
            )));
        }
        if self.steps.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidParameter("step sizes must be finite and > 0".into()));
        }
        Ok(())
    }

    fn log_inv_delta(&self) -> f64 {
        (1.0 / self.delta).ln()
    }

    fn weight_stats(&self) -> (f64, f64, f64) {
        let sum = self.weights.iter().sum();
        let sum_sq = self.weights.iter().map(|a| a * a).sum();
        let max = self.weights.iter().cloned().fold(0.0, f64::max);
        (sum, sum_sq, max)
    }
}

/// `2Dσ√(2 ln δ⁻¹)·[α_{1:T}/√T + √(Σα_t²) + 2 max α_t]`.
pub fn q_delta(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let t = inputs.horizon() as f64;
    let (sum, sum_sq, max) = inputs.weight_stats();
    Ok(2.0
        * inputs.diameter
        * inputs.sigma
        * (2.0 * inputs.log_inv_delta()).sqrt()
        * (sum / t.sqrt() + sum_sq.sqrt() + 2.0 * max))
}

/// `2λD² ln δ⁻¹·[α_{1:T}/T + √(Σα_t²/T) + 2√2 max α_t]`.
pub fn r_delta(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let t = inputs.horizon() as f64;
    let (sum, sum_sq, max) = inputs.weight_stats();
    Ok(2.0
        * inputs.smoothness
        * inputs.diameter.powi(2)
        * inputs.log_inv_delta()
        * (sum / t + (sum_sq / t).sqrt() + 2.0 * std::f64::consts::SQRT_2 * max))
}

/// `2D²/(Tβ_T) + max{8Dσ√(2 ln δ⁻¹/T), 12λD² ln δ⁻¹/T}`, the envelope for
/// projected SGD with unit weights and `β_t ≤ 1/λ`.
pub fn sgd_excess_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    if inputs.weights.iter().any(|&a| a != 1.0) {
        return Err(Error::Precondition(
            "the SGD envelope requires unit weights alpha_t = 1".into(),
        ));
    }
    if inputs.steps.is_empty() {
        return Err(Error::Precondition(
            "the SGD envelope requires a step-size sequence".into(),
        ));
    }
    if let Some((t, b)) = inputs
        .steps
        .iter()
        .enumerate()
        .find(|(_, &b)| b * inputs.smoothness > 1.0 + 1e-12)
    {
        return Err(Error::Precondition(format!(
            "the SGD envelope requires beta_t <= 1/lambda; beta_{} = {b} exceeds 1/{}",
            t + 1,
            inputs.smoothness
        )));
    }
    let t = inputs.horizon() as f64;
    let d = inputs.diameter;
    let log_inv = inputs.log_inv_delta();
    let beta_last = inputs.steps[inputs.steps.len() - 1];
    let noise_branch = 8.0 * d * inputs.sigma * (2.0 * log_inv / t).sqrt();
    let smooth_branch = 12.0 * inputs.smoothness * d * d * log_inv / t;
    Ok(2.0 * d * d / (t * beta_last) + noise_branch.max(smooth_branch))
}

/// `(1/α_{1:T})[(α_T/β_T)D_Φ + max{q_δ, r_δ}]`, valid when
/// `α_t/α_{t−1} ≥ β_t/β_{t−1}` and `β_t ≤ s/λ`.
pub fn smd_excess_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let d_phi = inputs
        .bregman_diameter
        .ok_or_else(|| Error::InvalidParameter("the mirror-descent envelope needs a Bregman diameter".into()))?;
    if inputs.steps.is_empty() {
        return Err(Error::Precondition(
            "the mirror-descent envelope requires a step-size sequence".into(),
        ));
    }
    let steps = crate::learners::StepSchedule::Sequence {
        betas: inputs.steps.clone(),
    };
    steps.validate_against(&inputs.weights, inputs.strong_convexity, inputs.smoothness)?;
    let (sum, _, _) = inputs.weight_stats();
    let t = inputs.horizon();
    let leading = inputs.weights[t - 1] / inputs.steps[t - 1] * d_phi;
    Ok((leading + q_delta(inputs)?.max(r_delta(inputs)?)) / sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinParams {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Uniform bound on the increments `|V_t|`.
    pub bound: f64,
}

/// `√(2γ₁γ₂) + (√2/3)Bγ₁`: the deviation whose exceedance, jointly with the
/// conditional-variance sum staying below `γ₂`, has probability at most `e^{−γ₁}`.
pub fn bernstein_deviation(p: &BernsteinParams) -> Result<f64> {
    for (name, v) in [("gamma1", p.gamma1), ("gamma2", p.gamma2), ("bound", p.bound)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }
    Ok((2.0 * p.gamma1 * p.gamma2).sqrt() + std::f64::consts::SQRT_2 / 3.0 * p.bound * p.gamma1)
}

/// All envelopes for one set of inputs; entries whose preconditions fail are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub q_delta: f64,
    pub r_delta: f64,
    pub sgd_excess: Option<f64>,
    pub smd_excess: Option<f64>,
}

pub fn bound_report(inputs: &BoundInputs) -> Result<BoundReport> {
    Ok(BoundReport {
        q_delta: q_delta(inputs)?,
        r_delta: r_delta(inputs)?,
        sgd_excess: sgd_excess_bound(inputs).ok(),
        smd_excess: smd_excess_bound(inputs).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_INV: f64 = 0.36787944117144233;

    fn unit(t: usize, delta: f64) -> BoundInputs {
        BoundInputs::sgd(1.0, 1.0, 1.0, delta, t, 1.0)
    }

    #[test]
    fn q_delta_examples() {
        assert!((q_delta(&unit(4, E_INV)).unwrap() - 12.0 * 2f64.sqrt()).abs() < 1e-12);
        let mut quiet = unit(4, E_INV);
        quiet.sigma = 0.0;
        assert_eq!(q_delta(&quiet).unwrap(), 0.0);
        for t in [1, 7, 100, 2500] {
            let inputs = BoundInputs::sgd(1.7, 0.4, 1.0, 0.05, t, 1.0);
            let closed = 4.0 * 1.7 * 0.4 * (2.0 * 20f64.ln()).sqrt() * ((t as f64).sqrt() + 1.0);
            assert!((q_delta(&inputs).unwrap() - closed).abs() < 1e-10 * closed);
        }
    }

    #[test]
    fn r_delta_examples() {
        let want = 4.0 + 4.0 * 2f64.sqrt();
        assert!((r_delta(&unit(4, E_INV)).unwrap() - want).abs() < 1e-12);
        for t in [1, 9, 400] {
            let inputs = BoundInputs::sgd(2.0, 1.0, 0.5, 0.05, t, 1.0);
            let closed = 4.0 * 0.5 * 4.0 * 20f64.ln() * (1.0 + 2f64.sqrt());
            assert!((r_delta(&inputs).unwrap() - closed).abs() < 1e-10 * closed);
        }
        assert!(r_delta(&unit(4, 1.0 - 1e-12)).unwrap() < 1e-9);
    }

    #[test]
    fn sgd_bound_example() {
        let b = sgd_excess_bound(&unit(100, 0.05)).unwrap();
        let ln20 = 20f64.ln();
        let want = 0.02 + (8.0 * (2.0 * ln20 / 100.0).sqrt()).max(12.0 * ln20 / 100.0);
        assert!((b - want).abs() < 1e-12);
        assert!((b - 1.978).abs() < 1e-3);
    }

    #[test]
    fn sgd_bound_noiseless_branch_and_limit() {
        let mut inputs = unit(100, 0.05);
        inputs.sigma = 0.0;
        let want = 0.02 + 12.0 * 20f64.ln() / 100.0;
        assert!((sgd_excess_bound(&inputs).unwrap() - want).abs() < 1e-12);
        let near = sgd_excess_bound(&unit(10_000, 0.05)).unwrap();
        let far = sgd_excess_bound(&unit(1_000_000, 0.05)).unwrap();
        assert!(far < near / 9.0 && far < 0.02);
    }

    #[test]
    fn sgd_bound_rejects_bad_hypotheses() {
        let mut inputs = unit(10, 0.05);
        inputs.weights[3] = 2.0;
        assert!(matches!(sgd_excess_bound(&inputs), Err(Error::Precondition(_))));
        let inputs = BoundInputs::sgd(1.0, 1.0, 2.0, 0.05, 10, 1.0);
        assert!(matches!(sgd_excess_bound(&inputs), Err(Error::Precondition(_))));
    }

    #[test]
    fn smd_bound_reduces_under_unit_weights() {
        let inputs = BoundInputs::sgd(1.5, 0.7, 1.0, 0.05, 200, 0.8);
        let t = 200.0;
        let want = (2.0 * 1.5 * 1.5 / 0.8 + q_delta(&inputs).unwrap().max(r_delta(&inputs).unwrap())) / t;
        assert!((smd_excess_bound(&inputs).unwrap() - want).abs() < 1e-12);
        // singleton set
        let mut point = inputs.clone();
        point.bregman_diameter = Some(0.0);
        let want = q_delta(&inputs).unwrap().max(r_delta(&inputs).unwrap()) / t;
        assert!((smd_excess_bound(&point).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn smd_bound_checks_schedule() {
        let mut inputs = BoundInputs::sgd(1.0, 1.0, 1.0, 0.05, 3, 0.5);
        inputs.steps = vec![0.1, 0.5, 0.5];
        assert!(smd_excess_bound(&inputs).is_err());
        inputs.weights = vec![1.0, 5.0, 5.0];
        assert!(smd_excess_bound(&inputs).is_ok());
    }

    #[test]
    fn bernstein_examples() {
        let p = |g1, g2, b| BernsteinParams {
            gamma1: g1,
            gamma2: g2,
            bound: b,
        };
        assert!((bernstein_deviation(&p(1.0, 2.0, 3.0)).unwrap() - (2.0 + 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(bernstein_deviation(&p(2.0, 4.0, 0.0)).unwrap(), 4.0);
        assert_eq!(bernstein_deviation(&p(0.0, 4.0, 7.0)).unwrap(), 0.0);
    }
}
