//! Anytime online-to-batch conversion.
//!
//! Gradients are queried at the weighted average `h̄_t` of the learner's
//! iterates, optionally truncated, and fed back to the learner. The trace
//! keeps everything the post-hoc audits need.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{pairing, DualVector, Norm, Vector};
use crate::learners::{OnlineLearner, Round};
use crate::objectives::Objective;
use crate::oracles::GradientOracle;
use crate::robust::{process, Anchor, ThresholdSchedule, TruncationStats};

/// Running weighted average of the ancillary iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct AnytimeState {
    h: Vector,
    h_bar: Vector,
    weights: Vec<f64>,
    weight_sum: f64,
}

impl AnytimeState {
    /// `h̄_1 = h_1`.
    pub fn new(h1: Vector, alpha1: f64) -> Result<Self> {
        check_weight(alpha1)?;
        Ok(Self {
            h_bar: h1.clone(),
            h: h1,
            weights: vec![alpha1],
            weight_sum: alpha1,
        })
    }

    pub fn h(&self) -> &Vector {
        &self.h
    }

    pub fn h_bar(&self) -> &Vector {
        &self.h_bar
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    /// Folds `h_{t+1}` with weight `α_{t+1}` into the average and returns `h̄_{t+1}`.
    pub fn weighting_update(&mut self, h_next: Vector, alpha_next: f64) -> Result<&Vector> {
        check_weight(alpha_next)?;
        check_dim(self.h.dim(), h_next.dim())?;
        let total = self.weight_sum + alpha_next;
        let (keep, take) = (self.weight_sum / total, alpha_next / total);
        let averaged: Vec<f64> = self
            .h_bar
            .iter()
            .zip(h_next.iter())
            .map(|(b, h)| keep * b + take * h)
            .collect();
        self.h_bar = Vector::new(averaged)?;
        self.h = h_next;
        self.weights.push(alpha_next);
        self.weight_sum = total;
        Ok(&self.h_bar)
    }
}

fn check_weight(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "weights must be finite and > 0, got {alpha}"
        )))
    }
}

/// Weight sequence `α_1, α_2, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weights {
    Constant {
        value: f64,
    },
    /// Explicit values; past the end the last value repeats, which only ever
    /// affects the look-ahead weight of the final round.
    Explicit {
        values: Vec<f64>,
    },
}

impl Weights {
    pub fn ones() -> Self {
        Self::Constant { value: 1.0 }
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("explicit weight sequence is empty".into()));
        }
        values.iter().try_for_each(|&a| check_weight(a))?;
        Ok(Self::Explicit { values })
    }

    pub fn at(&self, t: usize) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Explicit { values } => values[(t.max(1) - 1).min(values.len() - 1)],
        }
    }
}

/// Where stochastic gradients are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryPoint {
    /// The weighted average `h̄_t` (anytime feedback).
    Main,
    /// The learner's own iterate `h_t` (classical feedback).
    Ancillary,
}

/// Post-processing applied to raw gradients.
#[derive(Debug, Clone, PartialEq)]
pub enum Feedback {
    Raw,
    Truncated {
        anchor: Anchor,
        schedule: ThresholdSchedule,
        norm: Norm,
    },
}

/// Everything observed in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub h: Vector,
    pub h_bar: Vector,
    pub raw: DualVector,
    pub processed: DualVector,
    pub threshold: Option<f64>,
    pub truncated: bool,
    pub weight: f64,
    pub step_size: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<StepRecord>,
    /// `h_{T+1}`, the learner's response to the last round.
    pub final_ancillary: Vector,
    /// `h̄_T`, the conversion's output.
    pub output: Vector,
    pub truncation: TruncationStats,
}

impl RunTrace {
    pub fn horizon(&self) -> usize {
        self.records.len()
    }

    pub fn weight_sum(&self) -> f64 {
        self.records.iter().map(|r| r.weight).sum()
    }

    /// `h_1, …, h_T, h_{T+1}`.
    pub fn ancillary_iterates(&self) -> Vec<Vector> {
        self.records
            .iter()
            .map(|r| r.h.clone())
            .chain(std::iter::once(self.final_ancillary.clone()))
            .collect()
    }
}

/// Step-at-a-time driver of the conversion loop.
pub struct Conversion<'a> {
    obj: &'a Objective,
    oracle: &'a mut dyn GradientOracle,
    learner: &'a mut dyn OnlineLearner,
    feedback: Feedback,
    query: QueryPoint,
    weights: Weights,
    state: AnytimeState,
    stats: TruncationStats,
    t: usize,
}

impl<'a> Conversion<'a> {
    pub fn new(
        obj: &'a Objective,
        oracle: &'a mut dyn GradientOracle,
        learner: &'a mut dyn OnlineLearner,
        feedback: Feedback,
        query: QueryPoint,
        weights: Weights,
    ) -> Result<Self> {
        let h1 = learner.current().clone();
        check_dim(obj.dim(), h1.dim())?;
        if !obj.feasible().contains(&h1) {
            return Err(Error::Domain("initial iterate lies outside the feasible set".into()));
        }
        if let Feedback::Truncated { anchor, .. } = &feedback {
            check_dim(obj.dim(), anchor.g_tilde.dim())?;
        }
        let state = AnytimeState::new(h1, weights.at(1))?;
        Ok(Self {
            obj,
            oracle,
            learner,
            feedback,
            query,
            weights,
            state,
            stats: TruncationStats::default(),
            t: 0,
        })
    }

    /// Rounds completed so far.
    pub fn rounds(&self) -> usize {
        self.t
    }

    /// `h̄_t` of the latest round (`h̄_1 = h_1` before any round).
    pub fn output(&self) -> &Vector {
        self.state.h_bar()
    }

    pub fn truncation(&self) -> &TruncationStats {
        &self.stats
    }

    pub fn learner(&self) -> &dyn OnlineLearner {
        &*self.learner
    }

    /// Replaces the truncation anchor, keeping the threshold rule.
    pub fn set_anchor(&mut self, new_anchor: Anchor) -> Result<()> {
        match &mut self.feedback {
            Feedback::Truncated { anchor, .. } => {
                check_dim(anchor.g_tilde.dim(), new_anchor.g_tilde.dim())?;
                *anchor = new_anchor;
                Ok(())
            }
            Feedback::Raw => Err(Error::InvalidParameter(
                "no anchor to replace without truncation".into(),
            )),
        }
    }

    /// Runs round `t = rounds() + 1`: query, process, learner update.
    pub fn step(&mut self) -> Result<StepRecord> {
        let t = self.t + 1;
        if t > 1 {
            let h_t = self.learner.current().clone();
            self.state.weighting_update(h_t, self.weights.at(t))?;
        }
        let h = self.state.h().clone();
        let h_bar = self.state.h_bar().clone();
        let at = match self.query {
            QueryPoint::Main => &h_bar,
            QueryPoint::Ancillary => &h,
        };
        let raw = self.oracle.query(self.obj, at, t)?;
        let (processed, threshold, truncated) = match &self.feedback {
            Feedback::Raw => (raw.clone(), None, false),
            Feedback::Truncated { anchor, schedule, norm } => {
                let c = schedule.threshold_at(at, anchor, *norm)?;
                let (g, cut) = process(&raw, anchor, c, *norm)?;
                (g, Some(c), cut)
            }
        };
        if threshold.is_some() {
            self.stats.record(truncated);
        }
        let weight = self.weights.at(t);
        let step_size = self.learner.step_size(t);
        self.learner.update(Round {
            t,
            weight,
            next_weight: self.weights.at(t + 1),
            feedback: &processed,
        })?;
        self.t = t;
        Ok(StepRecord {
            t,
            h,
            h_bar,
            raw,
            processed,
            threshold,
            truncated,
            weight,
            step_size,
        })
    }

    pub fn finish(self, records: Vec<StepRecord>) -> RunTrace {
        RunTrace {
            records,
            final_ancillary: self.learner.current().clone(),
            output: self.state.h_bar().clone(),
            truncation: self.stats,
        }
    }
}

/// Runs `horizon` rounds and returns the full trace; the output is `h̄_T`.
pub fn run(
    obj: &Objective,
    oracle: &mut dyn GradientOracle,
    learner: &mut dyn OnlineLearner,
    feedback: Feedback,
    weights: Weights,
    horizon: usize,
) -> Result<RunTrace> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let mut conv = Conversion::new(obj, oracle, learner, feedback, QueryPoint::Main, weights)?;
    let mut records = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        records.push(conv.step()?);
    }
    Ok(conv.finish(records))
}

/// `Σ α_t⟨Ḡ_t, h_t − h⋆⟩`.
pub fn regret(trace: &RunTrace, h_star: &Vector) -> Result<f64> {
    trace.records.iter().try_fold(0.0, |acc, r| {
        Ok(acc + r.weight * pairing(&r.processed, &r.h.sub(h_star)?)?)
    })
}

/// Both sides of the anytime identity and the terms of the regret decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnytimeAudit {
    /// `R(h̄_T) − R(h⋆)`.
    pub lhs: f64,
    /// `(1/α_{1:T})[Σα_t(⟨∇R(h̄_t), h_t − h⋆⟩ − B_R(h⋆;h̄_t)) − Σ_{t<T} α_{1:t}B_R(h̄_t;h̄_{t+1})]`.
    pub rhs: f64,
    pub regret: f64,
    /// `Σ α_t⟨Ḡ_t − ∇R(h̄_t), h⋆ − h_t⟩`.
    pub gradient_error_sum: f64,
    /// `Σ α_t B_R(h⋆;h̄_t) + Σ_{t<T} α_{1:t}B_R(h̄_t;h̄_{t+1})`.
    pub bregman_sum: f64,
    /// `(1/α_{1:T})[regret + gradient_error_sum − bregman_sum]`.
    pub decomposition: f64,
    pub weight_sum: f64,
}

impl AnytimeAudit {
    pub fn identity_gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

pub fn anytime_identity_audit(trace: &RunTrace, obj: &Objective, h_star: &Vector) -> Result<AnytimeAudit> {
    let records = &trace.records;
    if records.is_empty() {
        return Err(Error::InvalidParameter("cannot audit an empty trace".into()));
    }
    let mut linear = 0.0;
    let mut regret = 0.0;
    let mut error_sum = 0.0;
    let mut bregman_sum = 0.0;
    let mut weight_sum = 0.0;
    for (i, r) in records.iter().enumerate() {
        let grad = obj.gradient(&r.h_bar)?;
        let gap = r.h.sub(h_star)?;
        linear += r.weight * pairing(&grad, &gap)?;
        regret += r.weight * pairing(&r.processed, &gap)?;
        error_sum += r.weight * pairing(&r.processed.sub(&grad)?, &h_star.sub(&r.h)?)?;
        bregman_sum += r.weight * obj.bregman(h_star, &r.h_bar)?;
        weight_sum += r.weight;
        if let Some(next) = records.get(i + 1) {
            bregman_sum += weight_sum * obj.bregman(&r.h_bar, &next.h_bar)?;
        }
    }
    let last = &records[records.len() - 1];
    Ok(AnytimeAudit {
        lhs: obj.value(&last.h_bar)? - obj.value(h_star)?,
        rhs: (linear - bregman_sum) / weight_sum,
        regret,
        gradient_error_sum: error_sum,
        bregman_sum,
        decomposition: (regret + error_sum - bregman_sum) / weight_sum,
        weight_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FeasibleSet;
    use crate::learners::{MirrorDescent, StepSchedule};
    use crate::oracles::{NoiseSpec, SyntheticOracle};
    use crate::robust::{build_anchor, AnchorStrategy};

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    fn quadratic() -> Objective {
        Objective::diagonal_quadratic(
            &[1.0, 0.5],
            v(&[0.8, -0.3]),
            FeasibleSet::centered_ball(2, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn weighting_examples() {
        let mut s = AnytimeState::new(v(&[0.0]), 1.0).unwrap();
        s.weighting_update(v(&[3.0]), 1.0).unwrap();
        assert_eq!(s.weighting_update(v(&[6.0]), 1.0).unwrap().as_slice(), &[3.0]);

        let mut s = AnytimeState::new(v(&[0.0]), 1.0).unwrap();
        assert_eq!(s.weighting_update(v(&[3.0]), 2.0).unwrap().as_slice(), &[2.0]);

        let mut s = AnytimeState::new(v(&[0.0]), 1.0).unwrap();
        let h = s.weighting_update(v(&[5.0]), 1e12).unwrap()[0];
        assert!((h - 5.0).abs() < 1e-10);

        assert!(s.weighting_update(v(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn single_round_keeps_initial_point() {
        let obj = quadratic();
        let mut oracle = SyntheticOracle::new(NoiseSpec::zero(), 0).unwrap();
        let steps = StepSchedule::constant(1.0).unwrap();
        let mut learner = MirrorDescent::sgd(obj.feasible().clone(), steps, v(&[0.1, 0.1])).unwrap();
        let trace = run(&obj, &mut oracle, &mut learner, Feedback::Raw, Weights::ones(), 1).unwrap();
        assert_eq!(trace.horizon(), 1);
        assert_eq!(trace.output, v(&[0.1, 0.1]));
        assert_eq!(trace.records[0].h_bar, trace.records[0].h);
    }

    #[test]
    fn matches_straight_line_anytime_gradient_descent() {
        let obj = quadratic();
        let set = obj.feasible().clone();
        let h1 = v(&[-0.5, 0.5]);
        let anchor = build_anchor(&AnchorStrategy::Exact { h_tilde: h1.clone() }, &obj, 0.05).unwrap();
        let feedback = Feedback::Truncated {
            anchor,
            schedule: ThresholdSchedule::constant(1e9).unwrap(),
            norm: Norm::L2,
        };
        let mut oracle = SyntheticOracle::new(NoiseSpec::zero(), 0).unwrap();
        let mut learner = MirrorDescent::sgd(set, StepSchedule::constant(0.5).unwrap(), h1.clone()).unwrap();
        let trace = run(&obj, &mut oracle, &mut learner, feedback, Weights::ones(), 30).unwrap();
        assert_eq!(trace.truncation.truncated_count(), 0);

        // independent loop on raw arrays
        let (a, b) = ([1.0, 0.5], [0.8, -0.3]);
        let mut h = [-0.5, 0.5];
        let mut sum = h;
        let mut h_bar = h;
        for t in 1..=30 {
            let rec = &trace.records[t - 1];
            for i in 0..2 {
                assert!((rec.h_bar[i] - h_bar[i]).abs() < 1e-12);
                assert!((rec.h[i] - h[i]).abs() < 1e-12);
            }
            let g = [a[0] * h_bar[0] - b[0], a[1] * h_bar[1] - b[1]];
            let mut next = [h[0] - 0.5 * g[0], h[1] - 0.5 * g[1]];
            let norm = (next[0] * next[0] + next[1] * next[1]).sqrt();
            if norm > 1.0 {
                next = [next[0] / norm, next[1] / norm];
            }
            h = next;
            for i in 0..2 {
                sum[i] += h[i];
                h_bar[i] = sum[i] / (t + 1) as f64;
            }
        }
    }

    #[test]
    fn constant_weights_give_arithmetic_mean() {
        let obj = quadratic();
        let noise = NoiseSpec::new(crate::oracles::NoiseFamily::Gaussian, 0.5).unwrap();
        let mut oracle = SyntheticOracle::new(noise, 3).unwrap();
        let mut learner = MirrorDescent::sgd(
            obj.feasible().clone(),
            StepSchedule::constant(0.3).unwrap(),
            v(&[0.0, 0.0]),
        )
        .unwrap();
        let trace = run(&obj, &mut oracle, &mut learner, Feedback::Raw, Weights::ones(), 40).unwrap();
        let mean: Vec<f64> = (0..2)
            .map(|i| trace.records.iter().map(|r| r.h[i]).sum::<f64>() / 40.0)
            .collect();
        for (a, b) in trace.output.iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn regret_examples() {
        let dual = |x: &[f64]| DualVector::new(x.to_vec()).unwrap();
        let record = |t, h: Vector, g: DualVector| StepRecord {
            t,
            h_bar: h.clone(),
            h,
            raw: g.clone(),
            processed: g,
            threshold: None,
            truncated: false,
            weight: 1.0,
            step_size: None,
        };
        let trace = RunTrace {
            records: vec![
                record(1, v(&[0.0, 0.0]), dual(&[1.0, 0.0])),
                record(2, v(&[1.0, 0.0]), dual(&[0.0, 1.0])),
            ],
            final_ancillary: v(&[0.0, 0.0]),
            output: v(&[0.5, 0.0]),
            truncation: TruncationStats::default(),
        };
        assert_eq!(regret(&trace, &v(&[0.0, 0.0])).unwrap(), 0.0);

        let fixed = v(&[0.5, -0.5]);
        let still = RunTrace {
            records: vec![
                record(1, fixed.clone(), dual(&[3.0, 1.0])),
                record(2, fixed.clone(), dual(&[-2.0, 7.0])),
            ],
            final_ancillary: fixed.clone(),
            output: fixed.clone(),
            truncation: TruncationStats::default(),
        };
        assert_eq!(regret(&still, &fixed).unwrap(), 0.0);
    }

    #[test]
    fn identity_at_horizon_one() {
        let obj = quadratic();
        let mut oracle = SyntheticOracle::new(NoiseSpec::zero(), 0).unwrap();
        let mut learner = MirrorDescent::sgd(
            obj.feasible().clone(),
            StepSchedule::constant(0.3).unwrap(),
            v(&[0.2, 0.6]),
        )
        .unwrap();
        let trace = run(&obj, &mut oracle, &mut learner, Feedback::Raw, Weights::ones(), 1).unwrap();
        let h_star = v(&[0.7, -0.1]);
        let audit = anytime_identity_audit(&trace, &obj, &h_star).unwrap();
        let direct = obj.value(&v(&[0.2, 0.6])).unwrap() - obj.value(&h_star).unwrap();
        assert!((audit.lhs - direct).abs() < 1e-15);
        assert!(audit.identity_gap() < 1e-14);
    }

    #[test]
    fn identity_with_linear_objective() {
        let set = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let obj = Objective::diagonal_quadratic(&[0.0, 0.0], v(&[0.3, -0.7]), set.clone()).unwrap();
        let mut oracle =
            SyntheticOracle::new(NoiseSpec::new(crate::oracles::NoiseFamily::Gaussian, 1.0).unwrap(), 1).unwrap();
        let mut learner = MirrorDescent::sgd(set, StepSchedule::constant(0.2).unwrap(), v(&[0.0, 0.0])).unwrap();
        let weights = Weights::explicit(vec![0.5, 1.5, 1.0, 2.0, 0.25]).unwrap();
        let trace = run(&obj, &mut oracle, &mut learner, Feedback::Raw, weights, 5).unwrap();
        let h_star = v(&[0.3, -0.7]).scale(1.0 / (0.58f64).sqrt());
        let audit = anytime_identity_audit(&trace, &obj, &h_star).unwrap();
        assert_eq!(audit.bregman_sum, 0.0);
        let b = DualVector::new(vec![-0.3, 0.7]).unwrap();
        let collapsed: f64 = trace
            .records
            .iter()
            .map(|r| r.weight * pairing(&b, &r.h.sub(&h_star).unwrap()).unwrap())
            .sum::<f64>()
            / audit.weight_sum;
        assert!((audit.rhs - collapsed).abs() < 1e-14);
        assert!(audit.identity_gap() < 1e-12);
    }
}
