use crate::error::Result;
use crate::geometry::{DualVector, FeasibleSet, Vector};

use super::ftrl::ftrl_step;
use super::{OnlineLearner, RegularizerSchedule, Round};

/// `argmin_{h∈ℋ} [α_{t+1}⟨hint, h⟩ + ⟨θ, h⟩ + (s/2)‖h‖²]`: the FTRL
/// minimiser with the weighted hint folded into the accumulated dual vector `θ`.
pub fn aoftrl_step(
    set: &FeasibleSet,
    strength: f64,
    accumulated: &DualVector,
    next_weight: f64,
    hint: &DualVector,
) -> Result<Vector> {
    let mut optimistic = accumulated.clone();
    optimistic.add_scaled(next_weight, hint)?;
    ftrl_step(set, strength, &optimistic)
}

/// Optimistic FTRL whose hint for the next round is the latest processed gradient.
#[derive(Debug, Clone)]
pub struct OptimisticFtrl {
    set: FeasibleSet,
    regularizers: RegularizerSchedule,
    accumulated: DualVector,
    hint: DualVector,
    h: Vector,
}

impl OptimisticFtrl {
    /// Starts from the zero hint, so `h_1 = argmin_{h∈ℋ} ψ_1(h)`.
    pub fn new(set: FeasibleSet, regularizers: RegularizerSchedule) -> Result<Self> {
        regularizers.validate()?;
        let zero = DualVector::zeros(set.dim());
        let h = aoftrl_step(&set, regularizers.strength(1), &zero, 1.0, &zero)?;
        Ok(Self {
            set,
            regularizers,
            accumulated: zero.clone(),
            hint: zero,
            h,
        })
    }

    pub fn accumulated(&self) -> &DualVector {
        &self.accumulated
    }

    pub fn hint(&self) -> &DualVector {
        &self.hint
    }
}

impl OnlineLearner for OptimisticFtrl {
    fn current(&self) -> &Vector {
        &self.h
    }

    fn step_size(&self, _t: usize) -> Option<f64> {
        None
    }

    fn update(&mut self, round: Round<'_>) -> Result<()> {
        self.accumulated.add_scaled(round.weight, round.feedback)?;
        self.hint = round.feedback.clone();
        self.h = aoftrl_step(
            &self.set,
            self.regularizers.strength(round.t + 1),
            &self.accumulated,
            round.next_weight,
            &self.hint,
        )?;
        Ok(())
    }

    fn name(&self) -> &'static str {
        "optimistic-ftrl"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pairing;

    fn g(x: &[f64]) -> DualVector {
        DualVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn zero_hint_is_plain_ftrl() {
        let ball = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let theta = g(&[0.7, -2.0]);
        let zero = DualVector::zeros(2);
        assert_eq!(
            aoftrl_step(&ball, 1.5, &theta, 3.0, &zero).unwrap(),
            ftrl_step(&ball, 1.5, &theta).unwrap()
        );
    }

    #[test]
    fn hint_only_example() {
        let ball = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let h = aoftrl_step(&ball, 1.0, &DualVector::zeros(2), 1.0, &g(&[1.0, 0.0])).unwrap();
        assert_eq!(h.as_slice(), &[-1.0, 0.0]);
    }

    #[test]
    fn perfect_hint_does_not_lose_to_plain_ftrl() {
        let ball = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let s = 4.0;
        let losses = [g(&[1.0, 0.0]), g(&[0.0, 1.0]), g(&[-1.0, 1.0])];
        let total = |hinted: bool| -> f64 {
            let mut theta = DualVector::zeros(2);
            let mut h = if hinted {
                aoftrl_step(&ball, s, &theta, 1.0, &losses[0]).unwrap()
            } else {
                ftrl_step(&ball, s, &theta).unwrap()
            };
            let mut sum = 0.0;
            for t in 0..losses.len() {
                sum += pairing(&losses[t], &h).unwrap();
                theta.add_scaled(1.0, &losses[t]).unwrap();
                h = match (hinted, losses.get(t + 1)) {
                    (true, Some(next)) => aoftrl_step(&ball, s, &theta, 1.0, next).unwrap(),
                    _ => ftrl_step(&ball, s, &theta).unwrap(),
                };
            }
            sum
        };
        assert!(total(true) <= total(false));
    }

    #[test]
    fn learner_uses_latest_feedback_as_hint() {
        let ball = FeasibleSet::centered_ball(2, 10.0).unwrap();
        let regs = RegularizerSchedule::Constant { strength: 2.0 };
        let mut learner = OptimisticFtrl::new(ball, regs).unwrap();
        assert_eq!(learner.current().as_slice(), &[0.0, 0.0]);
        let fb = g(&[1.0, -1.0]);
        learner
            .update(Round {
                t: 1,
                weight: 1.0,
                next_weight: 3.0,
                feedback: &fb,
            })
            .unwrap();
        // θ = (1,−1); optimistic θ + 3·(1,−1) = (4,−4); h = −θ'/2
        assert_eq!(learner.current().as_slice(), &[-2.0, 2.0]);
        assert_eq!(learner.hint(), &fb);
    }
}
