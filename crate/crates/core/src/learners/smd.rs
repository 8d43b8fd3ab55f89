use crate::error::{check_dim, Error, Result};
use crate::geometry::{clamp_to_entropy_domain, pairing, DualVector, FeasibleSet, MirrorMap, Vector};

use super::{OnlineLearner, Round, StepSchedule};

/// The two stages of one mirror-descent step.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorStep {
    /// `∇Φ(h_t) − βḠ_t`.
    pub dual_point: DualVector,
    /// `h'_t = (∇Φ)⁻¹(dual_point)`, before projection; `None` when it
    /// overflows (large entropy steps), which does not affect `next`.
    pub unconstrained: Option<Vector>,
    /// `h_{t+1}`, the Bregman projection of `h'_t` onto the set.
    pub next: Vector,
}

/// `argmin_{h∈ℋ} [⟨Ḡ, h⟩ + B_Φ(h; h_t)/β]`, computed as a dual step followed
/// by a Bregman projection. With the Euclidean map this is projected SGD.
pub fn smd_step(map: MirrorMap, set: &FeasibleSet, h: &Vector, beta: f64, g_bar: &DualVector) -> Result<MirrorStep> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step size must be finite and > 0, got {beta}"
        )));
    }
    check_dim(h.dim(), g_bar.dim())?;
    let mut dual_point = map.gradient(h)?;
    dual_point.add_scaled(-beta, g_bar)?;
    let unconstrained = map.inverse_gradient(&dual_point).ok();
    let next = match map {
        MirrorMap::Euclidean => set.project(&dual_point.to_primal())?,
        MirrorMap::NegativeEntropy => {
            // The entropy projection onto the simplex only rescales, so the
            // dual point may be shifted to keep exp() in range.
            let top = dual_point.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut shifted = Vector::new(dual_point.iter().map(|t| (t - top).exp()).collect())?;
            clamp_to_entropy_domain(&mut shifted);
            map.bregman_project(set, &shifted)?
        }
    };
    Ok(MirrorStep {
        dual_point,
        unconstrained,
        next,
    })
}

/// RHS − LHS of the per-step mirror-descent regret inequality
///
/// `⟨Ḡ_t, h_t − h⋆⟩ ≤ [B_Φ(h⋆;h_t) − B_Φ(h⋆;h_{t+1})]/β_t + (β_t/2s)‖∇R(h̄_t)‖*²
///   + ⟨∇R(h̄_t) − Ḡ_t, h_{t+1} − h_t⟩`.
#[allow(clippy::too_many_arguments)]
pub fn smd_regret_slack(
    map: MirrorMap,
    beta: f64,
    g_bar: &DualVector,
    true_gradient: &DualVector,
    h_t: &Vector,
    h_next: &Vector,
    h_star: &Vector,
) -> Result<f64> {
    let lhs = pairing(g_bar, &h_t.sub(h_star)?)?;
    let grad_norm = true_gradient.dual_norm(map.norm());
    let rhs = (map.bregman(h_star, h_t)? - map.bregman(h_star, h_next)?) / beta
        + beta / (2.0 * map.strong_convexity()) * grad_norm * grad_norm
        + pairing(&true_gradient.sub(g_bar)?, &h_next.sub(h_t)?)?;
    Ok(rhs - lhs)
}

/// Stochastic mirror descent.
#[derive(Debug, Clone)]
pub struct MirrorDescent {
    map: MirrorMap,
    set: FeasibleSet,
    steps: StepSchedule,
    h: Vector,
    last_step: Option<MirrorStep>,
}

impl MirrorDescent {
    pub fn new(map: MirrorMap, set: FeasibleSet, steps: StepSchedule, start: Vector) -> Result<Self> {
        steps.validate()?;
        check_dim(set.dim(), start.dim())?;
        if !set.contains(&start) {
            return Err(Error::Domain("starting point lies outside the feasible set".into()));
        }
        let mut h = start;
        if map == MirrorMap::NegativeEntropy {
            if !matches!(set, FeasibleSet::Simplex { .. }) {
                return Err(Error::InvalidParameter(
                    "the negative-entropy map is only supported on the simplex".into(),
                ));
            }
            clamp_to_entropy_domain(&mut h);
        }
        Ok(Self {
            map,
            set,
            steps,
            h,
            last_step: None,
        })
    }

    /// Projected SGD: the Euclidean map.
    pub fn sgd(set: FeasibleSet, steps: StepSchedule, start: Vector) -> Result<Self> {
        Self::new(MirrorMap::Euclidean, set, steps, start)
    }

    pub fn map(&self) -> MirrorMap {
        self.map
    }

    pub fn last_step(&self) -> Option<&MirrorStep> {
        self.last_step.as_ref()
    }
}

impl OnlineLearner for MirrorDescent {
    fn current(&self) -> &Vector {
        &self.h
    }

    fn step_size(&self, t: usize) -> Option<f64> {
        Some(self.steps.at(t))
    }

    fn update(&mut self, round: Round<'_>) -> Result<()> {
        let step = smd_step(self.map, &self.set, &self.h, self.steps.at(round.t), round.feedback)?;
        self.h = step.next.clone();
        self.last_step = Some(step);
        Ok(())
    }

    fn name(&self) -> &'static str {
        match self.map {
            MirrorMap::Euclidean => "sgd",
            MirrorMap::NegativeEntropy => "entropic-mirror-descent",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    fn g(x: &[f64]) -> DualVector {
        DualVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn euclidean_step_example() {
        let ball = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let step = smd_step(MirrorMap::Euclidean, &ball, &v(&[0.0, 0.0]), 1.0, &g(&[-4.0, 0.0])).unwrap();
        assert_eq!(step.dual_point.as_slice(), &[4.0, 0.0]);
        assert_eq!(step.next.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn entropy_step_example() {
        let simplex = FeasibleSet::simplex(2).unwrap();
        let step = smd_step(
            MirrorMap::NegativeEntropy,
            &simplex,
            &v(&[0.5, 0.5]),
            std::f64::consts::LN_2,
            &g(&[1.0, 0.0]),
        )
        .unwrap();
        assert!((step.next[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((step.next[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_step_matches_numeric_proximal_argmin() {
        // minimise ⟨g,h⟩ + KL(h‖h_t)/β over the 3-simplex on a fine grid
        let simplex = FeasibleSet::simplex(3).unwrap();
        let h_t = v(&[0.2, 0.5, 0.3]);
        let (beta, grad) = (0.7, g(&[0.4, -0.3, 1.1]));
        let step = smd_step(MirrorMap::NegativeEntropy, &simplex, &h_t, beta, &grad).unwrap();
        let objective =
            |h: &Vector| pairing(&grad, h).unwrap() + MirrorMap::NegativeEntropy.bregman(h, &h_t).unwrap() / beta;
        let best = objective(&step.next);
        let n = 400;
        for i in 1..n {
            for j in 1..(n - i) {
                let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
                let candidate = v(&[a, b, 1.0 - a - b]);
                assert!(objective(&candidate) >= best - 1e-12);
            }
        }
    }

    #[test]
    fn tiny_step_keeps_point() {
        let ball = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let h = v(&[0.3, -0.2]);
        let step = smd_step(MirrorMap::Euclidean, &ball, &h, 1e-300, &g(&[5.0, 5.0])).unwrap();
        assert_eq!(step.next, h);
        let simplex = FeasibleSet::simplex(2).unwrap();
        let h = v(&[0.25, 0.75]);
        let step = smd_step(MirrorMap::NegativeEntropy, &simplex, &h, 1e-300, &g(&[5.0, -5.0])).unwrap();
        for (a, b) in step.next.iter().zip(h.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn extreme_entropy_step_stays_in_domain() {
        let simplex = FeasibleSet::simplex(3).unwrap();
        let step = smd_step(
            MirrorMap::NegativeEntropy,
            &simplex,
            &v(&[0.3, 0.3, 0.4]),
            1e4,
            &g(&[1.0, 0.0, 2.0]),
        )
        .unwrap();
        assert!(step.next.iter().all(|&x| x > 0.0));
        assert!((step.next[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dual_relation_holds() {
        let simplex = FeasibleSet::simplex(3).unwrap();
        let h = v(&[0.2, 0.3, 0.5]);
        let grad = g(&[0.5, -1.0, 0.25]);
        let step = smd_step(MirrorMap::NegativeEntropy, &simplex, &h, 0.3, &grad).unwrap();
        let lhs = MirrorMap::NegativeEntropy
            .gradient(step.unconstrained.as_ref().unwrap())
            .unwrap();
        let rhs = MirrorMap::NegativeEntropy.gradient(&h).unwrap();
        for ((a, b), c) in lhs.iter().zip(grad.iter()).zip(rhs.iter()) {
            assert!((a + 0.3 * b - c).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_rejected_on_ball() {
        let ball = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let steps = StepSchedule::constant(0.1).unwrap();
        assert!(MirrorDescent::new(MirrorMap::NegativeEntropy, ball, steps, v(&[0.0, 0.0])).is_err());
    }
}
