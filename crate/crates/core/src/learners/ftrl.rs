use crate::error::{check_dim, Error, Result};
use crate::geometry::{pairing, DualVector, FeasibleSet, Vector};

use super::{OnlineLearner, RegularizerSchedule, Round};

/// `argmin_{h∈ℋ} [(s/2)‖h‖² + ⟨θ, h⟩]`, which is the Euclidean projection of `−θ/s`.
pub fn ftrl_step(set: &FeasibleSet, strength: f64, accumulated: &DualVector) -> Result<Vector> {
    if !(strength > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "regularizer strength must be > 0, got {strength}"
        )));
    }
    check_dim(set.dim(), accumulated.dim())?;
    set.project(&accumulated.to_primal().scale(-1.0 / strength))
}

/// Follow-the-regularized-leader with quadratic regularizers.
#[derive(Debug, Clone)]
pub struct Ftrl {
    set: FeasibleSet,
    regularizers: RegularizerSchedule,
    accumulated: DualVector,
    h: Vector,
}

impl Ftrl {
    /// Starts at `h_1 = argmin_{h∈ℋ} ψ_1(h)`.
    pub fn new(set: FeasibleSet, regularizers: RegularizerSchedule) -> Result<Self> {
        regularizers.validate()?;
        let accumulated = DualVector::zeros(set.dim());
        let h = ftrl_step(&set, regularizers.strength(1), &accumulated)?;
        Ok(Self {
            set,
            regularizers,
            accumulated,
            h,
        })
    }

    /// `Σ α_i Ḡ_i` over the rounds seen so far.
    pub fn accumulated(&self) -> &DualVector {
        &self.accumulated
    }

    pub fn regularizers(&self) -> &RegularizerSchedule {
        &self.regularizers
    }
}

impl OnlineLearner for Ftrl {
    fn current(&self) -> &Vector {
        &self.h
    }

    fn step_size(&self, _t: usize) -> Option<f64> {
        None
    }

    fn update(&mut self, round: Round<'_>) -> Result<()> {
        self.accumulated.add_scaled(round.weight, round.feedback)?;
        self.h = ftrl_step(&self.set, self.regularizers.strength(round.t + 1), &self.accumulated)?;
        Ok(())
    }

    fn name(&self) -> &'static str {
        "ftrl"
    }
}

/// Both sides of the FTRL regret inequality at one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtrlRegretPoint {
    pub horizon: usize,
    pub regret: f64,
    pub bound: f64,
}

impl FtrlRegretPoint {
    pub fn slack(&self) -> f64 {
        self.bound - self.regret
    }
}

/// Evaluates, for every horizon `T = 1..=n`, the weighted linear regret
/// `Σ α_t⟨Ḡ_t, h_t − h⋆⟩` and its upper bound
///
/// `ψ_T(h⋆) − ψ_1(h_1) + Σ_t [ψ_t(h_{t+1}) − ψ_{t+1}(h_{t+1})]
///   + Σ_t [α_t²‖∇R(h̄_t)‖²/(2s_t) + α_t⟨∇R(h̄_t) − Ḡ_t, h_{t+1} − h_t⟩]`
///
/// with `ψ_{T+1} ≔ ψ_T`. Under that convention the last iterate `h_{T+1}`
/// of each horizon is re-derived with strength `s_T`, so its increment term
/// vanishes.
///
/// `iterates` holds `h_1, …, h_n` as produced by [`Ftrl`] under `regularizers`.
pub fn ftrl_regret_bound(
    set: &FeasibleSet,
    regularizers: &RegularizerSchedule,
    weights: &[f64],
    processed: &[DualVector],
    true_gradients: &[DualVector],
    iterates: &[Vector],
    h_star: &Vector,
) -> Result<Vec<FtrlRegretPoint>> {
    let n = weights.len();
    if processed.len() != n || true_gradients.len() != n || iterates.len() < n {
        return Err(Error::InvalidParameter(format!(
            "regret inputs disagree in length: {} weights, {} processed, {} true gradients, {} iterates",
            n,
            processed.len(),
            true_gradients.len(),
            iterates.len()
        )));
    }
    let mut out = Vec::with_capacity(n);
    let mut accumulated = DualVector::zeros(set.dim());
    let mut regret = 0.0;
    // terms for t < T, which do not depend on the horizon
    let mut settled = 0.0;
    let psi_1_h1 = regularizers.value(1, &iterates[0]);

    for t in 1..=n {
        let (a, g_bar, grad, h_t) = (
            weights[t - 1],
            &processed[t - 1],
            &true_gradients[t - 1],
            &iterates[t - 1],
        );
        regret += a * pairing(g_bar, &h_t.sub(h_star)?)?;
        accumulated.add_scaled(a, g_bar)?;

        let s_t = regularizers.strength(t);
        let grad_sq: f64 = grad.iter().map(|x| x * x).sum();
        let stability = a * a * grad_sq / (2.0 * s_t);
        let error_term = |next: &Vector| -> Result<f64> { Ok(a * pairing(&grad.sub(g_bar)?, &next.sub(h_t)?)?) };

        let last = ftrl_step(set, s_t, &accumulated)?;
        let bound = regularizers.value(t, h_star) - psi_1_h1 + settled + stability + error_term(&last)?;
        out.push(FtrlRegretPoint {
            horizon: t,
            regret,
            bound,
        });

        if t < n {
            let next = &iterates[t];
            settled += regularizers.value(t, next) - regularizers.value(t + 1, next) + stability + error_term(next)?;
        }
    }
    Ok(out)
}
