//! Multi-trial logistic-regression benchmark comparing classical averaged SGD
//! with anytime feedback, with and without truncation.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conversion::{Conversion, Feedback, QueryPoint, Weights};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{FeasibleSet, Norm, Vector};
use crate::learners::{MirrorDescent, StepSchedule};
use crate::objectives::Objective;
use crate::oracles::{derive_seed, MiniBatchOracle};
use crate::robust::{build_anchor, AnchorStrategy, ThresholdSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Gradients at the SGD iterate, running average reported.
    #[serde(rename = "sgd-ave")]
    SgdAve,
    /// Gradients at the running average, no truncation.
    #[serde(rename = "anytime-sgd")]
    AnytimeSgd,
    /// Gradients at the running average, truncated around an anchor.
    #[serde(rename = "anytime-robust-sgd")]
    AnytimeRobustSgd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::SgdAve, Method::AnytimeSgd, Method::AnytimeRobustSgd];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::SgdAve => "sgd-ave",
            Self::AnytimeSgd => "anytime-sgd",
            Self::AnytimeRobustSgd => "anytime-robust-sgd",
        }
    }

    fn seed_tag(&self) -> u64 {
        match self {
            Self::SgdAve => 1,
            Self::AnytimeSgd => 2,
            Self::AnytimeRobustSgd => 3,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown method '{s}'; expected one of sgd-ave, anytime-sgd, anytime-robust-sgd"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub trials: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub delta: f64,
    /// Constant step size; `2/√n_train` when `None`.
    pub step_size: Option<f64>,
    /// Initial weights are drawn uniformly from `[−init_range, init_range]`.
    pub init_range: f64,
    pub train_fraction: f64,
    pub seed: u64,
    /// Re-anchor the truncation at the current average every this many epochs.
    pub anchor_refresh_epochs: Option<usize>,
    /// Fill `wall_time_ms`; off by default so outputs are reproducible byte for byte.
    pub record_timing: bool,
    /// Radius of the origin-centred ball the weights are confined to.
    pub radius: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            trials: 10,
            epochs: 5,
            batch_size: 8,
            delta: 0.05,
            step_size: None,
            init_range: 0.05,
            train_fraction: 0.8,
            seed: 0,
            anchor_refresh_epochs: None,
            record_timing: false,
            radius: 1e3,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidParameter(m));
        if self.methods.is_empty() {
            return fail("at least one method is required".into());
        }
        if self.trials == 0 || self.epochs == 0 || self.batch_size == 0 {
            return fail("trials, epochs and batch size must all be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            ));
        }
        if let Some(b) = self.step_size {
            if !(b > 0.0 && b.is_finite()) {
                return fail(format!("step size must be > 0, got {b}"));
            }
        }
        if !(self.init_range >= 0.0 && self.init_range.is_finite() && self.radius > 0.0) {
            return fail("init range must be >= 0 and the radius > 0".into());
        }
        if self.anchor_refresh_epochs == Some(0) {
            return fail("anchor refresh interval must be at least 1 epoch".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub trial: usize,
    pub epoch: usize,
    pub method: Method,
    pub train_loss: f64,
    pub test_loss: f64,
    pub truncation_rate: f64,
    pub wall_time_ms: u64,
}

/// One (trial, method) run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub records: Vec<ResultRecord>,
    /// Optimizer steps taken.
    pub steps: usize,
}

/// Train/test split sizes `(⌊f·n⌋, n − ⌊f·n⌋)`.
pub fn split_sizes(n: usize, train_fraction: f64) -> (usize, usize) {
    let train = (train_fraction * n as f64).floor() as usize;
    (train, n - train)
}

pub fn run_trial(config: &ExperimentConfig, data: &Dataset, trial: usize, method: Method) -> Result<TrialRun> {
    config.validate()?;
    let seed = derive_seed(config.seed, &[trial as u64, method.seed_tag()]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (n_train, n_test) = split_sizes(data.len(), config.train_fraction);
    if n_train == 0 || n_test == 0 {
        return Err(Error::InvalidParameter(format!(
            "{} examples leave an empty train or test split",
            data.len()
        )));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let train = Arc::new(data.subset(&order[..n_train])?);
    let test = Arc::new(data.subset(&order[n_train..])?);

    let dim = data.model_dim();
    let ball = FeasibleSet::centered_ball(dim, config.radius)?;
    let train_obj = Objective::multiclass_logistic(train, ball.clone())?;
    let test_obj = Objective::multiclass_logistic(test, ball.clone())?;

    let h1 = ball.project(&Vector::new(
        (0..dim)
            .map(|_| rng.random_range(-config.init_range..=config.init_range))
            .collect(),
    )?)?;
    let beta = config.step_size.unwrap_or(2.0 / (n_train as f64).sqrt());
    let mut learner = MirrorDescent::sgd(ball, StepSchedule::constant(beta)?, h1.clone())?;
    let mut oracle = MiniBatchOracle::new(config.batch_size, true, rng.random())?;

    let (query, feedback) = match method {
        Method::SgdAve => (QueryPoint::Ancillary, Feedback::Raw),
        Method::AnytimeSgd => (QueryPoint::Main, Feedback::Raw),
        Method::AnytimeRobustSgd => {
            let anchor = build_anchor(
                &AnchorStrategy::EmpiricalMean {
                    h_tilde: h1,
                    indices: None,
                },
                &train_obj,
                config.delta,
            )?;
            let schedule = ThresholdSchedule::heuristic(n_train, config.delta)?;
            (
                QueryPoint::Main,
                Feedback::Truncated {
                    anchor,
                    schedule,
                    norm: Norm::L2,
                },
            )
        }
    };

    let steps_per_epoch = n_train.div_ceil(config.batch_size);
    let started = Instant::now();
    let mut conv = Conversion::new(&train_obj, &mut oracle, &mut learner, feedback, query, Weights::ones())?;
    let mut records = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let mut truncated = 0usize;
        for _ in 0..steps_per_epoch {
            truncated += conv.step()?.truncated as usize;
        }
        let model = conv.output();
        let train_loss = train_obj.value(model)?;
        let test_loss = test_obj.value(model)?;
        if !train_loss.is_finite() || !test_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                trial,
                epoch,
                train_loss,
                test_loss,
            });
        }
        records.push(ResultRecord {
            trial,
            epoch,
            method,
            train_loss,
            test_loss,
            truncation_rate: truncated as f64 / steps_per_epoch as f64,
            wall_time_ms: if config.record_timing {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
        });
        if method == Method::AnytimeRobustSgd {
            if let Some(k) = config.anchor_refresh_epochs {
                if epoch % k == 0 && epoch < config.epochs {
                    let h_tilde = conv.output().clone();
                    let anchor = build_anchor(
                        &AnchorStrategy::EmpiricalMean { h_tilde, indices: None },
                        &train_obj,
                        config.delta,
                    )?;
                    conv.set_anchor(anchor)?;
                }
            }
        }
    }
    let steps = conv.rounds();
    Ok(TrialRun { records, steps })
}

/// Runs every (trial, method) pair in parallel; records come back ordered by
/// trial, then method in config order, then epoch.
pub fn run_experiment(config: &ExperimentConfig, data: &Dataset) -> Result<Vec<ResultRecord>> {
    config.validate()?;
    let jobs: Vec<(usize, Method)> = (0..config.trials)
        .flat_map(|trial| config.methods.iter().map(move |&m| (trial, m)))
        .collect();
    let runs: Vec<TrialRun> = jobs
        .par_iter()
        .map(|&(trial, method)| run_trial(config, data, trial, method))
        .collect::<Result<_>>()?;
    Ok(runs.into_iter().flat_map(|r| r.records).collect())
}
