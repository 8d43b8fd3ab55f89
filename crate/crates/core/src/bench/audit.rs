//! Monte Carlo audits that compare measured quantities against the closed-form
//! envelopes and inequalities of the library.
//!
//! Every replication draws from its own stream `derive_seed(seed, [kind, r])`,
//! and replications run in parallel but are reduced in index order, so a
//! report is a pure function of `(kind, replications, seed, params)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bernstein_deviation, q_delta, r_delta, sgd_excess_bound, BernsteinParams, BoundInputs};
use crate::conversion::{anytime_identity_audit, run, Feedback, RunTrace, Weights};
use crate::error::{Error, Result};
use crate::geometry::{DualVector, FeasibleSet, MirrorMap, Norm, Vector};
use crate::learners::{ftrl_regret_bound, smd_regret_slack, Ftrl, MirrorDescent, RegularizerSchedule, StepSchedule};
use crate::objectives::{solve_reference, Objective};
use crate::oracles::{certified_sigma, derive_seed, NoiseFamily, NoiseSpec, SyntheticOracle};
use crate::robust::{build_anchor, truncation_offset, AnchorStrategy, ThresholdSchedule};

/// Stationarity residual at which comparators are accepted.
const REFERENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AuditKind {
    /// Excess risk of anytime SGD with truncation against its closed-form envelope.
    #[serde(rename = "corollary-sgd")]
    CorollarySgd,
    /// Weighted sum of processed-gradient errors against `max{q_δ, r_δ}`.
    #[serde(rename = "lemma2")]
    Lemma2,
    /// Maximal partial sums of bounded martingale differences against the Bernstein deviation.
    #[serde(rename = "bernstein")]
    Bernstein,
    /// Both sides of the anytime excess-risk identity.
    #[serde(rename = "anytime-identity")]
    AnytimeIdentity,
    /// Per-step mirror-descent regret inequality.
    #[serde(rename = "regret-smd")]
    RegretSmd,
    /// Cumulative FTRL regret bound at every horizon.
    #[serde(rename = "regret-ftrl")]
    RegretFtrl,
}

impl AuditKind {
    pub const ALL: [AuditKind; 6] = [
        Self::CorollarySgd,
        Self::Lemma2,
        Self::Bernstein,
        Self::AnytimeIdentity,
        Self::RegretSmd,
        Self::RegretFtrl,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CorollarySgd => "corollary-sgd",
            Self::Lemma2 => "lemma2",
            Self::Bernstein => "bernstein",
            Self::AnytimeIdentity => "anytime-identity",
            Self::RegretSmd => "regret-smd",
            Self::RegretFtrl => "regret-ftrl",
        }
    }

    fn seed_tag(&self) -> u64 {
        Self::ALL.iter().position(|k| k == self).expect("kind listed in ALL") as u64 + 1
    }

    /// Replication count used when none is given.
    pub fn default_replications(&self) -> usize {
        match self {
            Self::CorollarySgd | Self::Lemma2 => 1000,
            Self::Bernstein => 100_000,
            Self::AnytimeIdentity => 100,
            Self::RegretSmd | Self::RegretFtrl => 20,
        }
    }
}

impl std::fmt::Display for AuditKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AuditKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        let kind = match key.as_str() {
            "corollary-sgd" | "sgd-excess" => Self::CorollarySgd,
            "lemma2" | "error-sum" => Self::Lemma2,
            "bernstein" => Self::Bernstein,
            "anytime-identity" | "identity" => Self::AnytimeIdentity,
            "regret-smd" => Self::RegretSmd,
            "regret-ftrl" => Self::RegretFtrl,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown audit kind '{other}'; expected one of {}",
                    Self::ALL.map(|k| k.as_str()).join(", ")
                )))
            }
        };
        Ok(kind)
    }
}

/// Problem constants shared by the truncated-SGD campaigns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdCampaign {
    /// Diagonal of the quadratic's matrix.
    pub diag: Vec<f64>,
    pub linear: Vec<f64>,
    /// Radius of the centered ball.
    pub radius: f64,
    /// Noise family; the scale is set so the certified σ equals `sigma`.
    pub noise: NoiseFamily,
    pub sigma: f64,
    pub horizon: usize,
    pub delta: f64,
    /// Constant step; `None` means `1/λ`.
    pub step: Option<f64>,
}

impl Default for SgdCampaign {
    fn default() -> Self {
        Self {
            diag: vec![1.0, 0.7, 0.4, 0.1],
            linear: vec![1.2, -0.5, 0.3, 0.1],
            radius: 1.0,
            noise: NoiseFamily::StudentT { dof: 2.5 },
            sigma: 1.0,
            horizon: 500,
            delta: 0.05,
            step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BernsteinCampaign {
    pub horizon: usize,
    /// Increments are `±bound` with equal probability.
    pub bound: f64,
    pub gamma1: f64,
}

impl Default for BernsteinCampaign {
    fn default() -> Self {
        Self {
            horizon: 100,
            bound: 1.0,
            gamma1: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalityCampaign {
    pub dim: usize,
    pub horizon: usize,
    /// Scale of the Gaussian gradient noise.
    pub noise_scale: f64,
    /// Tolerance on the identity gap (relative) or on inequality slack (absolute).
    pub tolerance: f64,
}

impl Default for InequalityCampaign {
    fn default() -> Self {
        Self {
            dim: 5,
            horizon: 100,
            noise_scale: 0.5,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditParams {
    pub sgd: SgdCampaign,
    pub bernstein: BernsteinCampaign,
    pub inequality: InequalityCampaign,
}

impl AuditParams {
    /// Defaults for `kind`; the identity campaign runs shorter horizons.
    pub fn default_for(kind: AuditKind) -> Self {
        let mut params = Self::default();
        if kind == AuditKind::AnytimeIdentity {
            params.inequality.horizon = 50;
        }
        params
    }
}

/// Outcome of one campaign. For probabilistic audits `level` is the nominal
/// failure probability and `allowed = level + 3·√(level(1−level)/M)`; for
/// deterministic audits both are 0 and every replication must pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub kind: AuditKind,
    pub replications: usize,
    pub seed: u64,
    pub exceedances: usize,
    pub frequency: f64,
    /// Wilson interval at three standard errors around `frequency`.
    pub confidence_interval: (f64, f64),
    pub level: f64,
    pub allowed: f64,
    pub passed: bool,
    /// Named summary statistics specific to the campaign.
    pub details: Vec<(String, f64)>,
}

impl AuditReport {
    fn new(kind: AuditKind, seed: u64, flags: &[bool], level: f64, details: Vec<(String, f64)>) -> Self {
        let m = flags.len();
        let exceedances = flags.iter().filter(|&&f| f).count();
        let frequency = exceedances as f64 / m as f64;
        let allowed = if level > 0.0 {
            level + 3.0 * (level * (1.0 - level) / m as f64).sqrt()
        } else {
            0.0
        };
        Self {
            kind,
            replications: m,
            seed,
            exceedances,
            frequency,
            confidence_interval: wilson_interval(exceedances, m, 3.0),
            level,
            allowed,
            passed: frequency <= allowed,
            details,
        }
    }

    pub fn detail(&self, name: &str) -> Option<f64> {
        self.details.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

impl std::fmt::Display for AuditReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "audit {} ({} replications, seed {})",
            self.kind, self.replications, self.seed
        )?;
        writeln!(
            f,
            "  exceedances {} / {} = {:.6}  CI [{:.6}, {:.6}]  allowed {:.6}  {}",
            self.exceedances,
            self.replications,
            self.frequency,
            self.confidence_interval.0,
            self.confidence_interval.1,
            self.allowed,
            if self.passed { "PASS" } else { "FAIL" }
        )?;
        for (name, value) in &self.details {
            writeln!(f, "  {name:<32} {value:.6e}")?;
        }
        Ok(())
    }
}

/// Wilson score interval for a binomial proportion at `z` standard errors.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub fn run_audit_campaign(
    kind: AuditKind,
    replications: usize,
    seed: u64,
    params: &AuditParams,
) -> Result<AuditReport> {
    if replications == 0 {
        return Err(Error::InvalidParameter("at least one replication is required".into()));
    }
    let seeds: Vec<u64> = (0..replications as u64)
        .map(|r| derive_seed(seed, &[kind.seed_tag(), r]))
        .collect();
    match kind {
        AuditKind::CorollarySgd | AuditKind::Lemma2 => sgd_campaign(kind, &seeds, seed, &params.sgd),
        AuditKind::Bernstein => bernstein_campaign(&seeds, seed, &params.bernstein),
        AuditKind::AnytimeIdentity => identity_campaign(&seeds, seed, &params.inequality),
        AuditKind::RegretSmd => smd_campaign(&seeds, seed, &params.inequality),
        AuditKind::RegretFtrl => ftrl_campaign(&seeds, seed, &params.inequality),
    }
}

/// Fixed problem of the truncated-SGD campaigns with its certified constants.
pub struct SgdSetup {
    pub objective: Objective,
    pub noise: NoiseSpec,
    pub h_star: Vector,
    pub risk_star: f64,
    pub bound_inputs: BoundInputs,
    pub schedule: ThresholdSchedule,
}

impl SgdCampaign {
    pub fn setup(&self) -> Result<SgdSetup> {
        let dim = self.diag.len();
        let set = FeasibleSet::centered_ball(dim, self.radius)?;
        let objective = Objective::diagonal_quadratic(&self.diag, Vector::new(self.linear.clone())?, set)?;
        let lambda = objective.smoothness();
        let diameter = objective.feasible().diameter();
        let noise = if self.sigma == 0.0 {
            NoiseSpec::zero()
        } else {
            NoiseSpec::with_sigma(self.noise, self.sigma, dim)?
        };
        let sigma = certified_sigma(&noise, dim)?;
        let reference = solve_reference(&objective, REFERENCE_TOL)?;
        let offset = truncation_offset(lambda, diameter, sigma, self.horizon, self.delta, 0.0)?;
        let schedule = ThresholdSchedule::smooth_theory(0.0, lambda, offset)?;
        let beta = self.step.unwrap_or(1.0 / lambda);
        let bound_inputs = BoundInputs::sgd(diameter, sigma, lambda, self.delta, self.horizon, beta);
        Ok(SgdSetup {
            risk_star: reference.value,
            h_star: reference.h_star,
            objective,
            noise,
            bound_inputs,
            schedule,
        })
    }
}

impl SgdSetup {
    /// One truncated anytime-SGD run from the center of the ball.
    pub fn replicate(&self, seed: u64) -> Result<RunTrace> {
        let obj = &self.objective;
        let h1 = obj.feasible().center_point();
        let anchor = build_anchor(
            &AnchorStrategy::Exact { h_tilde: h1.clone() },
            obj,
            self.bound_inputs.delta,
        )?;
        let beta = self.bound_inputs.steps[0];
        let mut learner = MirrorDescent::sgd(obj.feasible().clone(), StepSchedule::constant(beta)?, h1)?;
        let mut oracle = SyntheticOracle::new(self.noise, seed)?;
        let feedback = Feedback::Truncated {
            anchor,
            schedule: self.schedule,
            norm: Norm::L2,
        };
        run(
            obj,
            &mut oracle,
            &mut learner,
            feedback,
            Weights::ones(),
            self.bound_inputs.horizon(),
        )
    }
}

/// Per-replication error sums of a truncated run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSums {
    /// `Σ α_t sup_{h,h'∈ℋ}⟨Ḡ_t − ∇R(h̄_t), h − h'⟩`.
    pub per_step_sup: f64,
    /// `sup_{h,h'∈ℋ} Σ α_t⟨Ḡ_t − ∇R(h̄_t), h − h'⟩`.
    pub sup_of_sum: f64,
}

pub fn error_sums(trace: &RunTrace, obj: &Objective) -> Result<ErrorSums> {
    let set = obj.feasible();
    let mut per_step_sup = 0.0;
    let mut total = DualVector::zeros(obj.dim());
    for r in &trace.records {
        let err = r.processed.sub(&obj.gradient(&r.h_bar)?)?;
        per_step_sup += r.weight * set.support_width(&err)?;
        total.add_scaled(r.weight, &err)?;
    }
    Ok(ErrorSums {
        per_step_sup,
        sup_of_sum: set.support_width(&total)?,
    })
}

struct SgdOutcome {
    excess: f64,
    sums: ErrorSums,
    gradient_error_sum: f64,
    truncation_rate: f64,
}

fn sgd_campaign(kind: AuditKind, seeds: &[u64], seed: u64, params: &SgdCampaign) -> Result<AuditReport> {
    let setup = params.setup()?;
    let outcomes: Vec<SgdOutcome> = seeds
        .par_iter()
        .map(|&s| {
            let trace = setup.replicate(s)?;
            let audit = anytime_identity_audit(&trace, &setup.objective, &setup.h_star)?;
            Ok(SgdOutcome {
                excess: setup.objective.value(&trace.output)? - setup.risk_star,
                sums: error_sums(&trace, &setup.objective)?,
                gradient_error_sum: audit.gradient_error_sum,
                truncation_rate: trace.truncation.rate(),
            })
        })
        .collect::<Result<_>>()?;
    let m = outcomes.len() as f64;
    let mean = |f: &dyn Fn(&SgdOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / m;
    let max = |f: &dyn Fn(&SgdOutcome) -> f64| outcomes.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let inputs = &setup.bound_inputs;
    let level = 2.0 * inputs.delta;
    let mut details = vec![
        ("sigma".to_string(), inputs.sigma),
        ("diameter".to_string(), inputs.diameter),
        ("smoothness".to_string(), inputs.smoothness),
        ("mean_truncation_rate".to_string(), mean(&|o| o.truncation_rate)),
    ];
    let flags: Vec<bool> = match kind {
        AuditKind::CorollarySgd => {
            let bound = sgd_excess_bound(inputs)?;
            details.push(("bound".into(), bound));
            details.push(("mean_excess".into(), mean(&|o| o.excess)));
            details.push(("max_excess".into(), max(&|o| o.excess)));
            outcomes.iter().map(|o| o.excess > bound).collect()
        }
        _ => {
            let bound = q_delta(inputs)?.max(r_delta(inputs)?);
            let fraction = |f: &dyn Fn(&SgdOutcome) -> f64| outcomes.iter().filter(|o| f(o) > bound).count() as f64 / m;
            details.push(("bound".into(), bound));
            details.push(("mean_per_step_sup".into(), mean(&|o| o.sums.per_step_sup)));
            details.push(("mean_sup_of_sum".into(), mean(&|o| o.sums.sup_of_sum)));
            details.push(("sup_of_sum_exceedance".into(), fraction(&|o| o.sums.sup_of_sum)));
            details.push((
                "error_sum_at_optimum_exceedance".into(),
                fraction(&|o| o.gradient_error_sum),
            ));
            outcomes.iter().map(|o| o.sums.per_step_sup > bound).collect()
        }
    };
    Ok(AuditReport::new(kind, seed, &flags, level, details))
}

fn bernstein_campaign(seeds: &[u64], seed: u64, params: &BernsteinCampaign) -> Result<AuditReport> {
    if params.horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let gamma2 = params.horizon as f64 * params.bound * params.bound;
    let deviation = bernstein_deviation(&BernsteinParams {
        gamma1: params.gamma1,
        gamma2,
        bound: params.bound,
    })?;
    let maxima: Vec<f64> = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut sum = 0.0;
            let mut best = f64::NEG_INFINITY;
            for _ in 0..params.horizon {
                sum += if rng.random::<bool>() {
                    params.bound
                } else {
                    -params.bound
                };
                best = best.max(sum);
            }
            best
        })
        .collect();
    let flags: Vec<bool> = maxima.iter().map(|&x| x > deviation).collect();
    let details = vec![
        ("deviation".into(), deviation),
        ("gamma2".into(), gamma2),
        (
            "mean_max_partial_sum".into(),
            maxima.iter().sum::<f64>() / maxima.len() as f64,
        ),
    ];
    Ok(AuditReport::new(
        AuditKind::Bernstein,
        seed,
        &flags,
        (-params.gamma1).exp(),
        details,
    ))
}

/// Random `MᵀM + 0.1·I` quadratic with linear term entries in `[−2, 2]`.
fn random_quadratic(rng: &mut ChaCha8Rng, set: FeasibleSet) -> Result<Objective> {
    let dim = set.dim();
    let m: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let a: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| (0..dim).map(|k| m[k][i] * m[k][j]).sum::<f64>() + if i == j { 0.1 } else { 0.0 })
                .collect()
        })
        .collect();
    let b = Vector::new((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())?;
    Objective::quadratic(a, b, set)
}

fn random_weights(rng: &mut ChaCha8Rng, horizon: usize) -> Vec<f64> {
    // 2·(1 − u) with u ∈ [0,1) lies in (0, 2]
    (0..horizon).map(|_| 2.0 * (1.0 - rng.random::<f64>())).collect()
}

fn check_inequality(params: &InequalityCampaign) -> Result<()> {
    if params.dim == 0 || params.horizon == 0 {
        return Err(Error::InvalidParameter(
            "dimension and horizon must be at least 1".into(),
        ));
    }
    Ok(())
}

fn identity_campaign(seeds: &[u64], seed: u64, params: &InequalityCampaign) -> Result<AuditReport> {
    check_inequality(params)?;
    let gaps: Vec<(f64, f64)> = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let obj = random_quadratic(&mut rng, FeasibleSet::centered_ball(params.dim, 1.0)?)?;
            let weights = random_weights(&mut rng, params.horizon);
            let h_star = solve_reference(&obj, REFERENCE_TOL)?.h_star;
            let beta = 0.5 / obj.smoothness();
            let h1 = obj.feasible().center_point();
            let mut learner = MirrorDescent::sgd(obj.feasible().clone(), StepSchedule::constant(beta)?, h1)?;
            let noise = NoiseSpec::new(NoiseFamily::Gaussian, params.noise_scale)?;
            let mut oracle = SyntheticOracle::new(noise, rng.random())?;
            let trace = run(
                &obj,
                &mut oracle,
                &mut learner,
                Feedback::Raw,
                Weights::explicit(weights)?,
                params.horizon,
            )?;
            let audit = anytime_identity_audit(&trace, &obj, &h_star)?;
            Ok((audit.identity_gap(), audit.lhs))
        })
        .collect::<Result<_>>()?;
    let flags: Vec<bool> = gaps
        .iter()
        .map(|&(gap, lhs)| gap > params.tolerance * (1.0 + lhs.abs()))
        .collect();
    let worst = gaps
        .iter()
        .map(|&(gap, lhs)| gap / (1.0 + lhs.abs()))
        .fold(0.0, f64::max);
    Ok(AuditReport::new(
        AuditKind::AnytimeIdentity,
        seed,
        &flags,
        0.0,
        vec![("max_relative_gap".into(), worst)],
    ))
}

fn true_gradients(trace: &RunTrace, obj: &Objective) -> Result<Vec<DualVector>> {
    trace.records.iter().map(|r| obj.gradient(&r.h_bar)).collect()
}

fn smd_campaign(seeds: &[u64], seed: u64, params: &InequalityCampaign) -> Result<AuditReport> {
    check_inequality(params)?;
    let mut flags = Vec::new();
    let mut details = Vec::new();
    for (map, label) in [
        (MirrorMap::Euclidean, "euclidean"),
        (MirrorMap::NegativeEntropy, "entropy"),
    ] {
        let slacks: Vec<f64> = seeds
            .par_iter()
            .map(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let set = match map {
                    MirrorMap::Euclidean => FeasibleSet::centered_ball(params.dim, 1.0)?,
                    MirrorMap::NegativeEntropy => FeasibleSet::simplex(params.dim)?,
                };
                let obj = random_quadratic(&mut rng, set)?;
                let h_star = solve_reference(&obj, REFERENCE_TOL)?.h_star;
                let beta = rng.random_range(0.1..1.0) / obj.smoothness();
                let h1 = obj.feasible().center_point();
                let mut learner = MirrorDescent::new(map, obj.feasible().clone(), StepSchedule::constant(beta)?, h1)?;
                let noise = NoiseSpec::new(NoiseFamily::Gaussian, params.noise_scale)?;
                let mut oracle = SyntheticOracle::new(noise, rng.random())?;
                let trace = run(
                    &obj,
                    &mut oracle,
                    &mut learner,
                    Feedback::Raw,
                    Weights::ones(),
                    params.horizon,
                )?;
                let grads = true_gradients(&trace, &obj)?;
                let iterates = trace.ancillary_iterates();
                let mut worst = f64::INFINITY;
                for (t, r) in trace.records.iter().enumerate() {
                    let slack = smd_regret_slack(
                        map,
                        beta,
                        &r.processed,
                        &grads[t],
                        &iterates[t],
                        &iterates[t + 1],
                        &h_star,
                    )?;
                    worst = worst.min(slack);
                }
                Ok(worst)
            })
            .collect::<Result<_>>()?;
        flags.extend(slacks.iter().map(|&s| s < -params.tolerance));
        details.push((
            format!("min_slack_{label}"),
            slacks.iter().cloned().fold(f64::INFINITY, f64::min),
        ));
    }
    Ok(AuditReport::new(AuditKind::RegretSmd, seed, &flags, 0.0, details))
}

fn ftrl_campaign(seeds: &[u64], seed: u64, params: &InequalityCampaign) -> Result<AuditReport> {
    check_inequality(params)?;
    let slacks: Vec<f64> = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let obj = random_quadratic(&mut rng, FeasibleSet::centered_ball(params.dim, 1.0)?)?;
            let weights = random_weights(&mut rng, params.horizon);
            let h_star = solve_reference(&obj, REFERENCE_TOL)?.h_star;
            let regs = RegularizerSchedule::SqrtGrowth {
                scale: rng.random_range(0.5..2.0) * obj.smoothness(),
            };
            let mut learner = Ftrl::new(obj.feasible().clone(), regs.clone())?;
            let noise = NoiseSpec::new(NoiseFamily::Gaussian, params.noise_scale)?;
            let mut oracle = SyntheticOracle::new(noise, rng.random())?;
            let trace = run(
                &obj,
                &mut oracle,
                &mut learner,
                Feedback::Raw,
                Weights::explicit(weights.clone())?,
                params.horizon,
            )?;
            let processed: Vec<DualVector> = trace.records.iter().map(|r| r.processed.clone()).collect();
            let points = ftrl_regret_bound(
                obj.feasible(),
                &regs,
                &weights,
                &processed,
                &true_gradients(&trace, &obj)?,
                &trace.ancillary_iterates(),
                &h_star,
            )?;
            Ok(points.iter().map(|p| p.slack()).fold(f64::INFINITY, f64::min))
        })
        .collect::<Result<_>>()?;
    let flags: Vec<bool> = slacks.iter().map(|&s| s < -params.tolerance).collect();
    let worst = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(AuditReport::new(
        AuditKind::RegretFtrl,
        seed,
        &flags,
        0.0,
        vec![("min_slack".into(), worst)],
    ))
}
