//! Randomized-ensemble least-squares value iteration (RE-LSVI).
//!
//! Every episode refits the aggregate reward vector and the dynamics backups
//! on all past data, draws `m` Gaussian reward perturbations shaped by the
//! aggregate covariance, runs `m` clipped optimistic backward passes and plays
//! the greedy policy of the member with the largest initial value.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    backup_operator, bonus, estimate_theta, sample_ensemble_noise, CovariancePair, DynamicsDataset,
    RewardDataset, ThetaEstimate,
};
use crate::harness::record::{ExperimentRecord, RegretLog};
use crate::mdp::{optimal_policy, policy_value, sample_episode, FeatureMap, LinearMdp, MarkovPolicy, RewardNoise};
use crate::rng::Streams;

/// Hyper-parameters of RE-LSVI.
///
/// The confidence radii are stored at their theoretical values; the
/// `effective_*` accessors apply `bonus_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelsviParams {
    pub lambda_r: f64,
    pub lambda_p: f64,
    pub m: usize,
    pub beta_r: f64,
    pub beta_zeta: f64,
    pub beta_rzeta: f64,
    pub beta_p: f64,
    pub delta: f64,
    /// Uniform multiplier on `β_r`, `β_p` and `β_rζ`.
    pub bonus_scale: f64,
}

impl RelsviParams {
    /// Theoretical parameter setting for feature dimension `d`, horizon `H`,
    /// `K` episodes and confidence `δ`.
    pub fn compute(d: usize, horizon: usize, episodes: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!("δ = {delta} must lie in (0, 1)")));
        }
        if d == 0 || horizon == 0 || episodes == 0 {
            return Err(Error::Parameter("d, H and K must be positive".into()));
        }
        let (d, h, k) = (d as f64, horizon as f64, episodes as f64);
        let m = (9.0 * (5.0 * k / delta).ln()).ceil() as usize;
        let beta_r = 2.0 * h * (2.0 * d * h * (10.0 * k / delta).ln()).sqrt();
        let beta_zeta = ((11.0 * d * h / 2.0) * (5.0 * m as f64 * k / delta).ln()).sqrt();
        let beta_rzeta = 2.0 * beta_zeta * beta_r / h.sqrt();
        let beta_p = 40.0 * beta_zeta * beta_r * d * (h * (163.0 * k * d * h / delta).ln()).sqrt();
        Ok(Self { lambda_r: h, lambda_p: 1.0, m: m.max(1), beta_r, beta_zeta, beta_rzeta, beta_p, delta, bonus_scale: 1.0 })
    }

    pub fn with_bonus_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Parameter(format!("bonus scale {scale} must be positive")));
        }
        self.bonus_scale = scale;
        Ok(self)
    }

    pub fn with_ensemble_size(mut self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("ensemble size must be at least 1".into()));
        }
        self.m = m;
        Ok(self)
    }

    pub fn effective_beta_r(&self) -> f64 {
        self.beta_r * self.bonus_scale
    }

    pub fn effective_beta_p(&self) -> f64 {
        self.beta_p * self.bonus_scale
    }

    pub fn effective_beta_rzeta(&self) -> f64 {
        self.beta_rzeta * self.bonus_scale
    }

    /// Clip radius at zero-based step `h`: `(H − h)·β_rζ`.
    pub fn clip_radius(&self, horizon: usize, h: usize) -> f64 {
        (horizon - h) as f64 * self.effective_beta_rzeta()
    }

    pub fn validate(&self) -> Result<()> {
        let radii = [self.lambda_r, self.lambda_p, self.beta_r, self.beta_zeta, self.beta_rzeta, self.beta_p];
        if radii.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Parameter("ridges and radii must be positive".into()));
        }
        if self.m == 0 {
            return Err(Error::Parameter("ensemble size must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Parameter(format!("δ = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.bonus_scale > 0.0) {
            return Err(Error::Parameter("bonus scale must be positive".into()));
        }
        Ok(())
    }
}

/// `min{β, max{−β, z}}`.
#[inline]
pub fn clip(beta: f64, z: f64) -> f64 {
    z.max(-beta).min(beta)
}

/// Per-episode estimator snapshot consumed by the backward passes.
#[derive(Debug, Clone)]
pub struct BackupInputs {
    pub theta: ThetaEstimate,
    /// `ψ̂_h` as `d × |X|` matrices.
    pub operators: Vec<DMatrix<f64>>,
    /// `b_h(x,a)` laid out as `[h][x * A + a]`.
    pub bonuses: Vec<Vec<f64>>,
}

impl BackupInputs {
    pub fn compute(
        features: &FeatureMap,
        cov: &CovariancePair,
        rewards: &RewardDataset,
        dynamics: &DynamicsDataset,
        beta_p: f64,
    ) -> Result<Self> {
        let theta = estimate_theta(cov, rewards)?;
        let operators = (0..features.horizon())
            .map(|h| backup_operator(cov, dynamics, h))
            .collect::<Result<Vec<_>>>()?;
        let bonuses = (0..features.horizon())
            .map(|h| {
                features
                    .all()
                    .iter()
                    .map(|phi| if beta_p == 0.0 { 0.0 } else { bonus(cov, h, phi, beta_p) })
                    .collect()
            })
            .collect();
        Ok(Self { theta, operators, bonuses })
    }
}

/// One ensemble member's value-iteration output.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberEstimate {
    /// `w_h` for each step.
    pub weights: Vec<DVector<f64>>,
    /// `Q̂_h(x,a)` as `[h][x * A + a]`.
    pub q: Vec<Vec<f64>>,
    /// `V̂_h(x)` for `h = 0..=H`.
    pub v: Vec<Vec<f64>>,
    pub greedy: MarkovPolicy,
}

impl MemberEstimate {
    pub fn start_value(&self, features: &FeatureMap) -> f64 {
        self.v[0][features.initial_state()]
    }
}

/// Runs the clipped backward pass once per perturbation in `noises`.
pub fn backward_pass(
    features: &FeatureMap,
    inputs: &BackupInputs,
    params: &RelsviParams,
    noises: &[DVector<f64>],
) -> Vec<MemberEstimate> {
    noises.par_iter().map(|zeta| member_pass(features, inputs, params, zeta)).collect()
}

fn member_pass(features: &FeatureMap, inputs: &BackupInputs, params: &RelsviParams, zeta: &DVector<f64>) -> MemberEstimate {
    let (d, n_x, n_a, horizon) = (features.dim(), features.n_states(), features.n_actions(), features.horizon());
    let mut weights = vec![DVector::zeros(d); horizon];
    let mut q = vec![vec![0.0; n_x * n_a]; horizon];
    let mut v = vec![vec![0.0; n_x]; horizon + 1];
    let mut actions = vec![vec![0usize; n_x]; horizon];
    for h in (0..horizon).rev() {
        let next = DVector::from_column_slice(&v[h + 1]);
        let w = &inputs.theta.blocks[h] + zeta.rows(h * d, d) + &inputs.operators[h] * next;
        let cap = params.clip_radius(horizon, h);
        for x in 0..n_x {
            let mut best = f64::NEG_INFINITY;
            for a in 0..n_a {
                let idx = x * n_a + a;
                let value = clip(cap, features.phi(x, a).dot(&w) + inputs.bonuses[h][idx]);
                q[h][idx] = value;
                if value > best {
                    best = value;
                    actions[h][x] = a;
                }
            }
            v[h][x] = best;
        }
        weights[h] = w;
    }
    let greedy = MarkovPolicy::deterministic(n_a, &actions).expect("greedy table is well formed");
    MemberEstimate { weights, q, v, greedy }
}

/// Index of the largest value, lowest index on ties (zero-based).
pub fn select_member(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// The outcome of planning one episode.
#[derive(Debug, Clone)]
pub struct RelsviPlan {
    /// Zero-based chosen member `i_k`.
    pub member: usize,
    pub policy: MarkovPolicy,
    /// `V̂_1^{k,i_k}(x_1)`.
    pub v_hat: f64,
    pub members: Vec<MemberEstimate>,
    pub noises: Vec<DVector<f64>>,
}

/// Online RE-LSVI learner state.
#[derive(Debug, Clone)]
pub struct RelsviAgent {
    params: RelsviParams,
    features: FeatureMap,
    cov: CovariancePair,
    rewards: RewardDataset,
    dynamics: DynamicsDataset,
}

impl RelsviAgent {
    pub fn new(features: FeatureMap, params: RelsviParams) -> Result<Self> {
        params.validate()?;
        let (d, horizon) = (features.dim(), features.horizon());
        Ok(Self {
            cov: CovariancePair::new(d, horizon, params.lambda_r, params.lambda_p),
            rewards: RewardDataset::new(d * horizon),
            dynamics: DynamicsDataset::new(d, features.n_states(), horizon),
            params,
            features,
        })
    }

    pub fn params(&self) -> &RelsviParams {
        &self.params
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn covariances(&self) -> &CovariancePair {
        &self.cov
    }

    pub fn inputs(&self) -> Result<BackupInputs> {
        BackupInputs::compute(&self.features, &self.cov, &self.rewards, &self.dynamics, self.params.effective_beta_p())
    }

    /// Plans with explicitly supplied perturbations.
    pub fn plan_with_noise(&self, noises: Vec<DVector<f64>>) -> Result<RelsviPlan> {
        let inputs = self.inputs()?;
        let members = backward_pass(&self.features, &inputs, &self.params, &noises);
        let starts: Vec<f64> = members.iter().map(|m| m.start_value(&self.features)).collect();
        let member = select_member(&starts);
        Ok(RelsviPlan { member, policy: members[member].greedy.clone(), v_hat: starts[member], members, noises })
    }

    /// Draws the `m` perturbations from `rng` and plans.
    pub fn plan<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<RelsviPlan> {
        let noises = sample_ensemble_noise(&self.cov, self.params.effective_beta_r(), self.params.m, rng);
        self.plan_with_noise(noises)
    }

    /// Adds a finished episode to every dataset and covariance.
    pub fn observe(&mut self, index: usize, episode: &crate::mdp::EpisodeFeedback) -> Result<()> {
        self.cov.update(&self.features, episode)?;
        self.rewards.push_episode(index, &self.features, episode)?;
        self.dynamics.push_episode(index, &self.features, episode)
    }
}

/// What an inspector sees after each episode.
#[derive(Debug)]
pub struct RelsviTrace<'a> {
    pub episode: usize,
    pub plan: &'a RelsviPlan,
    pub record: &'a ExperimentRecord,
}

/// Runs RE-LSVI for `episodes` episodes against a known model and logs regret.
pub fn run(
    env: &LinearMdp,
    episodes: usize,
    params: &RelsviParams,
    noise: RewardNoise,
    streams: &Streams,
) -> Result<Vec<ExperimentRecord>> {
    run_inspected(env, episodes, params, noise, streams, |_| Ok(()))
}

/// [`run`] with a hook invoked after every episode.
pub fn run_inspected<F>(
    env: &LinearMdp,
    episodes: usize,
    params: &RelsviParams,
    noise: RewardNoise,
    streams: &Streams,
    mut inspect: F,
) -> Result<Vec<ExperimentRecord>>
where
    F: FnMut(&RelsviTrace<'_>) -> Result<()>,
{
    env.ensure_valid()?;
    let mut agent = RelsviAgent::new(env.features().clone(), params.clone())?;
    let mut log = RegretLog::new(optimal_policy(env).value);
    for k in 1..=episodes {
        let plan = agent.plan(&mut streams.stream("noise", k as u64))?;
        let feedback = sample_episode(env, &plan.policy, noise, &mut streams.stream("episode", k as u64))?;
        let v_pik = policy_value(env, &plan.policy);
        let record = log.push(-1, plan.member as i64 + 1, Some(plan.v_hat), v_pik).clone();
        inspect(&RelsviTrace { episode: k, plan: &plan, record: &record })?;
        agent.observe(k, &feedback)?;
    }
    Ok(log.into_records())
}
