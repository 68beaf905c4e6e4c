use crate::error::{Error, Result};
use crate::estimators::{CovariancePair, DynamicsDataset, RidgeCovariance};
use crate::harness::record::RegretLog;
use crate::mdp::{policy_value, sample_episode, EpisodeFeedback, FeatureMap, LinearMdp, MarkovPolicy, RewardNoise};
use crate::rng::Streams;

use super::RepoParams;

/// Per-step known-state sets `Z_h` derived from warm-up covariances.
#[derive(Debug, Clone)]
pub struct KnownSets {
    threshold: f64,
    /// `members[h][x]`.
    members: Vec<Vec<bool>>,
    warmup_covariances: Vec<RidgeCovariance>,
}

impl KnownSets {
    /// `x ∈ Z_h` iff `max_a ‖φ(x,a)‖_{(Λ_h^0)⁻¹} ≤ 1/(2β_w H)`.
    pub fn compute(features: &FeatureMap, warmup_covariances: Vec<RidgeCovariance>, beta_w: f64) -> Self {
        let horizon = features.horizon();
        let threshold = 1.0 / (2.0 * beta_w * horizon as f64);
        let members = (0..horizon)
            .map(|h| {
                (0..features.n_states())
                    .map(|x| max_feature_norm(features, &warmup_covariances[h], x) <= threshold)
                    .collect()
            })
            .collect();
        Self { threshold, members, warmup_covariances }
    }

    /// Every state known at every step (used when the indicator is disabled).
    pub fn everything(features: &FeatureMap, lambda_p: f64) -> Self {
        Self {
            threshold: f64::INFINITY,
            members: vec![vec![true; features.n_states()]; features.horizon()],
            warmup_covariances: (0..features.horizon()).map(|_| RidgeCovariance::new(features.dim(), lambda_p)).collect(),
        }
    }

    #[inline]
    pub fn contains(&self, h: usize, x: usize) -> bool {
        self.members[h][x]
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn warmup_covariance(&self, h: usize) -> &RidgeCovariance {
        &self.warmup_covariances[h]
    }

    pub fn known_count(&self, h: usize) -> usize {
        self.members[h].iter().filter(|&&b| b).count()
    }

    /// Re-evaluates the membership rule and compares with the stored flags.
    pub fn is_consistent(&self, features: &FeatureMap) -> bool {
        (0..features.horizon()).all(|h| {
            (0..features.n_states()).all(|x| {
                (max_feature_norm(features, &self.warmup_covariances[h], x) <= self.threshold) == self.members[h][x]
            })
        })
    }
}

fn max_feature_norm(features: &FeatureMap, cov: &RidgeCovariance, x: usize) -> f64 {
    (0..features.n_actions())
        .map(|a| cov.inv_norm(features.phi(x, a)))
        .fold(0.0, f64::max)
}

/// What the main loop inherits from the warm-up phase.
#[derive(Debug, Clone)]
pub struct WarmupOutcome {
    /// `D_h^0`.
    pub dynamics: DynamicsDataset,
    /// `Λ_h^0` in the step slots; the aggregate slot is untouched (ridge only).
    pub covariances: CovariancePair,
    pub known: KnownSets,
    /// Number of episodes consumed, `k_0`.
    pub episodes: usize,
    pub feedback: Vec<EpisodeFeedback>,
    /// Regret rows for the warm-up episodes.
    pub log: RegretLog,
}

/// A reward-free exploration phase producing `D_h^0` and `Z_h`.
pub trait WarmupRoutine {
    fn run(
        &self,
        env: &LinearMdp,
        params: &RepoParams,
        budget: usize,
        noise: RewardNoise,
        streams: &Streams,
        v_star: f64,
    ) -> Result<WarmupOutcome>;
}

/// Default warm-up: `⌈c/ε_cov⌉` episodes of the uniform policy.
///
/// This does not carry the coverage guarantee of a dedicated reward-free
/// exploration algorithm; only the `Z_h` membership rule is exact.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformWarmup;

impl WarmupRoutine for UniformWarmup {
    fn run(
        &self,
        env: &LinearMdp,
        params: &RepoParams,
        budget: usize,
        noise: RewardNoise,
        streams: &Streams,
        v_star: f64,
    ) -> Result<WarmupOutcome> {
        if !(params.eps_cov >= 1.0 / budget as f64) {
            return Err(Error::Parameter(format!(
                "ε_cov = {} must be at least 1/K = {}",
                params.eps_cov,
                1.0 / budget as f64
            )));
        }
        let features = env.features();
        let (d, horizon) = (features.dim(), features.horizon());
        let episodes = params.warmup_episodes().min(budget);
        let uniform = MarkovPolicy::uniform(features.n_states(), features.n_actions(), horizon);
        let uniform_value = policy_value(env, &uniform);
        let mut dynamics = DynamicsDataset::new(d, features.n_states(), horizon);
        let mut covariances = CovariancePair::new(d, horizon, params.lambda_r, params.lambda_p);
        let mut feedback = Vec::with_capacity(episodes);
        let mut log = RegretLog::new(v_star);
        for k in 1..=episodes {
            let ep = sample_episode(env, &uniform, noise, &mut streams.stream("warmup", k as u64))?;
            for (h, &(x, a)) in ep.trajectory.iter().enumerate() {
                covariances.update_step(h, features.phi(x, a))?;
            }
            dynamics.push_episode(k, features, &ep)?;
            log.push(-1, -1, None, uniform_value);
            feedback.push(ep);
        }
        let warmup_covs = (0..horizon).map(|h| covariances.step(h).clone()).collect();
        let known = KnownSets::compute(features, warmup_covs, params.beta_w);
        Ok(WarmupOutcome { dynamics, covariances, known, episodes, feedback, log })
    }
}
