//! Seeded execution of one algorithm on one environment.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{optimal_policy, policy_value, LinearMdp, MarkovPolicy, RewardNoise};
use crate::properties::optimism_rate;
use crate::relsvi::{self, RelsviParams};
use crate::repo::{self, RepoParams, UniformWarmup};
use crate::rng::Streams;

use super::record::{ExperimentRecord, RegretLog};

/// Tolerance used when counting optimistic episodes.
pub const OPTIMISM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Relsvi,
    RepoLinear,
    RepoTabular,
    UniformBaseline,
    OptimalOracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Relsvi, Algorithm::RepoLinear, Algorithm::RepoTabular, Algorithm::UniformBaseline, Algorithm::OptimalOracle];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Relsvi => "relsvi",
            Algorithm::RepoLinear => "repo-linear",
            Algorithm::RepoTabular => "repo-tabular",
            Algorithm::UniformBaseline => "uniform-baseline",
            Algorithm::OptimalOracle => "optimal-oracle",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Optional replacements for theoretical hyper-parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub eta_o: Option<f64>,
    pub eta_x: Option<f64>,
    pub beta_w: Option<f64>,
    pub eps_cov: Option<f64>,
    pub ensemble_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    /// How the environment was specified (file path or `gen:` string).
    pub env: String,
    pub episodes: usize,
    pub delta: f64,
    pub seed: u64,
    pub bonus_scale: f64,
    pub noise: RewardNoise,
    #[serde(default)]
    pub overrides: Overrides,
    /// Fill `wall_ms`; otherwise it is written as 0 so output is reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, env: impl Into<String>, episodes: usize, seed: u64) -> Self {
        Self {
            algorithm,
            env: env.into(),
            episodes,
            delta: 0.1,
            seed,
            bonus_scale: 1.0,
            noise: RewardNoise::Bernoulli,
            overrides: Overrides::default(),
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("δ = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.bonus_scale > 0.0 && self.bonus_scale.is_finite()) {
            return Err(Error::Config(format!("bonus scale {} must be positive", self.bonus_scale)));
        }
        Ok(())
    }

    pub fn relsvi_params(&self, env: &LinearMdp) -> Result<RelsviParams> {
        let mut p = RelsviParams::compute(env.dim(), env.horizon(), self.episodes, self.delta)?
            .with_bonus_scale(self.bonus_scale)?;
        if let Some(m) = self.overrides.ensemble_size {
            p = p.with_ensemble_size(m)?;
        }
        Ok(p)
    }

    pub fn repo_params(&self, env: &LinearMdp) -> Result<RepoParams> {
        let compute = match self.algorithm {
            Algorithm::RepoTabular => RepoParams::compute_tabular,
            _ => RepoParams::compute_linear,
        };
        let mut p = compute(env.dim(), env.horizon(), self.episodes, self.delta, env.n_actions())?
            .with_bonus_scale(self.bonus_scale)?;
        if let Some(m) = self.overrides.ensemble_size {
            p = p.with_ensemble_size(m)?;
        }
        let o = &self.overrides;
        if o.eta_o.is_some() || o.eta_x.is_some() {
            let (eta_o, eta_x) = (o.eta_o.unwrap_or(p.eta_o), o.eta_x.unwrap_or(p.eta_x));
            p = p.with_learning_rates(eta_o, eta_x)?;
        }
        if let Some(b) = o.beta_w {
            p.beta_w = b;
        }
        if let Some(e) = o.eps_cov {
            p.eps_cov = e;
        }
        Ok(p)
    }
}

/// Aggregate numbers reported next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub env: String,
    pub seed: u64,
    pub episodes: usize,
    pub v_star: f64,
    pub final_regret: f64,
    /// Cumulative regret after `⌊K/2⌋` episodes.
    pub regret_at_half: f64,
    pub epochs: Option<usize>,
    pub optimism_rate: Option<f64>,
    pub warmup_episodes: usize,
    /// `H · k_0`.
    pub warmup_regret_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub summary: Summary,
}

/// Runs `config` on an already-built environment.
pub fn run_experiment(config: &ExperimentConfig, env: &LinearMdp) -> Result<ExperimentOutput> {
    config.validate()?;
    env.ensure_valid()?;
    let streams = Streams::new(config.seed);
    let v_star = optimal_policy(env).value;
    let mut clock = Instant::now();
    let mut times: Vec<f64> = Vec::new();
    let mut tick = || {
        let now = Instant::now();
        times.push(now.duration_since(clock).as_secs_f64() * 1e3);
        clock = now;
    };
    let (mut records, epochs, warmup) = match config.algorithm {
        Algorithm::Relsvi => {
            let params = config.relsvi_params(env)?;
            let records = relsvi::run_inspected(env, config.episodes, &params, config.noise, &streams, |_| {
                tick();
                Ok(())
            })?;
            (records, None, 0)
        }
        Algorithm::RepoLinear | Algorithm::RepoTabular => {
            let params = config.repo_params(env)?;
            let out = repo::run_inspected(env, config.episodes, &params, config.noise, &streams, &UniformWarmup, |_| {
                tick();
                Ok(())
            })?;
            (out.records, Some(out.epochs), out.warmup_episodes)
        }
        Algorithm::UniformBaseline | Algorithm::OptimalOracle => {
            let policy = match config.algorithm {
                Algorithm::OptimalOracle => optimal_policy(env).policy,
                _ => MarkovPolicy::uniform(env.n_states(), env.n_actions(), env.horizon()),
            };
            let value = policy_value(env, &policy);
            let mut log = RegretLog::new(v_star);
            for _ in 0..config.episodes {
                log.push(-1, -1, None, value);
                tick();
            }
            (log.into_records(), None, 0)
        }
    };
    if config.record_timing {
        let offset = records.len() - times.len();
        for (r, t) in records[offset..].iter_mut().zip(&times) {
            r.wall_ms = *t;
        }
    }
    let summary = Summary {
        algorithm: config.algorithm,
        env: config.env.clone(),
        seed: config.seed,
        episodes: config.episodes,
        v_star,
        final_regret: records.last().map_or(0.0, |r| r.cum_regret),
        regret_at_half: cumulative_at(&records, config.episodes / 2),
        epochs,
        optimism_rate: optimism_rate(&records, v_star, OPTIMISM_TOLERANCE),
        warmup_episodes: warmup,
        warmup_regret_bound: (env.horizon() * warmup) as f64,
    };
    Ok(ExperimentOutput { records, summary })
}

/// Cumulative regret after `k` episodes (0 for `k = 0`).
pub fn cumulative_at(records: &[ExperimentRecord], k: usize) -> f64 {
    if k == 0 { 0.0 } else { records.get(k - 1).map_or(f64::NAN, |r| r.cum_regret) }
}
