use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::sample_categorical;
use super::{LinearMdp, MarkovPolicy};
use crate::error::{Error, Result};

/// How per-step rewards are drawn around their means.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardNoise {
    /// `r_h ~ Bernoulli(r_h(x_h, a_h))`.
    #[default]
    Bernoulli,
    /// `r_h = r_h(x_h, a_h)`.
    Deterministic,
}

/// One episode as seen by the learner: the trajectory and the summed reward.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeFeedback {
    /// `(x_h, a_h)` for `h = 1..H`.
    pub trajectory: Vec<(usize, usize)>,
    /// `x_{H+1}`.
    pub terminal_state: usize,
    /// Aggregate reward `v = Σ_h r_h ∈ [0, H]`.
    pub v: f64,
}

impl EpisodeFeedback {
    pub fn horizon(&self) -> usize {
        self.trajectory.len()
    }

    /// `x_{h+1}` for zero-based step `h`.
    pub fn next_state(&self, h: usize) -> usize {
        self.trajectory.get(h + 1).map_or(self.terminal_state, |&(x, _)| x)
    }
}

/// Rolls out `policy` for one episode; only the aggregate reward is returned.
pub fn sample_episode<R: Rng + ?Sized>(
    mdp: &LinearMdp,
    policy: &MarkovPolicy,
    noise: RewardNoise,
    rng: &mut R,
) -> Result<EpisodeFeedback> {
    if policy.n_states() != mdp.n_states()
        || policy.n_actions() != mdp.n_actions()
        || policy.horizon() != mdp.horizon()
    {
        return Err(Error::Config(format!(
            "policy shape ({}, {}, {}) does not match environment ({}, {}, {})",
            policy.n_states(),
            policy.n_actions(),
            policy.horizon(),
            mdp.n_states(),
            mdp.n_actions(),
            mdp.horizon()
        )));
    }
    let mut x = mdp.initial_state();
    let mut trajectory = Vec::with_capacity(mdp.horizon());
    let mut v = 0.0;
    for h in 0..mdp.horizon() {
        let a = policy.sample_action(h, x, rng);
        let mean = mdp.reward(h, x, a);
        v += match noise {
            RewardNoise::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            RewardNoise::Deterministic => mean,
        };
        trajectory.push((x, a));
        x = sample_categorical(mdp.transition(h, x, a), rng);
    }
    Ok(EpisodeFeedback { trajectory, terminal_state: x, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{exact_value, TabularMdp};
    use crate::rng::Streams;

    fn constant_chain(horizon: usize, reward: f64) -> LinearMdp {
        TabularMdp::new(2, 1, horizon, 0, vec![vec![0.0, 1.0, 1.0, 0.0]; horizon], vec![vec![reward; 2]; horizon])
            .unwrap()
            .one_hot_encode()
    }

    #[test]
    fn all_ones_reward_gives_horizon() {
        let mdp = constant_chain(5, 1.0);
        let pi = MarkovPolicy::uniform(2, 1, 5);
        for seed in 0..20 {
            let ep = sample_episode(&mdp, &pi, RewardNoise::Bernoulli, &mut Streams::new(seed).stream("e", 0)).unwrap();
            assert_eq!(ep.v, 5.0);
            assert_eq!(ep.trajectory.len(), 5);
            assert_eq!(ep.trajectory[0].0, 0);
            assert_eq!(ep.trajectory[1].0, 1);
        }
    }

    #[test]
    fn all_zero_reward_gives_zero() {
        let mdp = constant_chain(3, 0.0);
        let pi = MarkovPolicy::uniform(2, 1, 3);
        let ep = sample_episode(&mdp, &pi, RewardNoise::Bernoulli, &mut Streams::new(9).stream("e", 0)).unwrap();
        assert_eq!(ep.v, 0.0);
    }

    #[test]
    fn shape_mismatch_is_a_config_error() {
        let mdp = constant_chain(3, 0.0);
        let pi = MarkovPolicy::uniform(2, 2, 3);
        let err = sample_episode(&mdp, &pi, RewardNoise::Bernoulli, &mut Streams::new(0).stream("e", 0));
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn monte_carlo_mean_matches_exact_value() {
        // Two states, two actions, stochastic dynamics, mean rewards 0.5.
        let horizon = 3;
        let p = vec![0.3, 0.7, 0.6, 0.4, 0.5, 0.5, 0.9, 0.1];
        let mdp = TabularMdp::new(2, 2, horizon, 0, vec![p; horizon], vec![vec![0.5, 0.5, 0.5, 0.5]; horizon])
            .unwrap()
            .one_hot_encode();
        let pi = MarkovPolicy::uniform(2, 2, horizon);
        let exact = exact_value(&mdp, &pi).start_value(&mdp);
        let n = 100_000;
        let mut rng = Streams::new(123).stream("episodes", 0);
        let mean = (0..n)
            .map(|_| sample_episode(&mdp, &pi, RewardNoise::Bernoulli, &mut rng).unwrap().v)
            .sum::<f64>()
            / n as f64;
        let h = horizon as f64;
        let tol = 4.0 * (h * h / 4.0 / n as f64).sqrt();
        assert!((mean - exact).abs() <= tol, "mean {mean} exact {exact} tol {tol}");
        // Three sigma with the true Bernoulli variance H/4 also holds.
        assert!((mean - exact).abs() <= 3.0 * (h / 4.0 / n as f64).sqrt());
    }
}
