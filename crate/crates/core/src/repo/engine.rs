//! The REPO episode loop shared by the linear and tabular variants.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    backup_operator, build_sigma_zeta, det_doubled, estimate_theta, sample_gaussian, CovariancePair,
    DynamicsDataset, RewardDataset, ThetaEstimate,
};
use crate::harness::record::{ExperimentRecord, RegretLog};
use crate::mdp::{
    optimal_policy, policy_value, sample_categorical, sample_episode, EpisodeFeedback, FeatureMap, LinearMdp,
    MarkovPolicy, RewardNoise,
};
use crate::rng::Streams;

use super::known::{KnownSets, UniformWarmup, WarmupOutcome, WarmupRoutine};
use super::params::{RepoMode, RepoParams};
use super::softmax::{Hedge, SoftmaxPolicy};

/// One member's policy-evaluation output for a single episode.
#[derive(Debug, Clone, PartialEq)]
pub struct PoMember {
    pub weights: Vec<DVector<f64>>,
    /// `Q̂_h(x,a)` as `[h][x * A + a]`.
    pub q: Vec<Vec<f64>>,
    /// `V̂_h(x)` for `h = 0..=H`.
    pub v: Vec<Vec<f64>>,
}

/// Estimates shared by all members within one episode.
#[derive(Debug, Clone)]
pub struct PoInputs {
    pub theta: ThetaEstimate,
    pub operators: Vec<DMatrix<f64>>,
}

/// Evaluates `policy` against the perturbed model of one member.
///
/// With `known = Some(z)`, `Q̂_h(x,·)` is zeroed for `x ∉ Z_h`.
pub fn po_backward_pass(
    features: &FeatureMap,
    inputs: &PoInputs,
    zeta: &DVector<f64>,
    policy: &MarkovPolicy,
    known: Option<&KnownSets>,
) -> PoMember {
    let (d, n_x, n_a, horizon) = (features.dim(), features.n_states(), features.n_actions(), features.horizon());
    let mut weights = vec![DVector::zeros(d); horizon];
    let mut q = vec![vec![0.0; n_x * n_a]; horizon];
    let mut v = vec![vec![0.0; n_x]; horizon + 1];
    for h in (0..horizon).rev() {
        let next = DVector::from_column_slice(&v[h + 1]);
        let w = &inputs.theta.blocks[h] + zeta.rows(h * d, d) + &inputs.operators[h] * next;
        for x in 0..n_x {
            if known.is_some_and(|z| !z.contains(h, x)) {
                continue;
            }
            let row = policy.row(h, x);
            let mut value = 0.0;
            for a in 0..n_a {
                let qa = features.phi(x, a).dot(&w);
                q[h][x * n_a + a] = qa;
                value += row[a] * qa;
            }
            v[h][x] = value;
        }
        weights[h] = w;
    }
    PoMember { weights, q, v }
}

/// Everything decided for one episode before the environment is touched.
#[derive(Debug, Clone)]
pub struct RepoStep {
    /// One-based episode index.
    pub episode: usize,
    pub epoch: usize,
    pub epoch_started: bool,
    /// Zero-based `i_k`.
    pub member: usize,
    /// `p^k` before the Hedge update.
    pub hedge: Vec<f64>,
    /// `π^{k,i}` before the mirror-descent update, for every member.
    pub policies: Vec<MarkovPolicy>,
    pub members: Vec<PoMember>,
    pub inputs: PoInputs,
}

impl RepoStep {
    pub fn played_policy(&self) -> &MarkovPolicy {
        &self.policies[self.member]
    }

    pub fn v_hat(&self, features: &FeatureMap) -> f64 {
        self.members[self.member].v[0][features.initial_state()]
    }
}

/// Online REPO learner state after the warm-up.
#[derive(Debug, Clone)]
pub struct RepoEngine {
    params: RepoParams,
    features: FeatureMap,
    known: Option<KnownSets>,
    cov: CovariancePair,
    snapshot: CovariancePair,
    rewards: RewardDataset,
    dynamics: DynamicsDataset,
    frozen_dynamics: DynamicsDataset,
    policies: Vec<SoftmaxPolicy>,
    hedge: Hedge,
    zetas: Vec<DVector<f64>>,
    epoch: Option<usize>,
    epoch_start: usize,
}

impl RepoEngine {
    /// Linear mode requires a warm-up outcome; tabular mode ignores it.
    pub fn new(features: FeatureMap, params: RepoParams, warmup: Option<&WarmupOutcome>) -> Result<Self> {
        let (d, horizon, n_x, n_a) = (features.dim(), features.horizon(), features.n_states(), features.n_actions());
        let fresh = CovariancePair::new(d, horizon, params.lambda_r, params.lambda_p);
        let (cov, dynamics, known) = match (params.mode, warmup) {
            (RepoMode::Linear, Some(w)) => (w.covariances.clone(), w.dynamics.clone(), Some(w.known.clone())),
            (RepoMode::Linear, None) => {
                return Err(Error::Config("linear REPO needs a warm-up outcome".into()));
            }
            (RepoMode::Tabular, _) => (fresh.clone(), DynamicsDataset::new(d, n_x, horizon), None),
        };
        let m = params.m;
        Ok(Self {
            snapshot: cov.clone(),
            frozen_dynamics: dynamics.clone(),
            rewards: RewardDataset::new(d * horizon),
            policies: vec![SoftmaxPolicy::uniform(n_x, n_a, horizon); m],
            hedge: Hedge::uniform(m),
            zetas: vec![DVector::zeros(d * horizon); m],
            epoch: None,
            epoch_start: 0,
            cov,
            dynamics,
            known,
            features,
            params,
        })
    }

    pub fn params(&self) -> &RepoParams {
        &self.params
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn known(&self) -> Option<&KnownSets> {
        self.known.as_ref()
    }

    pub fn covariances(&self) -> &CovariancePair {
        &self.cov
    }

    pub fn snapshot(&self) -> &CovariancePair {
        &self.snapshot
    }

    /// Frozen perturbations of the current epoch.
    pub fn zetas(&self) -> &[DVector<f64>] {
        &self.zetas
    }

    pub fn hedge_probabilities(&self) -> Vec<f64> {
        self.hedge.probabilities()
    }

    pub fn member_policy(&self, i: usize) -> MarkovPolicy {
        self.policies[i].policy()
    }

    pub fn member_logits(&self, i: usize) -> &[f64] {
        self.policies[i].logits()
    }

    /// Zero-based current epoch, `None` before the first.
    pub fn epoch(&self) -> Option<usize> {
        self.epoch
    }

    pub fn epoch_start(&self) -> usize {
        self.epoch_start
    }

    /// Number of epochs started so far.
    pub fn epochs(&self) -> usize {
        self.epoch.map_or(0, |e| e + 1)
    }

    pub fn needs_new_epoch(&self) -> bool {
        self.epoch.is_none() || det_doubled(&self.cov, &self.snapshot)
    }

    /// Starts a new epoch at episode `k`: snapshot, fresh frozen noise, uniform weights.
    pub fn epoch_begin<R: rand::Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> Result<()> {
        self.epoch = Some(self.epoch.map_or(0, |e| e + 1));
        self.epoch_start = k;
        self.snapshot = self.cov.clone();
        if self.params.mode == RepoMode::Tabular {
            self.frozen_dynamics = self.dynamics.clone();
        }
        let sigma = build_sigma_zeta(&self.snapshot, self.params.effective_beta_r(), self.params.effective_beta_p())?;
        self.zetas = sample_gaussian(&sigma, self.params.m, rng)?;
        self.policies.iter_mut().for_each(SoftmaxPolicy::reset);
        self.hedge.reset();
        Ok(())
    }

    pub fn inputs(&self) -> Result<PoInputs> {
        let theta = estimate_theta(&self.cov, &self.rewards)?;
        let (cov, data) = match self.params.mode {
            RepoMode::Linear => (&self.cov, &self.dynamics),
            RepoMode::Tabular => (&self.snapshot, &self.frozen_dynamics),
        };
        let operators = (0..self.features.horizon())
            .map(|h| backup_operator(cov, data, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(PoInputs { theta, operators })
    }

    /// Epoch check, member draw, evaluation of all members and the weight updates.
    ///
    /// The returned step carries the pre-update policies; the caller plays
    /// `step.played_policy()` and then calls [`RepoEngine::observe`].
    pub fn step(&mut self, k: usize, streams: &Streams) -> Result<RepoStep> {
        let epoch_started = self.needs_new_epoch();
        if epoch_started {
            self.epoch_begin(k, &mut streams.stream("noise", k as u64))?;
        }
        let hedge = self.hedge.probabilities();
        let member = sample_categorical(&hedge, &mut streams.stream("select", k as u64));
        let policies: Vec<MarkovPolicy> = self.policies.iter().map(SoftmaxPolicy::policy).collect();
        let inputs = self.inputs()?;
        let known = self.known.as_ref();
        let members: Vec<PoMember> = self
            .zetas
            .par_iter()
            .zip(policies.par_iter())
            .map(|(zeta, pi)| po_backward_pass(&self.features, &inputs, zeta, pi, known))
            .collect();
        self.check_ceiling(k, &members)?;
        let starts: Vec<f64> = members.iter().map(|m| m.v[0][self.features.initial_state()]).collect();
        for (pol, est) in self.policies.iter_mut().zip(&members) {
            pol.update(&est.q, self.params.eta_o);
        }
        self.hedge.update(&starts, self.params.eta_x);
        Ok(RepoStep {
            episode: k,
            epoch: self.epoch.unwrap_or(0),
            epoch_started,
            member,
            hedge,
            policies,
            members,
            inputs,
        })
    }

    fn check_ceiling(&self, k: usize, members: &[PoMember]) -> Result<()> {
        let ceiling = self.params.safety_factor * self.params.effective_beta_q();
        for (i, est) in members.iter().enumerate() {
            for (h, row) in est.q.iter().enumerate() {
                if let Some((idx, q)) = row.iter().enumerate().find(|(_, q)| !(q.abs() <= ceiling)) {
                    let n_a = self.features.n_actions();
                    return Err(Error::NumericalAbort(format!(
                        "episode {k}, member {}, step {}, state {}, action {}: |Q̂| = {} exceeds {} = {}·β_Q",
                        i + 1,
                        h + 1,
                        idx / n_a,
                        idx % n_a,
                        q.abs(),
                        ceiling,
                        self.params.safety_factor
                    )));
                }
            }
        }
        Ok(())
    }

    /// Adds a finished main-phase episode to the running datasets.
    pub fn observe(&mut self, index: usize, episode: &EpisodeFeedback) -> Result<()> {
        self.cov.update(&self.features, episode)?;
        self.rewards.push_episode(index, &self.features, episode)?;
        self.dynamics.push_episode(index, &self.features, episode)
    }
}

/// What an inspector sees after each main-phase episode.
#[derive(Debug)]
pub struct RepoTrace<'a> {
    pub step: &'a RepoStep,
    pub engine: &'a RepoEngine,
    pub record: &'a ExperimentRecord,
}

/// Result of a full REPO run.
#[derive(Debug, Clone)]
pub struct RepoRun {
    /// Warm-up rows first, then one row per main-phase episode.
    pub records: Vec<ExperimentRecord>,
    pub epochs: usize,
    /// `k_0`, the number of warm-up episodes (0 in tabular mode).
    pub warmup_episodes: usize,
}

pub fn run(env: &LinearMdp, episodes: usize, params: &RepoParams, noise: RewardNoise, streams: &Streams) -> Result<RepoRun> {
    run_inspected(env, episodes, params, noise, streams, &UniformWarmup, |_| Ok(()))
}

/// [`run`] with a pluggable warm-up and a hook invoked after every main-phase episode.
pub fn run_inspected<W, F>(
    env: &LinearMdp,
    episodes: usize,
    params: &RepoParams,
    noise: RewardNoise,
    streams: &Streams,
    warmup: &W,
    mut inspect: F,
) -> Result<RepoRun>
where
    W: WarmupRoutine + ?Sized,
    F: FnMut(&RepoTrace<'_>) -> Result<()>,
{
    env.ensure_valid()?;
    if episodes == 0 {
        return Err(Error::Config("episode budget must be at least 1".into()));
    }
    params.validate(episodes)?;
    let features = env.features();
    if features.n_actions() > 1 && params.eta_o == 0.0 {
        return Err(Error::Parameter("η_o must be positive when |A| > 1".into()));
    }
    let v_star = optimal_policy(env).value;
    let (mut engine, mut log, k0) = match params.mode {
        RepoMode::Linear => {
            let out = warmup.run(env, params, episodes, noise, streams, v_star)?;
            let engine = RepoEngine::new(features.clone(), params.clone(), Some(&out))?;
            (engine, out.log, out.episodes)
        }
        RepoMode::Tabular => (RepoEngine::new(features.clone(), params.clone(), None)?, RegretLog::new(v_star), 0),
    };
    for k in k0 + 1..=episodes {
        let step = engine.step(k, streams)?;
        let policy = step.played_policy();
        let feedback = sample_episode(env, policy, noise, &mut streams.stream("episode", k as u64))?;
        let v_pik = policy_value(env, policy);
        let record = log.push(step.epoch as i64, step.member as i64 + 1, Some(step.v_hat(features)), v_pik).clone();
        inspect(&RepoTrace { step: &step, engine: &engine, record: &record })?;
        engine.observe(k, &feedback)?;
    }
    Ok(RepoRun { records: log.into_records(), epochs: engine.epochs(), warmup_episodes: k0 })
}

/// `3dH·ln(2K)`.
pub fn epoch_bound(d: usize, horizon: usize, episodes: usize) -> f64 {
    3.0 * d as f64 * horizon as f64 * (2.0 * episodes as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::TabularMdp;

    fn chain() -> LinearMdp {
        // 3 states, 2 actions, H = 3; action 1 drifts right, state 2 pays.
        let (n_x, n_a, horizon) = (3, 2, 3);
        let mut p = vec![0.0; n_x * n_a * n_x];
        for x in 0..n_x {
            p[(x * n_a) * n_x + x.saturating_sub(1)] += 0.8;
            p[(x * n_a) * n_x + x] += 0.2;
            p[(x * n_a + 1) * n_x + (x + 1).min(2)] += 0.7;
            p[(x * n_a + 1) * n_x + x] += 0.3;
        }
        let r = vec![0.1, 0.0, 0.2, 0.1, 0.9, 0.8];
        TabularMdp::new(n_x, n_a, horizon, 0, vec![p; horizon], vec![r; horizon]).unwrap().one_hot_encode()
    }

    fn tabular_params(env: &LinearMdp, k: usize) -> RepoParams {
        RepoParams::compute_tabular(env.dim(), env.horizon(), k, 0.1, env.n_actions())
            .unwrap()
            .with_bonus_scale(0.01)
            .unwrap()
            .with_ensemble_size(4)
            .unwrap()
            .with_learning_rates(0.5, 0.5)
            .unwrap()
    }

    #[test]
    fn unknown_states_have_zero_q() {
        let env = chain();
        let f = env.features();
        let warm: Vec<_> = (0..f.horizon()).map(|_| crate::estimators::RidgeCovariance::new(f.dim(), 1.0)).collect();
        // Threshold 1/(2·0.2·3) < 1 = ‖φ‖ under the bare ridge, so nothing is known.
        let none = KnownSets::compute(f, warm, 0.2);
        let cov = CovariancePair::new(f.dim(), f.horizon(), 3.0, 1.0);
        let rewards = RewardDataset::new(f.dim() * f.horizon());
        let dynamics = DynamicsDataset::new(f.dim(), f.n_states(), f.horizon());
        let inputs = PoInputs {
            theta: estimate_theta(&cov, &rewards).unwrap(),
            operators: (0..3).map(|h| backup_operator(&cov, &dynamics, h).unwrap()).collect(),
        };
        let zeta = DVector::from_element(f.dim() * f.horizon(), 5.0);
        let pi = MarkovPolicy::uniform(3, 2, 3);
        let out = po_backward_pass(f, &inputs, &zeta, &pi, Some(&none));
        assert!(out.q.iter().flatten().all(|&q| q == 0.0));
        let all = po_backward_pass(f, &inputs, &zeta, &pi, None);
        // Constant Q over actions under uniform π gives V = that constant.
        assert!(all.q[2].iter().all(|&q| q == 5.0));
        assert!(all.v[2].iter().all(|&v| v == 5.0));
    }

    fn oracle_values(
        env: &LinearMdp,
        frozen: &[EpisodeFeedback],
        theta: &ThetaEstimate,
        zeta: &DVector<f64>,
        pi: &MarkovPolicy,
    ) -> Vec<Vec<f64>> {
        let (n_x, n_a, horizon) = (env.n_states(), env.n_actions(), env.horizon());
        let d = n_x * n_a;
        let mut counts = vec![vec![0.0; d * n_x]; horizon];
        let mut visits = vec![vec![0.0; d]; horizon];
        for ep in frozen {
            for (h, &(x, a)) in ep.trajectory.iter().enumerate() {
                counts[h][(x * n_a + a) * n_x + ep.next_state(h)] += 1.0;
                visits[h][x * n_a + a] += 1.0;
            }
        }
        let mut v = vec![vec![0.0; n_x]; horizon + 1];
        for h in (0..horizon).rev() {
            for x in 0..n_x {
                let mut total = 0.0;
                for a in 0..n_a {
                    let j = x * n_a + a;
                    let mut q = theta.blocks[h][j] + zeta[h * d + j];
                    for y in 0..n_x {
                        q += counts[h][j * n_x + y] / (visits[h][j] + 1.0) * v[h + 1][y];
                    }
                    total += pi.prob(h, x, a) * q;
                }
                v[h][x] = total;
            }
        }
        v
    }

    #[test]
    fn tabular_mode_matches_substochastic_dp() {
        let env = chain();
        let f = env.features().clone();
        let episodes = 300;
        let params = tabular_params(&env, episodes);
        let streams = Streams::new(17);
        let mut engine = RepoEngine::new(f.clone(), params, None).unwrap();
        let mut history = Vec::new();
        let mut checked = 0;
        for k in 1..=episodes {
            let step = engine.step(k, &streams).unwrap();
            if k % 25 == 0 || step.epoch_started {
                let frozen = &history[..engine.epoch_start() - 1];
                for (i, est) in step.members.iter().enumerate() {
                    let oracle = oracle_values(&env, frozen, &step.inputs.theta, &engine.zetas()[i], &step.policies[i]);
                    for (a, b) in est.v.iter().flatten().zip(oracle.iter().flatten()) {
                        assert!((a - b).abs() <= 1e-10, "episode {k}: {a} vs {b}");
                    }
                }
                for (h, op) in step.inputs.operators.iter().enumerate() {
                    for phi in f.all() {
                        let row = phi.transpose() * op;
                        assert!(row.iter().all(|&p| p >= 0.0), "step {h}");
                        assert!(row.sum() <= 1.0 + 1e-12);
                    }
                }
                checked += 1;
            }
            let fb = sample_episode(&env, step.played_policy(), RewardNoise::Bernoulli, &mut streams.stream("episode", k as u64))
                .unwrap();
            engine.observe(k, &fb).unwrap();
            history.push(fb);
        }
        assert!(checked > 12);
        assert!(engine.epochs() >= 2);
    }

    #[test]
    fn epochs_freeze_noise_and_reset_weights() {
        let env = chain();
        let episodes = 400;
        let params = tabular_params(&env, episodes);
        let mut last_zetas: Option<Vec<DVector<f64>>> = None;
        let mut epochs_seen = Vec::new();
        let out = run_inspected(&env, episodes, &params, RewardNoise::Bernoulli, &Streams::new(5), &UniformWarmup, |t| {
            let step = t.step;
            if step.episode == 1 {
                assert!(step.epoch_started && step.epoch == 0);
            }
            if step.epoch_started {
                epochs_seen.push(step.epoch);
                let m = step.hedge.len() as f64;
                assert!(step.hedge.iter().all(|&p| p == 1.0 / m));
                for pi in &step.policies {
                    assert!(pi.as_slice().iter().all(|&p| p == 0.5));
                }
            } else {
                assert_eq!(last_zetas.as_deref(), Some(t.engine.zetas()));
            }
            assert!((step.hedge.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(step.policies.iter().all(|p| p.max_row_sum_error() < 1e-9));
            last_zetas = Some(t.engine.zetas().to_vec());
            Ok(())
        })
        .unwrap();
        assert_eq!(epochs_seen, (0..out.epochs).collect::<Vec<_>>());
        assert!((out.epochs as f64) <= epoch_bound(env.dim(), env.horizon(), episodes));
        assert_eq!(out.records.len(), episodes);
        assert_eq!(out.warmup_episodes, 0);
    }

    #[test]
    fn policies_equal_softmax_of_summed_q() {
        let env = chain();
        let episodes = 120;
        let params = tabular_params(&env, episodes);
        let eta = params.eta_o;
        let mut sums: Vec<Vec<Vec<f64>>> = Vec::new();
        run_inspected(&env, episodes, &params, RewardNoise::Bernoulli, &Streams::new(9), &UniformWarmup, |t| {
            let step = t.step;
            if step.epoch_started {
                sums = vec![vec![vec![0.0; 6]; 3]; step.members.len()];
            }
            for (i, pi) in step.policies.iter().enumerate() {
                for h in 0..3 {
                    for x in 0..3 {
                        let mut row: Vec<f64> = (0..2).map(|a| eta * sums[i][h][x * 2 + a]).collect();
                        softmax_closed(&mut row);
                        for a in 0..2 {
                            assert!((row[a] - pi.prob(h, x, a)).abs() < 1e-9);
                        }
                    }
                }
                for (h, q) in step.members[i].q.iter().enumerate() {
                    sums[i][h].iter_mut().zip(q).for_each(|(s, v)| *s += v);
                }
            }
            Ok(())
        })
        .unwrap();
    }

    fn softmax_closed(z: &mut [f64]) {
        let total: f64 = z.iter().map(|v| v.exp()).sum();
        z.iter_mut().for_each(|v| *v = v.exp() / total);
    }

    #[test]
    fn single_member_hedge_is_vacuous() {
        let env = chain();
        let params = tabular_params(&env, 60).with_ensemble_size(1).unwrap();
        let out = run_inspected(&env, 60, &params, RewardNoise::Bernoulli, &Streams::new(1), &UniformWarmup, |t| {
            assert_eq!(t.step.hedge, vec![1.0]);
            assert_eq!(t.step.member, 0);
            Ok(())
        })
        .unwrap();
        assert!(out.records.iter().all(|r| r.member == 1));
    }

    #[test]
    fn point_mass_hedge_picks_that_member() {
        let env = chain();
        let mut engine = RepoEngine::new(env.features().clone(), tabular_params(&env, 10), None).unwrap();
        let streams = Streams::new(4);
        engine.step(1, &streams).unwrap();
        engine.hedge.update(&[0.0, 0.0, 1e6, 0.0], 1.0);
        for k in 2..20 {
            assert_eq!(engine.hedge_probabilities()[2], 1.0);
            let hedge = engine.hedge_probabilities();
            assert_eq!(sample_categorical(&hedge, &mut streams.stream("select", k)), 2);
        }
    }

    #[test]
    fn uniform_member_draws() {
        let m = 4;
        let streams = Streams::new(8);
        let p = vec![1.0 / m as f64; m];
        let n = 10_000;
        let mut freq = vec![0usize; m];
        for k in 0..n {
            freq[sample_categorical(&p, &mut streams.stream("select", k))] += 1;
        }
        let tol = 4.0 * (1.0 / (4.0 * n as f64 * m as f64)).sqrt();
        for c in &freq {
            assert!((*c as f64 / n as f64 - 0.25).abs() <= tol, "{freq:?}");
        }
        let expected = n as f64 / m as f64;
        let chi2: f64 = freq.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 0.999 quantile of χ² with 3 degrees of freedom.
        assert!(chi2 < 16.266, "χ² = {chi2}");
    }

    #[test]
    fn single_action_linear_run_has_no_main_phase_regret() {
        let p = vec![vec![0.5, 0.5, 0.5, 0.5]; 2];
        let env = TabularMdp::new(2, 1, 2, 0, p, vec![vec![0.3, 0.6]; 2]).unwrap().one_hot_encode();
        let episodes = 100;
        let mut params = RepoParams::compute_linear(env.dim(), 2, episodes, 0.1, 1)
            .unwrap()
            .with_bonus_scale(1e-3)
            .unwrap()
            .with_ensemble_size(3)
            .unwrap();
        params.eta_x = 0.1;
        let out = run(&env, episodes, &params, RewardNoise::Bernoulli, &Streams::new(3)).unwrap();
        assert_eq!(out.warmup_episodes, 10);
        assert_eq!(out.records.len(), episodes);
        let last = out.records.last().unwrap();
        assert!(last.cum_regret.abs() < 1e-12);
        assert!(last.cum_regret <= 2.0 * out.warmup_episodes as f64);
        assert!(out.records[..10].iter().all(|r| r.epoch == -1 && r.member == -1));
        assert_eq!(out.records[10].epoch, 0);
    }

    #[test]
    fn safety_ceiling_aborts() {
        let env = chain();
        let mut params = tabular_params(&env, 50).with_bonus_scale(1.0).unwrap();
        params.safety_factor = 1e-12;
        let err = run(&env, 50, &params, RewardNoise::Bernoulli, &Streams::new(2)).unwrap_err();
        assert!(matches!(err, Error::NumericalAbort(_)), "{err}");
    }

    #[test]
    fn same_seed_same_run() {
        let env = chain();
        let params = tabular_params(&env, 80);
        let a = run(&env, 80, &params, RewardNoise::Bernoulli, &Streams::new(6)).unwrap();
        let b = run(&env, 80, &params, RewardNoise::Bernoulli, &Streams::new(6)).unwrap();
        assert_eq!(a.records, b.records);
    }
}
