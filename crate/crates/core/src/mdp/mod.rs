//! Finite linear MDPs, their tabular special case, Markov policies, episode
//! simulation under aggregate feedback and exact policy evaluation.
//!
//! Horizon indices are zero-based in the API (`h = 0` is the first step);
//! human-readable diagnostics print them one-based.

mod policy;
mod simulate;
mod value;

pub use policy::{sample_categorical, MarkovPolicy};
pub use simulate::{sample_episode, EpisodeFeedback, RewardNoise};
pub use value::{exact_value, optimal_policy, policy_value, OptimalPolicy, ValueTable};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Negative transition probabilities at least this large are treated as rounding noise.
pub const NEGATIVE_TRANSITION_TOLERANCE: f64 = 1e-12;
/// Tolerance on the row sums of transition kernels.
pub const TRANSITION_SUM_TOLERANCE: f64 = 1e-9;

/// The feature map φ together with the state/action/horizon layout.
///
/// This is everything a learner is allowed to know about the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    dim: usize,
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    initial_state: usize,
    /// Row-major over `(x, a)`: entry `x * n_actions + a`.
    features: Vec<DVector<f64>>,
}

impl FeatureMap {
    pub fn new(
        dim: usize,
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        initial_state: usize,
        features: Vec<DVector<f64>>,
    ) -> Result<Self> {
        if dim == 0 || n_states == 0 || n_actions == 0 || horizon == 0 {
            return Err(Error::Config(format!(
                "dimensions must be positive (d={dim}, |X|={n_states}, |A|={n_actions}, H={horizon})"
            )));
        }
        if initial_state >= n_states {
            return Err(Error::Config(format!(
                "initial state {initial_state} out of range for {n_states} states"
            )));
        }
        if features.len() != n_states * n_actions {
            return Err(Error::Config(format!(
                "expected {} feature vectors, got {}",
                n_states * n_actions,
                features.len()
            )));
        }
        if let Some(bad) = features.iter().position(|f| f.len() != dim) {
            return Err(Error::Config(format!(
                "feature vector {bad} has length {} instead of {dim}",
                features[bad].len()
            )));
        }
        Ok(Self { dim, n_states, n_actions, horizon, initial_state, features })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    #[inline]
    pub fn phi(&self, x: usize, a: usize) -> &DVector<f64> {
        &self.features[x * self.n_actions + a]
    }

    pub fn all(&self) -> &[DVector<f64>] {
        &self.features
    }

    /// Concatenated trajectory features `(φ_1ᵀ, …, φ_Hᵀ)ᵀ ∈ R^{dH}`.
    pub fn concat(&self, trajectory: &[(usize, usize)]) -> DVector<f64> {
        let d = self.dim;
        let mut out = DVector::zeros(d * trajectory.len());
        for (h, &(x, a)) in trajectory.iter().enumerate() {
            out.rows_mut(h * d, d).copy_from(self.phi(x, a));
        }
        out
    }
}

/// A finite-state linear MDP with explicit `φ`, `θ_h` and `ψ_h` tables.
///
/// Rewards `r_h(x,a) = φ(x,a)ᵀθ_h` and transitions
/// `P_h(x'|x,a) = φ(x,a)ᵀψ_h(x')` are tabulated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMdp {
    features: FeatureMap,
    theta: Vec<DVector<f64>>,
    psi: Vec<Vec<DVector<f64>>>,
    rewards: Vec<Vec<f64>>,
    transitions: Vec<Vec<f64>>,
}

impl LinearMdp {
    /// `theta[h]` is `θ_h`; `psi[h][x']` is `ψ_h(x')`.
    pub fn new(features: FeatureMap, theta: Vec<DVector<f64>>, psi: Vec<Vec<DVector<f64>>>) -> Result<Self> {
        let (d, n_x, n_a, horizon) =
            (features.dim, features.n_states, features.n_actions, features.horizon);
        if theta.len() != horizon || psi.len() != horizon {
            return Err(Error::Config(format!(
                "expected {horizon} reward and dynamics blocks, got {} and {}",
                theta.len(),
                psi.len()
            )));
        }
        if theta.iter().any(|t| t.len() != d) {
            return Err(Error::Config(format!("reward weights must have length {d}")));
        }
        for (h, block) in psi.iter().enumerate() {
            if block.len() != n_x || block.iter().any(|p| p.len() != d) {
                return Err(Error::Config(format!(
                    "dynamics block {} must hold {n_x} vectors of length {d}",
                    h + 1
                )));
            }
        }

        let mut rewards = Vec::with_capacity(horizon);
        let mut transitions = Vec::with_capacity(horizon);
        for h in 0..horizon {
            let mut r = Vec::with_capacity(n_x * n_a);
            let mut p = Vec::with_capacity(n_x * n_a * n_x);
            for phi in &features.features {
                r.push(phi.dot(&theta[h]).clamp(0.0, 1.0));
                let start = p.len();
                let mut clamped = false;
                for next in &psi[h] {
                    let mut prob = phi.dot(next);
                    if prob < 0.0 {
                        clamped |= prob >= -NEGATIVE_TRANSITION_TOLERANCE;
                        prob = 0.0;
                    }
                    p.push(prob);
                }
                if clamped {
                    let row = &mut p[start..];
                    let total: f64 = row.iter().sum();
                    if total > 0.0 {
                        row.iter_mut().for_each(|q| *q /= total);
                    }
                }
            }
            rewards.push(r);
            transitions.push(p);
        }
        Ok(Self { features, theta, psi, rewards, transitions })
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn dim(&self) -> usize {
        self.features.dim
    }

    pub fn n_states(&self) -> usize {
        self.features.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.features.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.features.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.features.initial_state
    }

    pub fn theta(&self) -> &[DVector<f64>] {
        &self.theta
    }

    pub fn psi(&self) -> &[Vec<DVector<f64>>] {
        &self.psi
    }

    /// Mean reward `r_h(x,a)`, clamped to `[0,1]`.
    #[inline]
    pub fn reward(&self, h: usize, x: usize, a: usize) -> f64 {
        self.rewards[h][x * self.features.n_actions + a]
    }

    /// The distribution `P_h(·|x,a)` after clamping rounding noise.
    #[inline]
    pub fn transition(&self, h: usize, x: usize, a: usize) -> &[f64] {
        let n_x = self.features.n_states;
        let row = x * self.features.n_actions + a;
        &self.transitions[h][row * n_x..(row + 1) * n_x]
    }

    /// Checks every normalization assumption; an empty report means valid.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let f = &self.features;
        let d = f.dim as f64;
        let sqrt_d = d.sqrt();
        const SLACK: f64 = 1e-12;

        for x in 0..f.n_states {
            for a in 0..f.n_actions {
                let norm = f.phi(x, a).norm();
                if norm > 1.0 + SLACK {
                    report.push(ViolationKind::FeatureNorm, Some(x), Some(a), None, format!(
                        "‖φ({x},{a})‖ = {norm} > 1"
                    ));
                }
            }
        }
        for h in 0..f.horizon {
            let norm = self.theta[h].norm();
            if norm > sqrt_d + SLACK {
                report.push(ViolationKind::RewardWeightNorm, None, None, Some(h), format!(
                    "‖θ_{}‖ = {norm} > {sqrt_d}",
                    h + 1
                ));
            }
            let abs_sum = self.psi[h]
                .iter()
                .fold(DVector::zeros(f.dim), |acc: DVector<f64>, p| acc + p.abs());
            let norm = abs_sum.norm();
            if norm > sqrt_d + SLACK {
                report.push(ViolationKind::DynamicsNorm, None, None, Some(h), format!(
                    "‖Σ_x |ψ_{}(x)|‖ = {norm} > {sqrt_d}",
                    h + 1
                ));
            }
            for x in 0..f.n_states {
                for a in 0..f.n_actions {
                    let phi = f.phi(x, a);
                    let r = phi.dot(&self.theta[h]);
                    if !(-SLACK..=1.0 + SLACK).contains(&r) {
                        report.push(ViolationKind::RewardRange, Some(x), Some(a), Some(h), format!(
                            "r_{}({x},{a}) = {r} outside [0,1]",
                            h + 1
                        ));
                    }
                    let mut total = 0.0;
                    for (next, psi) in self.psi[h].iter().enumerate() {
                        let p = phi.dot(psi);
                        total += p;
                        if p < -NEGATIVE_TRANSITION_TOLERANCE {
                            report.push(ViolationKind::NegativeTransition, Some(x), Some(a), Some(h), format!(
                                "P_{}({next}|{x},{a}) = {p} < 0",
                                h + 1
                            ));
                        }
                    }
                    if (total - 1.0).abs() > TRANSITION_SUM_TOLERANCE {
                        report.push(ViolationKind::TransitionSum, Some(x), Some(a), Some(h), format!(
                            "Σ_x' P_{}(x'|{x},{a}) = {total} ≠ 1",
                            h + 1
                        ));
                    }
                }
            }
        }
        report
    }

    /// Fails with [`Error::InvalidModel`] unless [`validate`](Self::validate) is clean.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidModel(report.to_string()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    FeatureNorm,
    RewardWeightNorm,
    DynamicsNorm,
    RewardRange,
    NegativeTransition,
    TransitionSum,
}

/// One violated normalization assumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub state: Option<usize>,
    pub action: Option<usize>,
    /// Zero-based horizon index.
    pub step: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn push(
        &mut self,
        kind: ViolationKind,
        state: Option<usize>,
        action: Option<usize>,
        step: Option<usize>,
        message: String,
    ) {
        self.violations.push(Violation { kind, state, action, step, message });
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}", v.message)?;
        }
        Ok(())
    }
}

/// A finite-horizon tabular MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    initial_state: usize,
    /// `transitions[h][(x * A + a) * X + x']`.
    transitions: Vec<Vec<f64>>,
    /// `rewards[h][x * A + a]`.
    rewards: Vec<Vec<f64>>,
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        initial_state: usize,
        transitions: Vec<Vec<f64>>,
        rewards: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || horizon == 0 || initial_state >= n_states {
            return Err(Error::Config(format!(
                "bad tabular layout (|X|={n_states}, |A|={n_actions}, H={horizon}, x1={initial_state})"
            )));
        }
        if transitions.len() != horizon || rewards.len() != horizon {
            return Err(Error::Config(format!("expected {horizon} transition and reward tables")));
        }
        for h in 0..horizon {
            if transitions[h].len() != n_states * n_actions * n_states {
                return Err(Error::Config(format!("transition table {} has the wrong size", h + 1)));
            }
            if rewards[h].len() != n_states * n_actions {
                return Err(Error::Config(format!("reward table {} has the wrong size", h + 1)));
            }
            for (row, probs) in transitions[h].chunks(n_states).enumerate() {
                let total: f64 = probs.iter().sum();
                if probs.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > TRANSITION_SUM_TOLERANCE {
                    return Err(Error::InvalidModel(format!(
                        "P_{}(·|{},{}) is not a distribution (sum {total})",
                        h + 1,
                        row / n_actions,
                        row % n_actions
                    )));
                }
            }
            if let Some(i) = rewards[h].iter().position(|r| !(0.0..=1.0).contains(r)) {
                return Err(Error::InvalidModel(format!(
                    "r_{}({},{}) = {} outside [0,1]",
                    h + 1,
                    i / n_actions,
                    i % n_actions,
                    rewards[h][i]
                )));
            }
        }
        Ok(Self { n_states, n_actions, horizon, initial_state, transitions, rewards })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn transition(&self, h: usize, x: usize, a: usize) -> &[f64] {
        let row = x * self.n_actions + a;
        &self.transitions[h][row * self.n_states..(row + 1) * self.n_states]
    }

    pub fn reward(&self, h: usize, x: usize, a: usize) -> f64 {
        self.rewards[h][x * self.n_actions + a]
    }

    pub fn transitions(&self) -> &[Vec<f64>] {
        &self.transitions
    }

    pub fn rewards(&self) -> &[Vec<f64>] {
        &self.rewards
    }

    /// Encodes the tabular MDP as a linear MDP with one-hot features.
    ///
    /// `d = |X|·|A|`, `φ(x,a) = e_{(x,a)}`, `θ_h[(x,a)] = r_h(x,a)` and
    /// `ψ_h(x')[(x,a)] = P_h(x'|x,a)`, so every inner product reproduces the
    /// tabular entry exactly.
    pub fn one_hot_encode(&self) -> LinearMdp {
        let (n_x, n_a) = (self.n_states, self.n_actions);
        let d = n_x * n_a;
        let features = (0..d)
            .map(|i| {
                let mut e = DVector::zeros(d);
                e[i] = 1.0;
                e
            })
            .collect();
        let theta = self.rewards.iter().map(|r| DVector::from_column_slice(r)).collect();
        let psi = (0..self.horizon)
            .map(|h| {
                (0..n_x)
                    .map(|next| DVector::from_fn(d, |row, _| self.transitions[h][row * n_x + next]))
                    .collect()
            })
            .collect();
        let map = FeatureMap::new(d, n_x, n_a, self.horizon, self.initial_state, features)
            .expect("one-hot layout is consistent");
        LinearMdp::new(map, theta, psi).expect("one-hot blocks are consistent")
    }
}
