use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mdp::{EpisodeFeedback, FeatureMap};

/// Aggregate-reward regression data `{(φ^τ, v^τ)}` with `φ^τ ∈ R^{dH}`.
///
/// Keeps the running moment `Σ_τ φ^τ v^τ` so estimates cost one solve.
#[derive(Debug, Clone)]
pub struct RewardDataset {
    dim: usize,
    episodes: Vec<usize>,
    features: Vec<f64>,
    rewards: Vec<f64>,
    moment: DVector<f64>,
}

impl RewardDataset {
    /// `dim` is the concatenated dimension `dH`.
    pub fn new(dim: usize) -> Self {
        Self { dim, episodes: Vec::new(), features: Vec::new(), rewards: Vec::new(), moment: DVector::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn push(&mut self, episode: usize, phi: &DVector<f64>, v: f64) -> Result<()> {
        if phi.len() != self.dim {
            return Err(Error::Contract(format!("feature length {} != {}", phi.len(), self.dim)));
        }
        self.episodes.push(episode);
        self.features.extend(phi.iter());
        self.rewards.push(v);
        self.moment.axpy(v, phi, 1.0);
        Ok(())
    }

    pub fn push_episode(&mut self, index: usize, features: &FeatureMap, episode: &EpisodeFeedback) -> Result<()> {
        self.push(index, &features.concat(&episode.trajectory), episode.v)
    }

    /// `Σ_τ φ^τ v^τ`.
    pub fn moment(&self) -> &DVector<f64> {
        &self.moment
    }

    pub fn episodes(&self) -> &[usize] {
        &self.episodes
    }

    /// `(φ^τ, v^τ)` pairs in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.features.chunks(self.dim).zip(self.rewards.iter().copied())
    }
}

#[derive(Debug, Clone)]
struct StepData {
    episodes: Vec<usize>,
    features: Vec<f64>,
    next_states: Vec<usize>,
    /// `Σ_τ φ_h^τ e_{x_{h+1}^τ}ᵀ`, a `d × |X|` matrix.
    moment: DMatrix<f64>,
}

/// Per-step transition data `{(φ_h^τ, x_{h+1}^τ)}`.
#[derive(Debug, Clone)]
pub struct DynamicsDataset {
    dim: usize,
    n_states: usize,
    steps: Vec<StepData>,
}

impl DynamicsDataset {
    pub fn new(dim: usize, n_states: usize, horizon: usize) -> Self {
        let step = StepData {
            episodes: Vec::new(),
            features: Vec::new(),
            next_states: Vec::new(),
            moment: DMatrix::zeros(dim, n_states),
        };
        Self { dim, n_states, steps: vec![step; horizon] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn len(&self, h: usize) -> usize {
        self.steps[h].next_states.len()
    }

    pub fn push(&mut self, h: usize, episode: usize, phi: &DVector<f64>, next_state: usize) -> Result<()> {
        if phi.len() != self.dim {
            return Err(Error::Contract(format!("feature length {} != {}", phi.len(), self.dim)));
        }
        if next_state >= self.n_states {
            return Err(Error::Contract(format!("next state {next_state} out of range")));
        }
        let step = &mut self.steps[h];
        step.episodes.push(episode);
        step.features.extend(phi.iter());
        step.next_states.push(next_state);
        let mut col = step.moment.column_mut(next_state);
        col += phi;
        Ok(())
    }

    pub fn push_episode(&mut self, index: usize, features: &FeatureMap, episode: &EpisodeFeedback) -> Result<()> {
        for (h, &(x, a)) in episode.trajectory.iter().enumerate() {
            self.push(h, index, features.phi(x, a), episode.next_state(h))?;
        }
        Ok(())
    }

    /// `Σ_τ φ_h^τ e_{x_{h+1}^τ}ᵀ`; multiplying by `V` gives `Σ_τ φ_h^τ V(x_{h+1}^τ)`.
    pub fn moment(&self, h: usize) -> &DMatrix<f64> {
        &self.steps[h].moment
    }

    pub fn episodes(&self, h: usize) -> &[usize] {
        &self.steps[h].episodes
    }

    /// `(φ_h^τ, x_{h+1}^τ)` pairs in insertion order.
    pub fn iter(&self, h: usize) -> impl Iterator<Item = (&[f64], usize)> + '_ {
        let step = &self.steps[h];
        step.features.chunks(self.dim).zip(step.next_states.iter().copied())
    }
}
