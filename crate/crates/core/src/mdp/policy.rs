use rand::Rng;

use crate::error::{Error, Result};

const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A stochastic Markov policy `π_h(a|x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovPolicy {
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    /// `probs[(h * X + x) * A + a]`.
    probs: Vec<f64>,
}

impl MarkovPolicy {
    pub fn uniform(n_states: usize, n_actions: usize, horizon: usize) -> Self {
        let p = 1.0 / n_actions as f64;
        Self { n_states, n_actions, horizon, probs: vec![p; n_states * n_actions * horizon] }
    }

    /// `actions[h][x]` is the action played at `(h, x)`.
    pub fn deterministic(n_actions: usize, actions: &[Vec<usize>]) -> Result<Self> {
        let horizon = actions.len();
        let n_states = actions.first().map_or(0, Vec::len);
        let mut probs = vec![0.0; n_states * n_actions * horizon];
        for (h, row) in actions.iter().enumerate() {
            if row.len() != n_states {
                return Err(Error::Config("ragged deterministic policy table".into()));
            }
            for (x, &a) in row.iter().enumerate() {
                if a >= n_actions {
                    return Err(Error::Config(format!("action {a} out of range")));
                }
                probs[(h * n_states + x) * n_actions + a] = 1.0;
            }
        }
        Ok(Self { n_states, n_actions, horizon, probs })
    }

    /// Builds a policy from a flat `(h, x, a)` table, checking each row is a distribution.
    pub fn from_probs(n_states: usize, n_actions: usize, horizon: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions * horizon {
            return Err(Error::Config(format!(
                "policy table has {} entries, expected {}",
                probs.len(),
                n_states * n_actions * horizon
            )));
        }
        let policy = Self { n_states, n_actions, horizon, probs };
        policy.check_rows()?;
        Ok(policy)
    }

    fn check_rows(&self) -> Result<()> {
        for (i, row) in self.probs.chunks(self.n_actions).enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::Config(format!(
                    "π_{}(·|{}) is not a distribution (sum {total})",
                    i / self.n_states + 1,
                    i % self.n_states
                )));
            }
        }
        Ok(())
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

    #[inline]
    pub fn row(&self, h: usize, x: usize) -> &[f64] {
        let start = (h * self.n_states + x) * self.n_actions;
        &self.probs[start..start + self.n_actions]
    }

    pub fn row_mut(&mut self, h: usize, x: usize) -> &mut [f64] {
        let start = (h * self.n_states + x) * self.n_actions;
        &mut self.probs[start..start + self.n_actions]
    }

    pub fn prob(&self, h: usize, x: usize, a: usize) -> f64 {
        self.row(h, x)[a]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_sum_error(&self) -> f64 {
        self.probs
            .chunks(self.n_actions)
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, h: usize, x: usize, rng: &mut R) -> usize {
        sample_categorical(self.row(h, x), rng)
    }
}

/// Inverse-CDF draw from a (possibly slightly unnormalized) probability vector.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}
