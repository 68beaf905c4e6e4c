//! Multiplicative-weights state kept in log space.

use crate::mdp::MarkovPolicy;

/// Normalizes `exp(logits)` in place with max subtraction.
pub fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        let n = logits.len() as f64;
        logits.iter_mut().for_each(|v| *v = 1.0 / n);
        return;
    }
    let mut total = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    logits.iter_mut().for_each(|v| *v /= total);
}

/// One mirror-descent step on a single state: `π'(a) ∝ π(a)·exp(η·Q(a))`.
pub fn omd_update(policy_row: &[f64], q: &[f64], eta: f64) -> Vec<f64> {
    let mut logits: Vec<f64> = policy_row.iter().zip(q).map(|(&p, &qa)| p.ln() + eta * qa).collect();
    softmax_in_place(&mut logits);
    logits
}

/// One Hedge step: `p'(i) ∝ p(i)·exp(η·V̂(i))`.
pub fn hedge_update(p: &[f64], values: &[f64], eta: f64) -> Vec<f64> {
    omd_update(p, values, eta)
}

/// A Markov policy represented by cumulative logits `η Σ Q̂` since the last reset.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicy {
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    logits: Vec<f64>,
}

impl SoftmaxPolicy {
    pub fn uniform(n_states: usize, n_actions: usize, horizon: usize) -> Self {
        Self { n_states, n_actions, horizon, logits: vec![0.0; n_states * n_actions * horizon] }
    }

    pub fn reset(&mut self) {
        self.logits.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Adds `η·Q̂_h(x,a)` for every `(h, x, a)`; `q[h]` is laid out `[x * A + a]`.
    pub fn update(&mut self, q: &[Vec<f64>], eta: f64) {
        let block = self.n_states * self.n_actions;
        for (h, qh) in q.iter().enumerate() {
            for (l, &v) in self.logits[h * block..(h + 1) * block].iter_mut().zip(qh) {
                *l += eta * v;
            }
        }
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn policy(&self) -> MarkovPolicy {
        let mut probs = self.logits.clone();
        for row in probs.chunks_mut(self.n_actions) {
            softmax_in_place(row);
        }
        MarkovPolicy::from_probs(self.n_states, self.n_actions, self.horizon, probs)
            .expect("softmax rows are distributions")
    }
}

/// Hedge weights over ensemble members.
#[derive(Debug, Clone, PartialEq)]
pub struct Hedge {
    logits: Vec<f64>,
}

impl Hedge {
    pub fn uniform(m: usize) -> Self {
        Self { logits: vec![0.0; m] }
    }

    pub fn reset(&mut self) {
        self.logits.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn update(&mut self, values: &[f64], eta: f64) {
        for (l, &v) in self.logits.iter_mut().zip(values) {
            *l += eta * v;
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let mut p = self.logits.clone();
        softmax_in_place(&mut p);
        p
    }
}
