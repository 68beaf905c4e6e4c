//! Environment generators and the fixed catalog of named environments.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::mdp::{LinearMdp, TabularMdp, FeatureMap};
use crate::rng::{StreamRng, Streams};

/// Uniform draw from the probability simplex in `R^n`.
fn simplex_point(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// A random linear MDP satisfying every normalization assumption.
///
/// Features are simplex points, `ψ_h(x')_j = μ_{h,j}(x')` for `d` random
/// next-state distributions `μ_{h,j}`, and `θ_h ∈ [0,1]^d`. The start state is 0.
pub fn generate_random_linear(d: usize, n_states: usize, n_actions: usize, horizon: usize, seed: u64) -> Result<LinearMdp> {
    if d == 0 || n_states == 0 || n_actions == 0 || horizon == 0 {
        return Err(Error::Config("d, |X|, |A| and H must be positive".into()));
    }
    let mut rng = Streams::new(seed).stream("env", 0);
    let features: Vec<DVector<f64>> =
        (0..n_states * n_actions).map(|_| DVector::from_vec(simplex_point(d, &mut rng))).collect();
    let features = FeatureMap::new(d, n_states, n_actions, horizon, 0, features)?;
    let mut theta = Vec::with_capacity(horizon);
    let mut psi = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mu: Vec<Vec<f64>> = (0..d).map(|_| simplex_point(n_states, &mut rng)).collect();
        psi.push((0..n_states).map(|x| DVector::from_fn(d, |j, _| mu[j][x])).collect());
        theta.push(DVector::from_fn(d, |_, _| rng.random::<f64>()));
    }
    LinearMdp::new(features, theta, psi)
}

/// A random tabular MDP with full-support transitions.
pub fn generate_random_tabular(n_states: usize, n_actions: usize, horizon: usize, seed: u64) -> Result<TabularMdp> {
    if n_states == 0 || n_actions == 0 || horizon == 0 {
        return Err(Error::Config("|X|, |A| and H must be positive".into()));
    }
    let mut rng = Streams::new(seed).stream("env", 0);
    let mut transitions = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        transitions.push((0..n_states * n_actions).flat_map(|_| simplex_point(n_states, &mut rng)).collect());
        rewards.push((0..n_states * n_actions).map(|_| rng.random::<f64>()).collect());
    }
    TabularMdp::new(n_states, n_actions, horizon, 0, transitions, rewards)
}

/// Names accepted by [`catalog`].
pub const CATALOG: &[&str] = &["chain3", "chain5"];

/// Fixed named environments.
///
/// * `chain3`: 3 states, 2 actions, `H = 2`.
/// * `chain5`: 5 states, 2 actions, `H = 4`; reward waits at the far end of
///   a chain that the uniform policy rarely reaches.
pub fn catalog(name: &str) -> Result<TabularMdp> {
    match name {
        "chain3" => {
            let (n_x, n_a, horizon) = (3, 2, 2);
            // action 0 stays with prob 0.9; action 1 advances with prob 0.6
            let mut p = vec![0.0; n_x * n_a * n_x];
            for x in 0..n_x {
                let right = (x + 1).min(n_x - 1);
                p[(x * n_a) * n_x + x] += 0.9;
                p[(x * n_a) * n_x + (x + n_x - 1) % n_x] += 0.1;
                p[(x * n_a + 1) * n_x + right] += 0.6;
                p[(x * n_a + 1) * n_x + x] += 0.4;
            }
            let r = vec![0.3, 0.1, 0.2, 0.4, 0.5, 0.9];
            TabularMdp::new(n_x, n_a, horizon, 0, vec![p; horizon], vec![r; horizon])
        }
        "chain5" => {
            let (n_x, n_a, horizon) = (5, 2, 4);
            let mut p = vec![0.0; n_x * n_a * n_x];
            for x in 0..n_x {
                // action 0 falls back to the start; action 1 advances
                p[(x * n_a) * n_x] += 1.0;
                p[(x * n_a + 1) * n_x + (x + 1).min(n_x - 1)] += 0.9;
                p[(x * n_a + 1) * n_x + x] += 0.1;
            }
            let mut r = vec![0.0; n_x * n_a];
            r[0] = 0.1;
            for x in 2..n_x {
                r[x * n_a + 1] = 0.3 * (x - 1) as f64;
            }
            TabularMdp::new(n_x, n_a, horizon, 0, vec![p; horizon], vec![r; horizon])
        }
        other => Err(Error::Config(format!("unknown catalog environment {other:?}; known: {}", CATALOG.join(", ")))),
    }
}
