//! Executable checks of the lemma-level machinery.
//!
//! Every check is a pure function of its inputs and seed and returns an
//! [`OracleReport`].

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::estimators::RidgeCovariance;
use crate::harness::record::ExperimentRecord;
use crate::mdp::{exact_value, LinearMdp, MarkovPolicy};
use crate::rng::Streams;

/// Outcome of one oracle evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub name: String,
    pub passed: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub samples: usize,
    pub seed: Option<u64>,
}

impl std::fmt::Display for OracleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: statistic={} threshold={} samples={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            self.threshold,
            self.samples
        )?;
        if let Some(seed) = self.seed {
            write!(f, " seed={seed}")?;
        }
        Ok(())
    }
}

/// State-occupancy measure `q_h(x) = P[x_h = x]` of `policy` from the initial state.
pub fn occupancy(mdp: &LinearMdp, policy: &MarkovPolicy) -> Vec<Vec<f64>> {
    let (n_x, n_a) = (mdp.n_states(), mdp.n_actions());
    let mut q = vec![vec![0.0; n_x]; mdp.horizon()];
    q[0][mdp.initial_state()] = 1.0;
    for h in 0..mdp.horizon() - 1 {
        for x in 0..n_x {
            let mass = q[h][x];
            if mass == 0.0 {
                continue;
            }
            for a in 0..n_a {
                let pa = mass * policy.prob(h, x, a);
                for (y, p) in mdp.transition(h, x, a).iter().enumerate() {
                    q[h + 1][y] += pa * p;
                }
            }
        }
    }
    q
}

/// Residual of the extended value-difference identity.
///
/// `q_hat` is laid out `[h][x * A + a]`; `V̂_h(x) = Σ_a π̂(a|x) Q̂_h(x,a)` and
/// `V̂_{H+1} = 0`. Both sides are evaluated exactly through the occupancy
/// measure of `pi`.
pub fn value_difference_residual(mdp: &LinearMdp, pi: &MarkovPolicy, pi_hat: &MarkovPolicy, q_hat: &[Vec<f64>]) -> f64 {
    let (n_x, n_a, horizon) = (mdp.n_states(), mdp.n_actions(), mdp.horizon());
    let mut v_hat = vec![vec![0.0; n_x]; horizon + 1];
    for h in 0..horizon {
        for x in 0..n_x {
            v_hat[h][x] = (0..n_a).map(|a| pi_hat.prob(h, x, a) * q_hat[h][x * n_a + a]).sum();
        }
    }
    let lhs = exact_value(mdp, pi).start_value(mdp) - v_hat[0][mdp.initial_state()];
    let occ = occupancy(mdp, pi);
    let mut rhs = 0.0;
    for h in 0..horizon {
        for x in 0..n_x {
            let mut inner = 0.0;
            for a in 0..n_a {
                let qa = q_hat[h][x * n_a + a];
                let expected_next: f64 = mdp.transition(h, x, a).iter().zip(&v_hat[h + 1]).map(|(p, v)| p * v).sum();
                inner += qa * (pi.prob(h, x, a) - pi_hat.prob(h, x, a));
                inner += pi.prob(h, x, a) * (mdp.reward(h, x, a) + expected_next - qa);
            }
            rhs += occ[h][x] * inner;
        }
    }
    (lhs - rhs).abs()
}

/// Residual tolerance used by [`value_difference_check`].
pub const VALUE_DIFFERENCE_TOLERANCE: f64 = 1e-10;

pub fn value_difference_check(mdp: &LinearMdp, pi: &MarkovPolicy, pi_hat: &MarkovPolicy, q_hat: &[Vec<f64>]) -> OracleReport {
    let residual = value_difference_residual(mdp, pi, pi_hat, q_hat);
    OracleReport {
        name: "value-difference".into(),
        passed: residual <= VALUE_DIFFERENCE_TOLERANCE,
        statistic: residual,
        threshold: VALUE_DIFFERENCE_TOLERANCE,
        samples: 1,
        seed: None,
    }
}

/// `Σ_t ‖z_t‖²_{V_t⁻¹}` with `V_t = λI + Σ_{s<t} z_s z_sᵀ`.
pub fn elliptical_potential_sum(lambda: f64, zs: &[DVector<f64>]) -> f64 {
    let Some(first) = zs.first() else { return 0.0 };
    let mut cov = RidgeCovariance::new(first.len(), lambda);
    let mut total = 0.0;
    for z in zs {
        total += cov.factor().inv_quad_form(z);
        cov.add(z).expect("ridge covariance stays positive definite");
    }
    total
}

/// `2d′·ln(T + 1)`.
pub fn elliptical_potential_bound(dim: usize, steps: usize) -> f64 {
    2.0 * dim as f64 * (steps as f64 + 1.0).ln()
}

/// Draws `T` vectors uniformly in the ball of radius `√λ` and compares the
/// potential sum with its bound.
pub fn elliptical_potential_check(dim: usize, lambda: f64, steps: usize, seed: u64) -> OracleReport {
    let mut rng = Streams::new(seed).stream("elliptical", 0);
    let zs: Vec<DVector<f64>> = (0..steps)
        .map(|_| {
            let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = g.norm();
            let radius = lambda.sqrt() * rng.random::<f64>().powf(1.0 / dim as f64);
            if norm > 0.0 { g * (radius / norm) } else { g }
        })
        .collect();
    let sum = elliptical_potential_sum(lambda, &zs);
    let bound = elliptical_potential_bound(dim, steps);
    OracleReport { name: "elliptical-potential".into(), passed: sum <= bound, statistic: sum, threshold: bound, samples: steps, seed: Some(seed) }
}

/// Lower bound `1 − e^{−m/9}` less a Hoeffding slack `3·√(ln(2/0.01)/(2·trials))`.
pub fn anti_concentration_threshold(m: usize, trials: usize) -> f64 {
    1.0 - (-(m as f64) / 9.0).exp() - 3.0 * ((2.0f64 / 0.01).ln() / (2.0 * trials as f64)).sqrt()
}

/// Empirical `P[max_{i≤m} g_i ≥ σ]` for `g_i ~ N(0, σ²)` i.i.d.
pub fn anti_concentration_check(sigma: f64, m: usize, trials: usize, seed: u64) -> OracleReport {
    let mut rng = Streams::new(seed).stream("anti-concentration", m as u64);
    let hits = (0..trials)
        .filter(|_| (0..m).any(|_| sigma * rng.sample::<f64, _>(StandardNormal) >= sigma))
        .count();
    let freq = hits as f64 / trials as f64;
    let threshold = anti_concentration_threshold(m, trials);
    OracleReport {
        name: format!("anti-concentration(m={m})"),
        passed: freq >= threshold,
        statistic: freq,
        threshold,
        samples: trials,
        seed: Some(seed),
    }
}

/// Fraction of records carrying `V̂` with `V̂ ≥ V* − tol`; `None` if no record has `V̂`.
pub fn optimism_rate(records: &[ExperimentRecord], v_star: f64, tol: f64) -> Option<f64> {
    let (mut total, mut optimistic) = (0usize, 0usize);
    for v in records.iter().filter_map(|r| r.v_hat) {
        total += 1;
        if v >= v_star - tol {
            optimistic += 1;
        }
    }
    (total > 0).then(|| optimistic as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::record::RegretLog;
    use crate::mdp::TabularMdp;

    fn random_rows(rng: &mut impl Rng, rows: usize, width: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows * width);
        for _ in 0..rows {
            let raw: Vec<f64> = (0..width).map(|_| rng.random::<f64>() + 0.01).collect();
            let s: f64 = raw.iter().sum();
            out.extend(raw.iter().map(|v| v / s));
        }
        out
    }

    fn instance(seed: u64) -> (LinearMdp, MarkovPolicy, MarkovPolicy, Vec<Vec<f64>>) {
        let mut rng = Streams::new(seed).stream("vd", 0);
        let (n_x, n_a, horizon) = (3, 2, 3);
        let p = (0..horizon).map(|_| random_rows(&mut rng, n_x * n_a, n_x)).collect();
        let r = (0..horizon).map(|_| (0..n_x * n_a).map(|_| rng.random()).collect()).collect();
        let mdp = TabularMdp::new(n_x, n_a, horizon, 1, p, r).unwrap().one_hot_encode();
        let pi = MarkovPolicy::from_probs(n_x, n_a, horizon, random_rows(&mut rng, n_x * horizon, n_a)).unwrap();
        let pi_hat = MarkovPolicy::from_probs(n_x, n_a, horizon, random_rows(&mut rng, n_x * horizon, n_a)).unwrap();
        let q = (0..horizon).map(|_| (0..n_x * n_a).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect()).collect();
        (mdp, pi, pi_hat, q)
    }

    fn true_q(mdp: &LinearMdp, pi: &MarkovPolicy) -> Vec<Vec<f64>> {
        let v = exact_value(mdp, pi);
        let (n_x, n_a) = (mdp.n_states(), mdp.n_actions());
        (0..mdp.horizon())
            .map(|h| {
                (0..n_x * n_a)
                    .map(|j| {
                        let (x, a) = (j / n_a, j % n_a);
                        let next: f64 = if h + 1 < mdp.horizon() {
                            mdp.transition(h, x, a).iter().zip(v.step(h + 1)).map(|(p, w)| p * w).sum()
                        } else {
                            0.0
                        };
                        mdp.reward(h, x, a) + next
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn value_difference_identity() {
        for seed in 0..20 {
            let (mdp, pi, pi_hat, q) = instance(seed);
            assert!(value_difference_check(&mdp, &pi, &pi_hat, &q).passed);
            let zero = vec![vec![0.0; 6]; 3];
            assert!(value_difference_residual(&mdp, &pi, &pi_hat, &zero) <= 1e-10);
            let exact = true_q(&mdp, &pi);
            assert!(value_difference_residual(&mdp, &pi, &pi, &exact) <= 1e-12);
        }
    }

    #[test]
    fn occupancy_sums_to_one() {
        let (mdp, pi, _, _) = instance(3);
        for row in occupancy(&mdp, &pi) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_potential() {
        let t = 200;
        let zs = vec![DVector::from_element(1, 1.0); t];
        let harmonic: f64 = (1..=t).map(|i| 1.0 / i as f64).sum();
        assert!((elliptical_potential_sum(1.0, &zs) - harmonic).abs() < 1e-10);
        assert!(harmonic <= elliptical_potential_bound(1, t));
        assert_eq!(elliptical_potential_sum(1.0, &vec![DVector::zeros(3); 10]), 0.0);
    }

    #[test]
    fn random_potential_sweep() {
        for seed in 0..10 {
            assert!(elliptical_potential_check(5, 1.0, 500, seed).passed);
        }
    }

    #[test]
    fn anti_concentration_thresholds() {
        assert!((1.0 - (-1.0f64 / 9.0).exp() - 0.105).abs() < 1e-3);
        assert!((1.0 - (-20.0f64 / 9.0).exp() - 0.892).abs() < 1e-3);
        let one = anti_concentration_check(1.0, 1, 10_000, 1);
        assert!(one.passed && (one.statistic - 0.1587).abs() < 0.015, "{one}");
        let twenty = anti_concentration_check(2.5, 20, 10_000, 1);
        assert!(twenty.passed && (twenty.statistic - 0.968).abs() < 0.01, "{twenty}");
        let zero = anti_concentration_check(0.0, 5, 10_000, 1);
        assert!(zero.passed && zero.statistic == 1.0);
    }

    #[test]
    fn optimism_rate_extremes() {
        let mut log = RegretLog::new(2.0);
        for _ in 0..5 {
            log.push(-1, 1, Some(3.0), 1.0);
        }
        assert_eq!(optimism_rate(log.records(), 2.0, 1e-9), Some(1.0));
        let mut low = RegretLog::new(2.0);
        low.push(-1, 1, Some(0.0), 1.0);
        low.push(-1, -1, None, 1.0);
        assert_eq!(optimism_rate(low.records(), 2.0, 1e-9), Some(0.0));
        assert_eq!(optimism_rate(&[], 2.0, 1e-9), None);
    }
}
