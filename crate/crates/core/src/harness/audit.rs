//! Sweeps of the lemma oracles, as run by `abf audit` and the acceptance suite.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{optimal_policy, LinearMdp, MarkovPolicy, RewardNoise};
use crate::properties::{
    anti_concentration_check, elliptical_potential_check, optimism_rate, value_difference_check, OracleReport,
};
use crate::relsvi::{self, RelsviParams};
use crate::rng::Streams;

use super::experiment::OPTIMISM_TOLERANCE;
use super::generate::{catalog, generate_random_tabular};

pub const ORACLES: &[&str] = &["elliptical", "anti-concentration", "value-difference", "optimism"];

/// Minimum optimistic fraction demanded by the optimism audit.
pub const OPTIMISM_TARGET: f64 = 0.9;

fn random_policy(n_x: usize, n_a: usize, horizon: usize, rng: &mut impl Rng) -> MarkovPolicy {
    let mut probs = Vec::with_capacity(n_x * n_a * horizon);
    for _ in 0..n_x * horizon {
        let raw: Vec<f64> = (0..n_a).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        probs.extend(raw.iter().map(|v| v / total));
    }
    MarkovPolicy::from_probs(n_x, n_a, horizon, probs).expect("normalized rows")
}

/// A random instance with `|X| ≤ 8`, `H ≤ 4`: model, `π`, `π̂` and `Q̂ ∈ [−H, H]`.
pub fn value_difference_instance(seed: u64) -> Result<(LinearMdp, MarkovPolicy, MarkovPolicy, Vec<Vec<f64>>)> {
    let mut rng = Streams::new(seed).stream("audit", 0);
    let n_x = rng.random_range(2..=8);
    let n_a = rng.random_range(1..=3);
    let horizon = rng.random_range(1..=4);
    let mdp = generate_random_tabular(n_x, n_a, horizon, seed)?.one_hot_encode();
    let pi = random_policy(n_x, n_a, horizon, &mut rng);
    let pi_hat = random_policy(n_x, n_a, horizon, &mut rng);
    let h = horizon as f64;
    let q = (0..horizon).map(|_| (0..n_x * n_a).map(|_| rng.random_range(-h..=h)).collect()).collect();
    Ok((mdp, pi, pi_hat, q))
}

pub fn elliptical_sweep(seed: u64) -> Vec<OracleReport> {
    (0..100u64).map(|i| elliptical_potential_check(1 + i as usize % 5, 1.0, 500, seed.wrapping_add(i))).collect()
}

pub fn anti_concentration_sweep(seed: u64) -> Vec<OracleReport> {
    [1, 5, 20].into_iter().map(|m| anti_concentration_check(1.0, m, 10_000, seed)).collect()
}

pub fn value_difference_sweep(seed: u64) -> Result<Vec<OracleReport>> {
    (0..50u64)
        .map(|i| {
            let (mdp, pi, pi_hat, q) = value_difference_instance(seed.wrapping_add(i))?;
            let mut report = value_difference_check(&mdp, &pi, &pi_hat, &q);
            report.seed = Some(seed.wrapping_add(i));
            Ok(report)
        })
        .collect()
}

/// RE-LSVI with theoretical parameters, `δ = 0.1`, on `chain3`: 200 episodes × 20 seeds.
pub fn optimism_audit(seed: u64) -> Result<OracleReport> {
    let env = catalog("chain3")?.one_hot_encode();
    let (episodes, runs) = (200, 20u64);
    let params = RelsviParams::compute(env.dim(), env.horizon(), episodes, 0.1)?;
    let v_star = optimal_policy(&env).value;
    let mut optimistic = 0.0;
    for r in 0..runs {
        let records = relsvi::run(&env, episodes, &params, RewardNoise::Bernoulli, &Streams::new(seed.wrapping_add(r)))?;
        optimistic += optimism_rate(&records, v_star, OPTIMISM_TOLERANCE).unwrap_or(0.0) * records.len() as f64;
    }
    let total = (episodes as u64 * runs) as usize;
    let rate = optimistic / total as f64;
    Ok(OracleReport {
        name: "optimism".into(),
        passed: rate >= OPTIMISM_TARGET,
        statistic: rate,
        threshold: OPTIMISM_TARGET,
        samples: total,
        seed: Some(seed),
    })
}

/// Runs the named oracle sweep (`all` runs every one).
pub fn run_audit(name: &str, seed: u64) -> Result<Vec<OracleReport>> {
    match name {
        "elliptical" => Ok(elliptical_sweep(seed)),
        "anti-concentration" => Ok(anti_concentration_sweep(seed)),
        "value-difference" => value_difference_sweep(seed),
        "optimism" => Ok(vec![optimism_audit(seed)?]),
        "all" => {
            let mut out = Vec::new();
            for n in ORACLES {
                out.extend(run_audit(n, seed)?);
            }
            Ok(out)
        }
        other => Err(Error::Config(format!("unknown oracle {other:?}; known: {}, all", ORACLES.join(", ")))),
    }
}
