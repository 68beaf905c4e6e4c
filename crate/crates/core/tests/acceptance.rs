//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use abf_core::estimators::{backup_apply, estimate_theta, CovariancePair, DynamicsDataset, RewardDataset};
use abf_core::harness::audit::{anti_concentration_sweep, elliptical_sweep, optimism_audit, value_difference_sweep};
use abf_core::harness::csv::{config_meta, parse, render_section};
use abf_core::harness::plot::render_svg;
use abf_core::harness::{catalog, generate_random_linear, run_experiment, Algorithm, EnvSpec, ExperimentConfig};
use abf_core::mdp::{sample_episode, LinearMdp, MarkovPolicy, RewardNoise};
use abf_core::relsvi::{self, RelsviParams};
use abf_core::repo::{self, epoch_bound, RepoParams, UniformWarmup};
use abf_core::rng::Streams;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const ESTIMATOR_TOLERANCE: f64 = 1e-8;
const ESTIMATOR_BUDGET: Duration = Duration::from_secs(10);
const ORACLE_BUDGET: Duration = Duration::from_secs(30);
const PARAMETER_TOLERANCE: f64 = 1e-12;
const OPTIMISM_BUDGET: Duration = Duration::from_secs(120);
const ROW_SUM_TOLERANCE: f64 = 1e-9;
const BENCHMARK_BUDGET: Duration = Duration::from_secs(300);
const REGRET_FRACTION: f64 = 0.5;
const CONCAVITY_LIMIT: f64 = 1.7;
const BENCHMARK_EPISODES: usize = 5000;
const BENCHMARK_SEEDS: [u64; 3] = [0, 1, 2];
/// Tuned multiplier for RE-LSVI on `chain5`.
const RELSVI_BONUS_SCALE: f64 = 1e-4;
/// Tuned multiplier for tabular REPO on `chain5`.
const REPO_TABULAR_BONUS_SCALE: f64 = 3e-6;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    ensure(start.elapsed() < budget, || format!("took {:?}, budget {budget:?}", start.elapsed()))
}

fn criterion_1_estimator_exactness() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for instance in 0..50u64 {
        let mut rng = Streams::new(instance).stream("acceptance", 1);
        let d = rng.random_range(1..=4);
        let horizon = rng.random_range(1..=3);
        let n_x = rng.random_range(2..=6);
        let episodes = rng.random_range(0..=200);
        let env = generate_random_linear(d, n_x, 2, horizon, instance).map_err(|e| e.to_string())?;
        let f = env.features();
        let (lambda_r, lambda_p) = (horizon as f64, 1.0);
        let uniform = MarkovPolicy::uniform(n_x, 2, horizon);
        let mut cov = CovariancePair::new(d, horizon, lambda_r, lambda_p);
        let mut rewards = RewardDataset::new(d * horizon);
        let mut dynamics = DynamicsDataset::new(d, n_x, horizon);
        let mut dense_agg = DMatrix::identity(d * horizon, d * horizon) * lambda_r;
        let mut dense_rhs = DVector::zeros(d * horizon);
        let mut dense_steps = vec![DMatrix::identity(d, d) * lambda_p; horizon];
        let values: Vec<f64> = (0..n_x).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut step_rhs = vec![DVector::zeros(d); horizon];
        for k in 0..episodes {
            let ep = sample_episode(&env, &uniform, RewardNoise::Bernoulli, &mut rng).map_err(|e| e.to_string())?;
            cov.update(f, &ep).map_err(|e| e.to_string())?;
            rewards.push_episode(k, f, &ep).map_err(|e| e.to_string())?;
            dynamics.push_episode(k, f, &ep).map_err(|e| e.to_string())?;
            let z = f.concat(&ep.trajectory);
            dense_agg += &z * z.transpose();
            dense_rhs += &z * ep.v;
            for (h, &(x, a)) in ep.trajectory.iter().enumerate() {
                let phi = f.phi(x, a);
                dense_steps[h] += phi * phi.transpose();
                step_rhs[h] += phi * values[ep.next_state(h)];
            }
        }
        let theta = estimate_theta(&cov, &rewards).map_err(|e| e.to_string())?;
        let oracle = dense_agg.lu().solve(&dense_rhs).ok_or("singular aggregate system")?;
        worst = worst.max((&theta.full - oracle).amax());
        for h in 0..horizon {
            let got = backup_apply(&cov, &dynamics, h, &values).map_err(|e| e.to_string())?;
            let oracle = dense_steps[h].clone().lu().solve(&step_rhs[h]).ok_or("singular step system")?;
            worst = worst.max((got - oracle).amax());
        }
    }
    ensure(worst <= ESTIMATOR_TOLERANCE, || format!("max abs error {worst:e} > {ESTIMATOR_TOLERANCE:e}"))?;
    within_budget(start, ESTIMATOR_BUDGET)?;
    Ok(format!("50 instances, max abs error {worst:.3e}, {:?}", start.elapsed()))
}

fn criterion_2_lemma_oracles() -> Outcome {
    let start = Instant::now();
    let elliptical = elliptical_sweep(0);
    let anti = anti_concentration_sweep(0);
    let vd = value_difference_sweep(0).map_err(|e| e.to_string())?;
    for r in elliptical.iter().chain(&anti).chain(&vd) {
        ensure(r.passed, || r.to_string())?;
    }
    ensure(elliptical.len() == 100 && anti.len() == 3 && vd.len() == 50, || "sweep sizes".into())?;
    within_budget(start, ORACLE_BUDGET)?;
    let worst_vd = vd.iter().map(|r| r.statistic).fold(0.0, f64::max);
    let anti_stats: Vec<String> = anti.iter().map(|r| format!("{:.4}≥{:.4}", r.statistic, r.threshold)).collect();
    Ok(format!(
        "elliptical 100/100, anti-concentration m∈{{1,5,20}} [{}], value-difference residual ≤ {worst_vd:.2e}, {:?}",
        anti_stats.join(", "),
        start.elapsed()
    ))
}

fn criterion_3_parameter_fidelity() -> Outcome {
    let (d, h, k, delta) = (1.0f64, 1.0f64, 100.0f64, 0.1f64);
    let p = RelsviParams::compute(1, 1, 100, 0.1).map_err(|e| e.to_string())?;
    let m = (9.0 * (5.0 * k / delta).ln()).ceil();
    let beta_r = 2.0 * h * (2.0 * d * h * (10.0 * k / delta).ln()).sqrt();
    let beta_zeta = (11.0 * d * h / 2.0 * (5.0 * m * k / delta).ln()).sqrt();
    let beta_rzeta = 2.0 * beta_zeta * beta_r / h.sqrt();
    let beta_p = 40.0 * beta_zeta * beta_r * d * (h * (163.0 * k * d * h / delta).ln()).sqrt();
    ensure(p.lambda_p == 1.0 && p.lambda_r == 1.0, || format!("λ_p = {}, λ_r = {}", p.lambda_p, p.lambda_r))?;
    ensure(p.m == 77 && m == 77.0, || format!("m = {}", p.m))?;
    ensure((p.beta_r - 8.584).abs() < 5e-4, || format!("β_r = {}", p.beta_r))?;
    for (name, got, want) in [
        ("β_r", p.beta_r, beta_r),
        ("β_ζ", p.beta_zeta, beta_zeta),
        ("β_rζ", p.beta_rzeta, beta_rzeta),
        ("β_p", p.beta_p, beta_p),
    ] {
        ensure((got - want).abs() <= PARAMETER_TOLERANCE * want.max(1.0), || format!("{name}: {got} vs {want}"))?;
    }
    Ok(format!("λ_p=1 λ_r=1 m=77 β_r={:.4} β_ζ={:.4} β_rζ={:.4} β_p={:.4}", p.beta_r, p.beta_zeta, p.beta_rzeta, p.beta_p))
}

fn criterion_4_optimism() -> Outcome {
    let start = Instant::now();
    let report = optimism_audit(0).map_err(|e| e.to_string())?;
    ensure(report.passed, || report.to_string())?;
    within_budget(start, OPTIMISM_BUDGET)?;
    Ok(format!("optimistic fraction {:.4} over {} episodes, {:?}", report.statistic, report.samples, start.elapsed()))
}

fn row_sums_ok(p: &[f64]) -> bool {
    (p.iter().sum::<f64>() - 1.0).abs() <= ROW_SUM_TOLERANCE
}

fn relsvi_clip_check(env: &LinearMdp, episodes: usize) -> Result<usize, String> {
    let params = RelsviParams::compute(env.dim(), env.horizon(), episodes, 0.1).map_err(|e| e.to_string())?;
    let horizon = env.horizon();
    let mut checked = 0usize;
    relsvi::run_inspected(env, episodes, &params, RewardNoise::Bernoulli, &Streams::new(11), |t| {
        for member in &t.plan.members {
            for (h, row) in member.q.iter().enumerate() {
                let cap = params.clip_radius(horizon, h);
                if let Some(q) = row.iter().find(|q| q.abs() > cap) {
                    return Err(abf_core::Error::Contract(format!("episode {}: |Q̂| = {q} > {cap}", t.episode)));
                }
                checked += row.len();
            }
        }
        ensure(t.plan.policy.max_row_sum_error() <= ROW_SUM_TOLERANCE, || "policy rows".into())
            .map_err(abf_core::Error::Contract)?;
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    Ok(checked)
}

fn repo_structure_check(env: &LinearMdp, episodes: usize, params: &RepoParams) -> Result<(usize, usize, usize), String> {
    let mut zeroed = 0usize;
    let mut known_seen = 0usize;
    let tabular = params.mode == repo::RepoMode::Tabular;
    let out = repo::run_inspected(env, episodes, params, RewardNoise::Bernoulli, &Streams::new(12), &UniformWarmup, |t| {
        let fail = |msg: String| abf_core::Error::Contract(format!("episode {}: {msg}", t.step.episode));
        if !row_sums_ok(&t.step.hedge) {
            return Err(fail("hedge weights do not sum to 1".into()));
        }
        for pi in &t.step.policies {
            if pi.max_row_sum_error() > ROW_SUM_TOLERANCE {
                return Err(fail("policy row sum off".into()));
            }
        }
        let f = t.engine.features();
        if let Some(known) = t.engine.known() {
            for member in &t.step.members {
                for (h, row) in member.q.iter().enumerate() {
                    for x in 0..f.n_states() {
                        let q = &row[x * f.n_actions()..(x + 1) * f.n_actions()];
                        if known.contains(h, x) {
                            known_seen += 1;
                        } else if q.iter().any(|&v| v != 0.0) {
                            return Err(fail(format!("Q̂_{}({x},·) nonzero outside Z", h + 1)));
                        } else {
                            zeroed += 1;
                        }
                    }
                }
            }
        }
        if tabular {
            for (h, op) in t.step.inputs.operators.iter().enumerate() {
                for phi in f.all() {
                    let row = phi.transpose() * op;
                    if row.iter().any(|&p| p < 0.0) || row.sum() > 1.0 + ROW_SUM_TOLERANCE {
                        return Err(fail(format!("step {} kernel is not sub-stochastic", h + 1)));
                    }
                }
            }
        }
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    let bound = epoch_bound(env.dim(), env.horizon(), episodes);
    ensure(out.epochs as f64 <= bound, || format!("{} epochs > bound {bound}", out.epochs))?;
    Ok((out.epochs, zeroed, known_seen))
}

fn criterion_5_structural_invariants() -> Outcome {
    let episodes = 2000;
    let linear = generate_random_linear(3, 6, 2, 3, 21).map_err(|e| e.to_string())?;
    let clipped = relsvi_clip_check(&linear, episodes)?;
    let mut lin_params = RepoParams::compute_linear(linear.dim(), linear.horizon(), episodes, 0.1, linear.n_actions())
        .and_then(|p| p.with_ensemble_size(8))
        .map_err(|e| e.to_string())?;
    // A loose known-set radius leaves the theoretical β_p far above β_Q on known states.
    lin_params.beta_w = 0.5;
    lin_params.safety_factor = 1e6;
    let (lin_epochs, zeroed, known) = repo_structure_check(&linear, episodes, &lin_params)?;
    ensure(zeroed > 0 && known > 0, || format!("indicator check vacuous: {zeroed} zeroed, {known} known"))?;
    let tab_env = catalog("chain5").map_err(|e| e.to_string())?.one_hot_encode();
    let tab_params = RepoParams::compute_tabular(tab_env.dim(), tab_env.horizon(), episodes, 0.1, tab_env.n_actions())
        .and_then(|p| p.with_bonus_scale(REPO_TABULAR_BONUS_SCALE))
        .map_err(|e| e.to_string())?;
    let (tab_epochs, _, _) = repo_structure_check(&tab_env, episodes, &tab_params)?;
    Ok(format!(
        "clip held on {clipped} Q̂ entries; indicator zeroed {zeroed} state rows; epochs {lin_epochs} (linear, bound {:.0}), {tab_epochs} (tabular, bound {:.0})",
        epoch_bound(linear.dim(), linear.horizon(), episodes),
        epoch_bound(tab_env.dim(), tab_env.horizon(), episodes)
    ))
}

fn benchmark(algorithm: Algorithm, bonus_scale: f64) -> Outcome {
    let start = Instant::now();
    let env = EnvSpec::from_generator("gen:chain5").and_then(|s| s.build()).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for seed in BENCHMARK_SEEDS {
        let mut cfg = ExperimentConfig::new(algorithm, "gen:chain5", BENCHMARK_EPISODES, seed);
        cfg.bonus_scale = bonus_scale;
        let run = run_experiment(&cfg, &env).map_err(|e| e.to_string())?;
        let uniform = run_experiment(&ExperimentConfig::new(Algorithm::UniformBaseline, "gen:chain5", BENCHMARK_EPISODES, seed), &env)
            .map_err(|e| e.to_string())?;
        let s = &run.summary;
        let fraction = s.final_regret / uniform.summary.final_regret;
        let concavity = s.final_regret / s.regret_at_half;
        lines.push(format!("seed {seed}: regret {:.1} = {fraction:.3}× uniform, K/(K/2) ratio {concavity:.3}", s.final_regret));
        if !(fraction <= REGRET_FRACTION) {
            failures.push(format!("seed {seed}: regret fraction {fraction:.3} > {REGRET_FRACTION}"));
        }
        if !(concavity <= CONCAVITY_LIMIT) {
            failures.push(format!("seed {seed}: concavity {concavity:.3} > {CONCAVITY_LIMIT}"));
        }
    }
    within_budget(start, BENCHMARK_BUDGET)?;
    let detail = format!("{algorithm} bonus_scale={bonus_scale:e}: {}", lines.join("; "));
    if failures.is_empty() { Ok(detail) } else { Err(format!("{detail}; {}", failures.join("; "))) }
}

fn criterion_6a_relsvi_benchmark() -> Outcome {
    benchmark(Algorithm::Relsvi, RELSVI_BONUS_SCALE)
}

fn criterion_6b_repo_tabular_benchmark() -> Outcome {
    benchmark(Algorithm::RepoTabular, REPO_TABULAR_BONUS_SCALE)
}

fn criterion_7_determinism() -> Outcome {
    let mut compared = 0;
    let mut combined = String::new();
    for algorithm in [Algorithm::Relsvi, Algorithm::RepoLinear, Algorithm::RepoTabular, Algorithm::UniformBaseline] {
        let env_name = "gen:random:d=3,states=5,actions=2,horizon=3,seed=4";
        let env = EnvSpec::resolve(env_name).and_then(|s| s.build()).map_err(|e| e.to_string())?;
        let mut cfg = ExperimentConfig::new(algorithm, env_name, 300, 9);
        cfg.bonus_scale = 1e-3;
        let render = || -> Result<String, String> {
            let out = run_experiment(&cfg, &env).map_err(|e| e.to_string())?;
            Ok(render_section(&config_meta(&cfg), &out.records))
        };
        let (a, b) = (render()?, render()?);
        ensure(a.as_bytes() == b.as_bytes(), || format!("{algorithm}: CSV bytes differ"))?;
        compared += a.len();
        combined.push_str(&a);
    }
    let sections = parse(&combined).map_err(|e| e.to_string())?;
    let (svg_a, svg_b) = (render_svg(&sections), render_svg(&sections));
    ensure(svg_a == svg_b, || "plot output differs".into())?;
    Ok(format!("4 algorithms, {compared} CSV bytes and {} SVG bytes identical across reruns", svg_a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 estimator exactness", criterion_1_estimator_exactness),
        ("2 lemma oracles", criterion_2_lemma_oracles),
        ("3 parameter fidelity", criterion_3_parameter_fidelity),
        ("4 optimism audit", criterion_4_optimism),
        ("5 structural invariants", criterion_5_structural_invariants),
        ("6a regret benchmark (RE-LSVI)", criterion_6a_relsvi_benchmark),
        ("6b regret benchmark (tabular REPO)", criterion_6b_repo_tabular_benchmark),
        ("7 determinism", criterion_7_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
