use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abf_core::harness::audit::run_audit;
use abf_core::harness::csv::{config_meta, parse, render_section};
use abf_core::harness::plot::render_svg;
use abf_core::harness::{run_experiment, Algorithm, EnvSpec, ExperimentConfig, ExperimentOutput, Overrides};
use abf_core::mdp::RewardNoise;
use abf_core::Error;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "abf", version, about = "Regret experiments for RL with aggregate bandit feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    Bernoulli,
    Deterministic,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write per-episode records as CSV.
    Run {
        #[arg(long)]
        algo: String,
        /// TOML file or `gen:<name>[:key=value,...]`.
        #[arg(long)]
        env: String,
        #[arg(long)]
        episodes: usize,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        bonus_scale: f64,
        #[arg(long)]
        out: PathBuf,
        /// Write the run summary as JSON here.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Append a new section instead of overwriting.
        #[arg(long)]
        append: bool,
        /// Run seeds `seed, seed+1, ...` and write one section each.
        #[arg(long, default_value_t = 1)]
        replicas: u64,
        #[arg(long, value_enum, default_value_t = Noise::Bernoulli)]
        noise: Noise,
        #[arg(long)]
        eta_o: Option<f64>,
        #[arg(long)]
        eta_x: Option<f64>,
        #[arg(long)]
        beta_w: Option<f64>,
        #[arg(long)]
        eps_cov: Option<f64>,
        #[arg(long)]
        ensemble_size: Option<usize>,
        /// Fill the wall_ms column (output is then no longer reproducible).
        #[arg(long)]
        record_timing: bool,
    },
    /// Plot cumulative regret curves from a CSV as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a lemma oracle sweep.
    Audit {
        /// elliptical, anti-concentration, value-difference, optimism or all.
        #[arg(long, default_value = "all")]
        oracle: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check an environment against the normalization assumptions.
    Validate {
        #[arg(long)]
        env: String,
    },
    /// Write an environment as an explicit TOML file.
    Export {
        #[arg(long)]
        env: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Numerical(_) | Error::NumericalAbort(_) => 3,
        _ => 2,
    }
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code(&err))
}

fn write_output(path: &Path, text: &str, append: bool) -> Result<(), Error> {
    let mut file = OpenOptions::new().create(true).write(true).append(append).truncate(!append).open(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

fn run(configs: Vec<ExperimentConfig>, out: &Path, summary: Option<&Path>, append: bool) -> Result<(), Error> {
    let env = EnvSpec::resolve(&configs[0].env)?.build()?;
    let results: Vec<Result<ExperimentOutput, Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs.iter().map(|c| scope.spawn(|| run_experiment(c, &env))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut text = String::new();
    let mut summaries = Vec::new();
    for (config, result) in configs.iter().zip(results) {
        let output = result?;
        text.push_str(&render_section(&config_meta(config), &output.records));
        let s = &output.summary;
        println!(
            "{} seed={} episodes={} final_regret={} regret_at_half={} epochs={} optimism_rate={}",
            s.algorithm,
            s.seed,
            s.episodes,
            s.final_regret,
            s.regret_at_half,
            s.epochs.map_or("-".into(), |e| e.to_string()),
            s.optimism_rate.map_or("-".into(), |r| r.to_string())
        );
        summaries.push(output.summary);
    }
    write_output(out, &text, append)?;
    if let Some(path) = summary {
        let json = serde_json::to_string_pretty(&summaries).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(path, json + "\n")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            algo,
            env,
            episodes,
            delta,
            seed,
            bonus_scale,
            out,
            summary,
            append,
            replicas,
            noise,
            eta_o,
            eta_x,
            beta_w,
            eps_cov,
            ensemble_size,
            record_timing,
        } => {
            let algorithm: Algorithm = match algo.parse() {
                Ok(a) => a,
                Err(e) => return fail(e),
            };
            let configs = (0..replicas.max(1))
                .map(|r| ExperimentConfig {
                    algorithm,
                    env: env.clone(),
                    episodes,
                    delta,
                    seed: seed + r,
                    bonus_scale,
                    noise: match noise {
                        Noise::Bernoulli => RewardNoise::Bernoulli,
                        Noise::Deterministic => RewardNoise::Deterministic,
                    },
                    overrides: Overrides { eta_o, eta_x, beta_w, eps_cov, ensemble_size },
                    record_timing,
                })
                .collect();
            match run(configs, &out, summary.as_deref(), append) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Plot { input, out } => {
            let result = std::fs::read_to_string(&input)
                .map_err(Error::from)
                .and_then(|text| parse(&text))
                .and_then(|sections| Ok(std::fs::write(&out, render_svg(&sections))?));
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Audit { oracle, seed } => match run_audit(&oracle, seed) {
            Ok(reports) => {
                for r in &reports {
                    println!("{r}");
                }
                if reports.iter().all(|r| r.passed) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(e),
        },
        Command::Validate { env } => {
            let model = match EnvSpec::resolve(&env).and_then(|s| s.build()) {
                Ok(m) => m,
                Err(Error::InvalidModel(msg)) => {
                    println!("{msg}");
                    return ExitCode::from(1);
                }
                Err(e) => return fail(e),
            };
            let report = model.validate();
            if report.is_valid() {
                println!("valid: d={} |X|={} |A|={} H={}", model.dim(), model.n_states(), model.n_actions(), model.horizon());
                ExitCode::SUCCESS
            } else {
                println!("{report}");
                ExitCode::from(1)
            }
        }
        Command::Export { env, out } => {
            let result = EnvSpec::resolve(&env)
                .and_then(|s| s.build())
                .and_then(|m| EnvSpec::from_linear(&m).to_toml())
                .and_then(|text| Ok(std::fs::write(&out, text)?));
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
    }
}
