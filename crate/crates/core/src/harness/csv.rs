//! The experiment CSV format.
//!
//! A file holds one or more sections. Each section starts with a comment line
//! `# run key=value ... env=<rest of line>` followed by the fixed header and
//! one row per episode. Floats are written in shortest round-trip form.

use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::experiment::ExperimentConfig;
use super::record::ExperimentRecord;

pub const HEADER: &str = "episode,epoch,member,v_hat,v_pik,v_star,instant_regret,cum_regret,wall_ms";
const PREAMBLE: &str = "# run";
/// Allowed gap between the cumulative column and the recomputed prefix sum.
pub const PREFIX_SUM_TOLERANCE: f64 = 1e-9;
/// Smallest instant regret accepted on load.
pub const INSTANT_REGRET_FLOOR: f64 = -1e-9;

/// One run inside a CSV file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvSection {
    /// Preamble fields in file order.
    pub meta: Vec<(String, String)>,
    pub records: Vec<ExperimentRecord>,
}

impl CsvSection {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Curve label: the algorithm name, or `run` when absent.
    pub fn label(&self) -> &str {
        self.get("algo").unwrap_or("run")
    }
}

/// Preamble fields for a configuration; `env` is always last.
pub fn config_meta(config: &ExperimentConfig) -> Vec<(String, String)> {
    let mut meta = vec![
        ("algo".to_string(), config.algorithm.name().to_string()),
        ("seed".to_string(), config.seed.to_string()),
        ("episodes".to_string(), config.episodes.to_string()),
        ("delta".to_string(), config.delta.to_string()),
        ("bonus_scale".to_string(), config.bonus_scale.to_string()),
    ];
    let o = &config.overrides;
    let optional = [
        ("eta_o", o.eta_o.map(|v| v.to_string())),
        ("eta_x", o.eta_x.map(|v| v.to_string())),
        ("beta_w", o.beta_w.map(|v| v.to_string())),
        ("eps_cov", o.eps_cov.map(|v| v.to_string())),
        ("ensemble_size", o.ensemble_size.map(|v| v.to_string())),
    ];
    meta.extend(optional.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
    meta.push(("env".to_string(), config.env.clone()));
    meta
}

pub fn render_section(meta: &[(String, String)], records: &[ExperimentRecord]) -> String {
    let mut out = String::from(PREAMBLE);
    for (k, v) in meta {
        write!(out, " {k}={v}").unwrap();
    }
    out.push('\n');
    out.push_str(HEADER);
    out.push('\n');
    for r in records {
        let v_hat = r.v_hat.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.episode, r.epoch, r.member, v_hat, r.v_pik, r.v_star, r.instant_regret, r.cum_regret, r.wall_ms
        )
        .unwrap();
    }
    out
}

fn parse_meta(line: &str) -> Vec<(String, String)> {
    let mut meta = Vec::new();
    let mut rest = line.trim_start_matches(PREAMBLE).trim();
    while !rest.is_empty() {
        if let Some(env) = rest.strip_prefix("env=") {
            meta.push(("env".to_string(), env.to_string()));
            break;
        }
        let (token, tail) = rest.split_once(' ').unwrap_or((rest, ""));
        if let Some((k, v)) = token.split_once('=') {
            meta.push((k.to_string(), v.to_string()));
        }
        rest = tail.trim_start();
    }
    meta
}

fn field<T: std::str::FromStr>(line_no: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse(format!("line {line_no}: {name} = {raw:?} is malformed")))
}

fn parse_row(line_no: usize, line: &str) -> Result<ExperimentRecord> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != 9 {
        return Err(Error::Parse(format!("line {line_no}: expected 9 columns, found {}", cols.len())));
    }
    Ok(ExperimentRecord {
        episode: field(line_no, "episode", cols[0])?,
        epoch: field(line_no, "epoch", cols[1])?,
        member: field(line_no, "member", cols[2])?,
        v_hat: if cols[3].is_empty() { None } else { Some(field(line_no, "v_hat", cols[3])?) },
        v_pik: field(line_no, "v_pik", cols[4])?,
        v_star: field(line_no, "v_star", cols[5])?,
        instant_regret: field(line_no, "instant_regret", cols[6])?,
        cum_regret: field(line_no, "cum_regret", cols[7])?,
        wall_ms: field(line_no, "wall_ms", cols[8])?,
    })
}

/// Parses every section and checks the regret accounting.
pub fn parse(text: &str) -> Result<Vec<CsvSection>> {
    let mut sections: Vec<CsvSection> = Vec::new();
    let mut expect_header = false;
    let mut sum = 0.0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with('#') {
            sections.push(CsvSection { meta: parse_meta(line), records: Vec::new() });
            expect_header = true;
            sum = 0.0;
            continue;
        }
        if expect_header || sections.is_empty() {
            if line.trim() != HEADER {
                return Err(Error::Parse(format!("line {line_no}: expected header {HEADER:?}")));
            }
            if sections.is_empty() {
                sections.push(CsvSection::default());
                sum = 0.0;
            }
            expect_header = false;
            continue;
        }
        let record = parse_row(line_no, line.trim())?;
        if record.instant_regret < INSTANT_REGRET_FLOOR {
            return Err(Error::Parse(format!("line {line_no}: negative instant regret {}", record.instant_regret)));
        }
        sum += record.instant_regret;
        if (record.cum_regret - sum).abs() > PREFIX_SUM_TOLERANCE * (1.0 + sum.abs()) {
            return Err(Error::Parse(format!(
                "line {line_no}: cumulative regret {} differs from the prefix sum {sum}",
                record.cum_regret
            )));
        }
        sections.last_mut().expect("section exists").records.push(record);
    }
    if expect_header {
        return Err(Error::Parse("section preamble without a header".into()));
    }
    Ok(sections)
}
