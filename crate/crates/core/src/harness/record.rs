use serde::{Deserialize, Serialize};

/// One row of an experiment log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    /// One-based episode index `k`.
    pub episode: usize,
    /// Epoch index `e`; `-1` when the algorithm has no epochs (or during warm-up).
    pub epoch: i64,
    /// One-based ensemble member `i_k`; `-1` when not applicable.
    pub member: i64,
    /// `V̂_1^{k,i_k}(x_1)` when the algorithm produces one.
    pub v_hat: Option<f64>,
    /// `V^{π^k}(x_1)`.
    pub v_pik: f64,
    /// `V*(x_1)`.
    pub v_star: f64,
    pub instant_regret: f64,
    pub cum_regret: f64,
    pub wall_ms: f64,
}

/// Accumulates regret while building records.
#[derive(Debug, Clone)]
pub struct RegretLog {
    v_star: f64,
    cumulative: f64,
    records: Vec<ExperimentRecord>,
}

impl RegretLog {
    pub fn new(v_star: f64) -> Self {
        Self { v_star, cumulative: 0.0, records: Vec::new() }
    }

    pub fn v_star(&self) -> f64 {
        self.v_star
    }

    pub fn push(&mut self, epoch: i64, member: i64, v_hat: Option<f64>, v_pik: f64) -> &ExperimentRecord {
        let instant = self.v_star - v_pik;
        self.cumulative += instant;
        self.records.push(ExperimentRecord {
            episode: self.records.len() + 1,
            epoch,
            member,
            v_hat,
            v_pik,
            v_star: self.v_star,
            instant_regret: instant,
            cum_regret: self.cumulative,
            wall_ms: 0.0,
        });
        self.records.last().expect("just pushed")
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ExperimentRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ExperimentRecord> {
        self.records
    }
}
