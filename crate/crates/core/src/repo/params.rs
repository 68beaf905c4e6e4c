use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which REPO variant to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepoMode {
    /// Warm-up, known-state indicator, dynamics refit every episode.
    Linear,
    /// No warm-up, no indicator, dynamics frozen at each epoch start.
    Tabular,
}

/// Hyper-parameters of REPO.
///
/// Radii are stored at their theoretical values. `bonus_scale` multiplies
/// `β_r`, `β_p` and `β_Q` through the `effective_*` accessors. The learning
/// rates are stored as used: the builders re-evaluate them at the effective
/// `β_Q` and current `m` unless replaced through `with_learning_rates`.
/// `β_w` is used as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct RepoParams {
    pub mode: RepoMode,
    pub delta: f64,
    /// Target warm-up coverage `ε_cov` (linear mode only).
    pub eps_cov: f64,
    /// Known-state radius `β_w` (linear mode only).
    pub beta_w: f64,
    pub eta_o: f64,
    pub eta_x: f64,
    pub lambda_r: f64,
    pub lambda_p: f64,
    pub beta_r: f64,
    pub beta_p: f64,
    pub beta_zeta: f64,
    pub beta_q: f64,
    pub m: usize,
    pub bonus_scale: f64,
    /// Abort when any `|Q̂|` exceeds `safety_factor · β_Q` (effective).
    pub safety_factor: f64,
    /// Warm-up length is `⌈warmup_factor / ε_cov⌉` episodes.
    pub warmup_factor: f64,
    /// `(d, H, K, |A|)` the formulas were evaluated at.
    pub size: (usize, usize, usize, usize),
}

fn check_common(d: usize, horizon: usize, episodes: usize, delta: f64, n_actions: usize) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("δ = {delta} must lie in (0, 1)")));
    }
    if d == 0 || horizon == 0 || episodes == 0 || n_actions == 0 {
        return Err(Error::Parameter("d, H, K and |A| must be positive".into()));
    }
    Ok(())
}

/// `√(3dH·ln(2K)·ln(n) / (K β_Q²))`, shared by both learning rates.
fn learning_rate(d: f64, h: f64, k: f64, n: f64, beta_q: f64) -> f64 {
    (3.0 * d * h * (2.0 * k).ln() * n.ln() / (k * beta_q * beta_q)).sqrt()
}

impl RepoParams {
    /// Theoretical setting for linear MDPs. `ε_cov` defaults to `1/√K`.
    pub fn compute_linear(d: usize, horizon: usize, episodes: usize, delta: f64, n_actions: usize) -> Result<Self> {
        check_common(d, horizon, episodes, delta, n_actions)?;
        let (df, h, k) = (d as f64, horizon as f64, episodes as f64);
        let m = (9.0 * (7.0 * k / delta).ln()).ceil().max(1.0) as usize;
        let beta_r = 2.0 * h * (2.0 * df * h * (14.0 * k / delta).ln()).sqrt();
        let beta_zeta = (11.0 * df * h * (14.0 * m as f64 * h * k / delta).ln()).sqrt();
        let beta_q = 18.0 * beta_zeta * beta_r * h.sqrt();
        let log_cover = (60.0 * k.powi(3) * h * beta_q / (delta * df.sqrt())).ln();
        let beta_p = 216.0 * beta_zeta * beta_r * (df * h * log_cover).sqrt();
        let beta_w = 36.0 * beta_zeta * (df * log_cover).sqrt();
        Ok(Self {
            mode: RepoMode::Linear,
            delta,
            eps_cov: 1.0 / k.sqrt(),
            beta_w,
            eta_o: learning_rate(df, h, k, n_actions as f64, beta_q),
            eta_x: learning_rate(df, h, k, m as f64, beta_q),
            lambda_r: h,
            lambda_p: 1.0,
            beta_r,
            beta_p,
            beta_zeta,
            beta_q,
            m,
            bonus_scale: 1.0,
            safety_factor: 10.0,
            warmup_factor: 1.0,
            size: (d, horizon, episodes, n_actions),
        })
    }

    /// Theoretical setting for tabular MDPs encoded one-hot (`d = |X||A|`).
    pub fn compute_tabular(d: usize, horizon: usize, episodes: usize, delta: f64, n_actions: usize) -> Result<Self> {
        check_common(d, horizon, episodes, delta, n_actions)?;
        let (df, h, k) = (d as f64, horizon as f64, episodes as f64);
        let m = (9.0 * (7.0 * k / delta).ln()).ceil().max(1.0) as usize;
        let beta_r = 2.0 * h * (2.0 * df * h * (14.0 * k / delta).ln()).sqrt();
        let beta_zeta = (11.0 * df * h * (14.0 * m as f64 * k / delta).ln()).sqrt();
        let beta_p = 4.0 * h * (3.0 * df * (14.0 * k * h / delta).ln()).sqrt();
        let beta_q = 2.0 * h * beta_p * beta_zeta;
        Ok(Self {
            mode: RepoMode::Tabular,
            delta,
            eps_cov: 0.0,
            beta_w: 0.0,
            eta_o: learning_rate(df, h, k, n_actions as f64, beta_q),
            eta_x: learning_rate(df, h, k, m as f64, beta_q),
            lambda_r: h,
            lambda_p: 1.0,
            beta_r,
            beta_p,
            beta_zeta,
            beta_q,
            m,
            bonus_scale: 1.0,
            safety_factor: 10.0,
            warmup_factor: 1.0,
            size: (d, horizon, episodes, n_actions),
        })
    }

    /// Sets the scale and re-evaluates both learning rates at the scaled `β_Q`.
    pub fn with_bonus_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Parameter(format!("bonus scale {scale} must be positive")));
        }
        self.bonus_scale = scale;
        self.refresh_learning_rates();
        Ok(self)
    }

    /// `η_o` and `η_x` from their formulas at the effective `β_Q` and current `m`.
    pub fn refresh_learning_rates(&mut self) {
        let (d, h, k, n_a) = self.size;
        let (d, h, k) = (d as f64, h as f64, k as f64);
        let beta_q = self.effective_beta_q();
        self.eta_o = learning_rate(d, h, k, n_a as f64, beta_q);
        self.eta_x = learning_rate(d, h, k, self.m as f64, beta_q);
    }

    pub fn with_learning_rates(mut self, eta_o: f64, eta_x: f64) -> Result<Self> {
        if !(eta_o > 0.0 && eta_x > 0.0) {
            return Err(Error::Parameter("learning rates must be positive".into()));
        }
        self.eta_o = eta_o;
        self.eta_x = eta_x;
        Ok(self)
    }

    pub fn with_ensemble_size(mut self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("ensemble size must be at least 1".into()));
        }
        self.m = m;
        self.refresh_learning_rates();
        Ok(self)
    }

    pub fn effective_beta_r(&self) -> f64 {
        self.beta_r * self.bonus_scale
    }

    pub fn effective_beta_p(&self) -> f64 {
        self.beta_p * self.bonus_scale
    }

    pub fn effective_beta_q(&self) -> f64 {
        self.beta_q * self.bonus_scale
    }

    /// `1 / (2 β_w H)`.
    pub fn known_threshold(&self, horizon: usize) -> f64 {
        1.0 / (2.0 * self.beta_w * horizon as f64)
    }

    /// Number of warm-up episodes `⌈c / ε_cov⌉`.
    pub fn warmup_episodes(&self) -> usize {
        (self.warmup_factor / self.eps_cov).ceil() as usize
    }

    /// Checks ranges; `episodes` is the total budget `K`.
    ///
    /// Learning rates may be zero only when the corresponding simplex is a
    /// single point (`m = 1` or `|A| = 1`), where the update is vacuous anyway.
    pub fn validate(&self, episodes: usize) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Parameter(format!("δ = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.eta_o >= 0.0 && self.eta_x >= 0.0) || !self.eta_o.is_finite() || !self.eta_x.is_finite() {
            return Err(Error::Parameter("learning rates must be finite and non-negative".into()));
        }
        if self.eta_x == 0.0 && self.m > 1 {
            return Err(Error::Parameter("η_x must be positive when m > 1".into()));
        }
        if self.m == 0 {
            return Err(Error::Parameter("ensemble size must be at least 1".into()));
        }
        if !(self.lambda_r > 0.0 && self.lambda_p > 0.0) {
            return Err(Error::Parameter("ridge parameters must be positive".into()));
        }
        if !(self.beta_r >= 0.0 && self.beta_p >= 0.0 && self.beta_q > 0.0 && self.bonus_scale > 0.0) {
            return Err(Error::Parameter("radii must be non-negative and β_Q positive".into()));
        }
        if self.mode == RepoMode::Linear {
            if !(self.beta_w > 0.0) {
                return Err(Error::Parameter("β_w must be positive".into()));
            }
            if !(self.eps_cov >= 1.0 / episodes as f64) {
                return Err(Error::Parameter(format!(
                    "ε_cov = {} must be at least 1/K = {}",
                    self.eps_cov,
                    1.0 / episodes as f64
                )));
            }
            if !(self.warmup_factor > 0.0) {
                return Err(Error::Parameter("warm-up factor must be positive".into()));
            }
        }
        Ok(())
    }
}
