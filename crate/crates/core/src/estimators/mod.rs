//! Regularized least-squares machinery shared by both algorithms.
//!
//! Inverses are never formed explicitly except inside [`build_sigma_zeta`],
//! whose output is itself a covariance. Solves, quadratic forms and Gaussian
//! draws all go through maintained Cholesky factors. Which episodes feed which
//! estimator is entirely the caller's decision.

mod cholesky;
mod covariance;
mod dataset;

pub use cholesky::Cholesky;
pub use covariance::{CovariancePair, RidgeCovariance, REFACTOR_EVERY};
pub use dataset::{DynamicsDataset, RewardDataset};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// The least-squares aggregate reward estimate and its per-step blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaEstimate {
    pub full: DVector<f64>,
    pub blocks: Vec<DVector<f64>>,
}

/// `θ̂ = Λ⁻¹ Σ_τ φ^τ v^τ`, sliced into `H` blocks of length `d`.
pub fn estimate_theta(cov: &CovariancePair, data: &RewardDataset) -> Result<ThetaEstimate> {
    if cov.aggregate().count() != data.len() {
        return Err(Error::Contract(format!(
            "aggregate covariance holds {} episodes but the reward dataset has {}",
            cov.aggregate().count(),
            data.len()
        )));
    }
    let full = cov.aggregate().solve(data.moment());
    let d = cov.dim();
    let blocks = (0..cov.horizon()).map(|h| full.rows(h * d, d).into_owned()).collect();
    Ok(ThetaEstimate { full, blocks })
}

fn check_step(cov: &CovariancePair, data: &DynamicsDataset, h: usize) -> Result<()> {
    if cov.step(h).count() != data.len(h) {
        return Err(Error::Contract(format!(
            "step {} covariance holds {} samples but the dynamics dataset has {}",
            h + 1,
            cov.step(h).count(),
            data.len(h)
        )));
    }
    Ok(())
}

/// `ψ̂_h V = Λ_h⁻¹ Σ_τ φ_h^τ V(x_{h+1}^τ)`.
pub fn backup_apply(cov: &CovariancePair, data: &DynamicsDataset, h: usize, values: &[f64]) -> Result<DVector<f64>> {
    check_step(cov, data, h)?;
    if values.len() != data.n_states() {
        return Err(Error::Contract(format!(
            "value vector has length {} but there are {} states",
            values.len(),
            data.n_states()
        )));
    }
    let target = data.moment(h) * DVector::from_column_slice(values);
    Ok(cov.step(h).solve(&target))
}

/// The whole operator `ψ̂_h` as a `d × |X|` matrix; `ψ̂_h V = operator · V`.
pub fn backup_operator(cov: &CovariancePair, data: &DynamicsDataset, h: usize) -> Result<DMatrix<f64>> {
    check_step(cov, data, h)?;
    Ok(cov.step(h).factor().solve_matrix(data.moment(h)))
}

/// `m` independent draws `ζ = β_r L⁻ᵀ g` with `Λ = L Lᵀ`, i.e. `ζ ~ N(0, β_r² Λ⁻¹)`.
pub fn sample_ensemble_noise<R: Rng + ?Sized>(
    cov: &CovariancePair,
    beta_r: f64,
    m: usize,
    rng: &mut R,
) -> Vec<DVector<f64>> {
    let n = cov.aggregate().dim();
    (0..m)
        .map(|_| {
            let g = standard_normal(n, rng);
            cov.aggregate().factor().inv_transpose_apply(&g) * beta_r
        })
        .collect()
}

/// `Σ_ζ = 2β_r² Λ̂⁻¹ + 2Hβ_p² blockdiag(Λ̂_1, …, Λ̂_H)⁻¹`.
pub fn build_sigma_zeta(snapshot: &CovariancePair, beta_r: f64, beta_p: f64) -> Result<DMatrix<f64>> {
    let (d, horizon) = (snapshot.dim(), snapshot.horizon());
    let n = d * horizon;
    let identity = DMatrix::identity(n, n);
    let mut sigma = snapshot.aggregate().factor().solve_matrix(&identity) * (2.0 * beta_r * beta_r);
    let step_scale = 2.0 * horizon as f64 * beta_p * beta_p;
    for h in 0..horizon {
        let inv = snapshot.step(h).factor().solve_matrix(&DMatrix::identity(d, d));
        let mut block = sigma.view_mut((h * d, h * d), (d, d));
        block += inv * step_scale;
    }
    // Symmetrize away solve round-off.
    let sym = (&sigma + sigma.transpose()) * 0.5;
    Ok(sym)
}

/// `m` independent draws from `N(0, Σ)` for an explicit covariance `Σ`.
///
/// An all-zero `Σ` yields zero vectors; otherwise `Σ` must be positive definite.
pub fn sample_gaussian<R: Rng + ?Sized>(sigma: &DMatrix<f64>, m: usize, rng: &mut R) -> Result<Vec<DVector<f64>>> {
    let n = sigma.nrows();
    if sigma.amax() == 0.0 {
        return Ok(vec![DVector::zeros(n); m]);
    }
    let factor = Cholesky::factor(sigma)
        .map_err(|e| Error::Numerical(format!("noise covariance is not positive definite: {e}")))?;
    Ok((0..m).map(|_| factor.lower_apply(&standard_normal(n, rng))).collect())
}

/// `β_p ‖φ‖_{Λ_h⁻¹}`.
pub fn bonus(cov: &CovariancePair, h: usize, phi: &DVector<f64>, beta_p: f64) -> f64 {
    beta_p * cov.step(h).inv_norm(phi)
}

/// Slack on log-determinant comparisons so an exact doubling is not lost to rounding.
pub const LOG_DET_SLACK: f64 = 1e-12;

/// True iff any covariance determinant at least doubled since `snapshot`.
pub fn det_doubled(current: &CovariancePair, snapshot: &CovariancePair) -> bool {
    let ln2 = std::f64::consts::LN_2 - LOG_DET_SLACK;
    current.aggregate().log_det() >= snapshot.aggregate().log_det() + ln2
        || (0..current.horizon()).any(|h| current.step(h).log_det() >= snapshot.step(h).log_det() + ln2)
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}
