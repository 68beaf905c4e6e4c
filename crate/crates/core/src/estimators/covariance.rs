use nalgebra::{DMatrix, DVector};

use super::cholesky::Cholesky;
use crate::error::Result;
use crate::mdp::{EpisodeFeedback, FeatureMap};

/// Full refactorization period for the maintained Cholesky factor.
pub const REFACTOR_EVERY: usize = 64;

/// `λI + Σ_τ z_τ z_τᵀ` with a maintained factorization and log-determinant.
#[derive(Debug, Clone)]
pub struct RidgeCovariance {
    ridge: f64,
    matrix: DMatrix<f64>,
    factor: Cholesky,
    log_det: f64,
    count: usize,
    since_refactor: usize,
}

impl RidgeCovariance {
    pub fn new(dim: usize, ridge: f64) -> Self {
        let factor = Cholesky::scaled_identity(dim, ridge);
        Self {
            ridge,
            matrix: DMatrix::from_diagonal_element(dim, dim, ridge),
            log_det: factor.log_det(),
            factor,
            count: 0,
            since_refactor: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn factor(&self) -> &Cholesky {
        &self.factor
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Number of outer products added so far.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Adds `z·zᵀ`.
    pub fn add(&mut self, z: &DVector<f64>) -> Result<()> {
        let n = self.dim();
        for j in 0..n {
            let zj = z[j];
            if zj == 0.0 {
                continue;
            }
            for i in 0..n {
                self.matrix[(i, j)] += z[i] * zj;
            }
        }
        self.count += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        } else {
            self.factor.rank_one_update(z);
            self.log_det = self.factor.log_det();
        }
        Ok(())
    }

    /// Recomputes the factorization from the dense matrix.
    pub fn refactor(&mut self) -> Result<()> {
        self.factor = Cholesky::factor(&self.matrix)?;
        self.log_det = self.factor.log_det();
        self.since_refactor = 0;
        Ok(())
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(b)
    }

    /// `‖z‖_{A⁻¹}`.
    pub fn inv_norm(&self, z: &DVector<f64>) -> f64 {
        self.factor.inv_quad_form(z).sqrt()
    }
}

/// The aggregate `dH×dH` covariance `Λ` and the per-step `d×d` covariances `Λ_h`.
#[derive(Debug, Clone)]
pub struct CovariancePair {
    dim: usize,
    horizon: usize,
    aggregate: RidgeCovariance,
    steps: Vec<RidgeCovariance>,
}

impl CovariancePair {
    pub fn new(dim: usize, horizon: usize, lambda_r: f64, lambda_p: f64) -> Self {
        Self {
            dim,
            horizon,
            aggregate: RidgeCovariance::new(dim * horizon, lambda_r),
            steps: (0..horizon).map(|_| RidgeCovariance::new(dim, lambda_p)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn lambda_r(&self) -> f64 {
        self.aggregate.ridge()
    }

    pub fn lambda_p(&self) -> f64 {
        self.steps[0].ridge()
    }

    pub fn aggregate(&self) -> &RidgeCovariance {
        &self.aggregate
    }

    pub fn step(&self, h: usize) -> &RidgeCovariance {
        &self.steps[h]
    }

    /// Adds one episode to both the aggregate and every per-step covariance.
    pub fn update(&mut self, features: &FeatureMap, episode: &EpisodeFeedback) -> Result<()> {
        self.update_aggregate(&features.concat(&episode.trajectory))?;
        for (h, &(x, a)) in episode.trajectory.iter().enumerate() {
            self.update_step(h, features.phi(x, a))?;
        }
        Ok(())
    }

    pub fn update_aggregate(&mut self, phi: &DVector<f64>) -> Result<()> {
        self.aggregate.add(phi)
    }

    pub fn update_step(&mut self, h: usize, phi: &DVector<f64>) -> Result<()> {
        self.steps[h].add(phi)
    }
}
