//! Dense lower-triangular Cholesky factor with in-place rank-1 update.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `A = L·Lᵀ` with `L` lower-triangular (upper triangle kept at zero).
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Factors a symmetric positive-definite matrix (only the lower triangle is read).
    pub fn factor(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Contract(format!("cannot factor a {}x{} matrix", n, a.ncols())));
        }
        let mut l = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) {
                return Err(Error::Numerical(format!(
                    "matrix is not positive definite: pivot {j} = {diag:e} (diag range {:e}..{:e})",
                    (0..n).map(|i| a[(i, i)]).fold(f64::INFINITY, f64::min),
                    (0..n).map(|i| a[(i, i)]).fold(f64::NEG_INFINITY, f64::max),
                )));
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    /// `σ·I` factored directly.
    pub fn scaled_identity(n: usize, sigma: f64) -> Self {
        Self { l: DMatrix::from_diagonal_element(n, n, sigma.sqrt()) }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Replaces `L` with the factor of `L·Lᵀ + v·vᵀ` in O(n²).
    pub fn rank_one_update(&mut self, v: &DVector<f64>) {
        let n = self.dim();
        let mut w = v.clone();
        for j in 0..n {
            let ljj = self.l[(j, j)];
            let wj = w[j];
            if wj == 0.0 {
                continue;
            }
            let r = ljj.hypot(wj);
            let c = r / ljj;
            let s = wj / ljj;
            self.l[(j, j)] = r;
            for i in j + 1..n {
                let lij = (self.l[(i, j)] + s * w[i]) / c;
                self.l[(i, j)] = lij;
                w[i] = c * w[i] - s * lij;
            }
        }
    }

    /// Solves `L·y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut DVector<f64>) {
        let n = self.dim();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    /// Solves `Lᵀ·x = y` in place.
    pub fn solve_upper_in_place(&self, y: &mut DVector<f64>) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
    }

    /// `A⁻¹·b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `A⁻¹·B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        for j in 0..b.ncols() {
            let mut col = b.column(j).into_owned();
            self.solve_lower_in_place(&mut col);
            self.solve_upper_in_place(&mut col);
            out.set_column(j, &col);
        }
        out
    }

    /// `xᵀA⁻¹x = ‖L⁻¹x‖²`.
    pub fn inv_quad_form(&self, x: &DVector<f64>) -> f64 {
        let mut y = x.clone();
        self.solve_lower_in_place(&mut y);
        y.norm_squared()
    }

    /// `log det A = 2 Σ log L_jj`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|j| self.l[(j, j)].ln()).sum::<f64>()
    }

    /// `L⁻ᵀ·g`, a draw with covariance `A⁻¹` when `g ~ N(0, I)`.
    pub fn inv_transpose_apply(&self, g: &DVector<f64>) -> DVector<f64> {
        let mut x = g.clone();
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `L·g`, a draw with covariance `A` when `g ~ N(0, I)`.
    pub fn lower_apply(&self, g: &DVector<f64>) -> DVector<f64> {
        &self.l * g
    }
}
