//! Ordinary least squares through a Householder QR factorization.
//!
//! The model has no implicit intercept: `y = Xβ + ε`. Callers who want one
//! add a constant column with [`Dataset::with_intercept`], which also bumps
//! `p` and therefore lowers the residual degrees of freedom `k = n - p`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::HouseholderQr;

/// A regression instance: design matrix `x` (n×p) and response `y` (n).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "design has {n} rows but response has {} entries",
                y.len()
            )));
        }
        if n == 0 || p == 0 {
            return Err(Error::InvalidShape(format!("empty design ({n}x{p})")));
        }
        if n <= p {
            return Err(Error::InvalidShape(format!(
                "need more observations than covariates (n = {n}, p = {p})"
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response".into()));
        }
        Ok(Dataset { x, y })
    }

    /// Builds a dataset from row-major covariate rows.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} covariates, expected {p}",
                rows[bad].len()
            )));
        }
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Dataset::new(x, DVector::from_vec(y))
    }

    /// Same data with a trailing column of ones.
    pub fn with_intercept(&self) -> Result<Self> {
        let (n, p) = self.x.shape();
        let x = self.x.clone().insert_column(p, 1.0);
        debug_assert_eq!(x.shape(), (n, p + 1));
        Dataset::new(x, self.y.clone())
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Replaces the response, keeping the design.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        Dataset::new(self.x.clone(), y)
    }
}

/// Result of an OLS fit. Keeps the factorization so auxiliary regressions on
/// the same column space can reuse it.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub beta_hat: DVector<f64>,
    pub residuals: DVector<f64>,
    /// Residual degrees of freedom, `n - p`.
    pub k: usize,
    /// Residual sum of squares.
    pub rss: f64,
    qr: Option<Arc<HouseholderQr>>,
}

impl RegressionFit {
    /// Wraps a residual vector that did not come from [`fit_ols`], e.g. raw
    /// errors with no regressors (`p = 0`, `k = n`).
    pub fn from_residuals(residuals: Vec<f64>, p: usize) -> Result<Self> {
        let n = residuals.len();
        if n == 0 || p >= n {
            return Err(Error::InvalidShape(format!("{n} residuals with p = {p}")));
        }
        if residuals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("residuals".into()));
        }
        let rss = residuals.iter().map(|r| r * r).sum();
        Ok(RegressionFit {
            beta_hat: DVector::zeros(p),
            residuals: DVector::from_vec(residuals),
            k: n - p,
            rss,
            qr: None,
        })
    }

    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    pub fn p(&self) -> usize {
        self.n() - self.k
    }

    /// The factorization of the design, when the fit came from [`fit_ols`].
    pub fn factorization(&self) -> Option<&HouseholderQr> {
        self.qr.as_deref()
    }
}

/// Fits `y = Xβ + ε` by least squares.
pub fn fit_ols(data: &Dataset) -> Result<RegressionFit> {
    let (n, p) = data.x.shape();
    let qr = HouseholderQr::new(&data.x);
    let rank = qr.rank();
    if rank < p {
        return Err(Error::RankDeficient { rank, cols: p });
    }
    let (beta, residuals) = qr.least_squares(data.y.as_slice());
    let rss = residuals.iter().map(|r| r * r).sum();
    Ok(RegressionFit {
        beta_hat: DVector::from_vec(beta),
        residuals: DVector::from_vec(residuals),
        k: n - p,
        rss,
        qr: Some(Arc::new(qr)),
    })
}

/// Power sums of the residuals needed by the ALRT and CVT statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualMoments {
    /// Σ ε̂ᵢ²
    pub sum_sq: f64,
    /// Σ log ε̂ᵢ²
    pub sum_log_sq: f64,
    /// Σ ε̂ᵢ⁴
    pub sum_fourth: f64,
}

pub fn residual_moments(fit: &RegressionFit) -> Result<ResidualMoments> {
    moments_of(fit.residuals.as_slice())
}

/// Single pass over `residuals`. A residual counts as an exact zero when
/// `|ε̂ᵢ| < 1e-12 · sqrt(rss/n + ε)`.
pub fn moments_of(residuals: &[f64]) -> Result<ResidualMoments> {
    let n = residuals.len();
    if n == 0 {
        return Err(Error::InvalidShape("no residuals".into()));
    }
    let mut sum_sq = 0.0;
    let mut sum_log_sq = 0.0;
    let mut sum_fourth = 0.0;
    let mut smallest = (f64::INFINITY, 0);
    for (i, &r) in residuals.iter().enumerate() {
        let sq = r * r;
        sum_sq += sq;
        sum_log_sq += sq.ln();
        sum_fourth += sq * sq;
        if r.abs() < smallest.0 {
            smallest = (r.abs(), i);
        }
    }
    let threshold = 1e-12 * (sum_sq / n as f64 + f64::EPSILON).sqrt();
    if smallest.0 == 0.0 || smallest.0 < threshold {
        return Err(Error::DegenerateResidual { index: smallest.1 });
    }
    Ok(ResidualMoments {
        sum_sq,
        sum_log_sq,
        sum_fourth,
    })
}
