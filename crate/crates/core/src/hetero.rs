//! The four heteroscedasticity tests: ALRT, CVT, Breusch–Pagan (Koenker's
//! studentized n·R² form) and White.
//!
//! ALRT and CVT reject in the upper tail of their standard-normal limits:
//! both statistics measure how far the squared residuals are from constant,
//! so heteroscedasticity only ever pushes them up.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{normal_sf, ChiSquare, NULL_CONSTANTS};
use crate::error::{Error, Result};
use crate::linalg::{dot, HouseholderQr};
use crate::regression::{fit_ols, moments_of, Dataset, RegressionFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Alrt,
    Cvt,
    Bp,
    White,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Alrt, Method::Cvt, Method::Bp, Method::White];

    pub fn label(self) -> &'static str {
        match self {
            Method::Alrt => "ALRT",
            Method::Cvt => "CVT",
            Method::Bp => "BP",
            Method::White => "White",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Method::Alrt => "alrt",
            Method::Cvt => "cvt",
            Method::Bp => "bp",
            Method::White => "white",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alrt" => Ok(Method::Alrt),
            "cvt" => Ok(Method::Cvt),
            "bp" | "breusch-pagan" => Ok(Method::Bp),
            "white" => Ok(Method::White),
            other => Err(Error::InvalidArgument(format!("unknown test `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: Method,
    /// T1, T2, or n·R² of the auxiliary regression.
    pub statistic: f64,
    /// z-score (ALRT, CVT) or chi-square value (BP, White) behind the p-value.
    pub standardized: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    /// Chi-square degrees of freedom for BP and White.
    pub dof: Option<usize>,
    pub n: usize,
    pub p: usize,
    pub k: usize,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// `T1 = log(mean ε̂²) - mean(log ε̂²)`, the log ratio of arithmetic to
/// geometric mean of the squared residuals.
pub fn alrt_statistic_of(residuals: &[f64]) -> Result<f64> {
    let m = moments_of(residuals)?;
    let n = residuals.len() as f64;
    Ok(((m.sum_sq / n).ln() - m.sum_log_sq / n).max(0.0))
}

pub fn alrt_statistic(fit: &RegressionFit) -> Result<f64> {
    alrt_statistic_of(fit.residuals.as_slice())
}

/// `T2 = mean((ε̂² - m̄)²) / m̄²` via the fourth-moment identity
/// `mean(ε̂⁴)/m̄² - 1`.
pub fn cvt_statistic_of(residuals: &[f64]) -> Result<f64> {
    let n = residuals.len() as f64;
    let (sum_sq, sum_fourth) = residuals.iter().fold((0.0, 0.0), |(s2, s4), r| {
        let sq = r * r;
        (s2 + sq, s4 + sq * sq)
    });
    let mean_sq = sum_sq / n;
    if mean_sq.is_nan() || mean_sq <= 0.0 {
        return Err(Error::DegenerateResidual { index: 0 });
    }
    Ok((sum_fourth / n / (mean_sq * mean_sq) - 1.0).max(0.0))
}

/// `T2` in its defining deviation form; same value as [`cvt_statistic_of`].
pub fn cvt_statistic_deviation_form(residuals: &[f64]) -> Result<f64> {
    let n = residuals.len() as f64;
    let mean_sq = residuals.iter().map(|r| r * r).sum::<f64>() / n;
    if mean_sq.is_nan() || mean_sq <= 0.0 {
        return Err(Error::DegenerateResidual { index: 0 });
    }
    let spread = residuals
        .iter()
        .map(|r| {
            let d = r * r - mean_sq;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(spread / (mean_sq * mean_sq))
}

pub fn cvt_statistic(fit: &RegressionFit) -> Result<f64> {
    cvt_statistic_of(fit.residuals.as_slice())
}

fn upper_normal_result(
    method: Method,
    fit: &RegressionFit,
    statistic: f64,
    center: f64,
    var: f64,
    alpha: f64,
) -> TestResult {
    let n = fit.n();
    let standardized = (n as f64).sqrt() * (statistic - center) / var.sqrt();
    let p_value = normal_sf(standardized);
    TestResult {
        method,
        statistic,
        standardized,
        p_value,
        reject: p_value < alpha,
        alpha,
        dof: None,
        n,
        p: fit.p(),
        k: fit.k,
    }
}

/// Approximate likelihood-ratio test: `√n (T1 - (log 2 + γ)) / √(π²/2 - 2)`
/// against the standard normal upper tail.
pub fn alrt_test(fit: &RegressionFit, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let t1 = alrt_statistic(fit)?;
    Ok(upper_normal_result(
        Method::Alrt,
        fit,
        t1,
        NULL_CONSTANTS.alrt_center,
        NULL_CONSTANTS.alrt_var,
        alpha,
    ))
}

/// Coefficient-of-variation test: `√n (T2 - 2) / √24` against the standard
/// normal upper tail.
pub fn cvt_test(fit: &RegressionFit, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let t2 = cvt_statistic(fit)?;
    Ok(upper_normal_result(
        Method::Cvt,
        fit,
        t2,
        NULL_CONSTANTS.cvt_center,
        NULL_CONSTANTS.cvt_var,
        alpha,
    ))
}

fn squared(fit: &RegressionFit) -> Vec<f64> {
    fit.residuals.iter().map(|r| r * r).collect()
}

fn total_ss(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean) * (x - mean)).sum()
}

fn r_squared(rss: f64, tss: f64) -> f64 {
    if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

fn chi_square_result(
    method: Method,
    fit: &RegressionFit,
    statistic: f64,
    dof: usize,
    alpha: f64,
) -> Result<TestResult> {
    let p_value = ChiSquare::new(dof)?.sf(statistic);
    Ok(TestResult {
        method,
        statistic,
        standardized: statistic,
        p_value,
        reject: p_value < alpha,
        alpha,
        dof: Some(dof),
        n: fit.n(),
        p: fit.p(),
        k: fit.k,
    })
}

/// Residual sum of squares of `target` regressed on `[X, 1]`, reusing the
/// factorization of `X`. The constant column is orthogonalized against
/// `X` the same way one more Householder step would do it.
fn rss_with_intercept(qr: &HouseholderQr, target: &[f64]) -> Result<f64> {
    let n = qr.nrows();
    let p = qr.ncols();
    let mut t = target.to_vec();
    qr.apply_qt(&mut t);
    let mut w = vec![1.0; n];
    qr.apply_qt(&mut w);
    let (t_perp, w_perp) = (&t[p..], &w[p..]);
    let w_norm_sq = dot(w_perp, w_perp);
    let largest = qr.pivots().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let pivot = w_norm_sq.sqrt();
    if pivot < n as f64 * f64::EPSILON * largest.max(pivot) || pivot == 0.0 {
        return Err(Error::RankDeficient {
            rank: p,
            cols: p + 1,
        });
    }
    let proj = dot(w_perp, t_perp);
    Ok((dot(t_perp, t_perp) - proj * proj / w_norm_sq).max(0.0))
}

/// Breusch–Pagan test, Koenker's studentized form: `n·R²` of ε̂² regressed on
/// `(1, Xᵢ)`, referred to χ²ₚ.
pub fn bp_test(data: &Dataset, fit: &RegressionFit, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let (n, p) = (data.n(), data.p());
    if fit.n() != n || fit.p() != p {
        return Err(Error::DimensionMismatch(
            "fit does not belong to this dataset".into(),
        ));
    }
    if n <= p + 1 {
        return Err(Error::NotApplicable(format!(
            "Breusch-Pagan needs n > p + 1 (n = {n}, p = {p})"
        )));
    }
    let target = squared(fit);
    let rss = match fit.factorization() {
        Some(qr) => rss_with_intercept(qr, &target)?,
        None => rss_with_intercept(&HouseholderQr::new(data.x()), &target)?,
    };
    let stat = n as f64 * r_squared(rss, total_ss(&target));
    chi_square_result(Method::Bp, fit, stat, p, alpha)
}

/// Number of White auxiliary regressors besides the intercept.
pub fn white_dof(p: usize) -> usize {
    p * (p + 1) / 2
}

/// Whether the White auxiliary regression can be fitted.
pub fn white_applicable(n: usize, p: usize) -> bool {
    white_dof(p) < n.saturating_sub(1)
}

/// Auxiliary design of the White test: intercept, then `x_j x_l` for `l ≥ j`.
pub fn white_design(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let mut z = DMatrix::zeros(n, 1 + white_dof(p));
    z.column_mut(0).fill(1.0);
    let mut c = 1;
    for j in 0..p {
        for l in j..p {
            let col = x.column(j).component_mul(&x.column(l));
            z.set_column(c, &col);
            c += 1;
        }
    }
    z
}

/// White test: `n·R²` of ε̂² on an intercept and all cross products
/// `x_j x_l (l ≥ j)`, referred to χ² with p(p+1)/2 degrees of freedom.
pub fn white_test(data: &Dataset, fit: &RegressionFit, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let (n, p) = (data.n(), data.p());
    if fit.n() != n || fit.p() != p {
        return Err(Error::DimensionMismatch(
            "fit does not belong to this dataset".into(),
        ));
    }
    let dof = white_dof(p);
    if !white_applicable(n, p) {
        return Err(Error::NotApplicable(format!(
            "White test is not applicable when p(p+1)/2 >= n - 1 (p = {p}, p(p+1)/2 = {dof}, n = {n})"
        )));
    }
    let target = squared(fit);
    let aux = Dataset::new(white_design(data.x()), DVector::from_vec(target.clone()))?;
    let aux_fit = fit_ols(&aux)?;
    let stat = n as f64 * r_squared(aux_fit.rss, total_ss(&target));
    chi_square_result(Method::White, fit, stat, dof, alpha)
}

/// Runs one method against a fitted dataset.
pub fn run_test(
    method: Method,
    data: &Dataset,
    fit: &RegressionFit,
    alpha: f64,
) -> Result<TestResult> {
    match method {
        Method::Alrt => alrt_test(fit, alpha),
        Method::Cvt => cvt_test(fit, alpha),
        Method::Bp => bp_test(data, fit, alpha),
        Method::White => white_test(data, fit, alpha),
    }
}
