//! Heteroscedasticity testing for linear regression with many covariates.
//!
//! The two main tests, [`hetero::alrt_test`] and [`hetero::cvt_test`], stay
//! calibrated when the number of covariates grows proportionally with the
//! sample size. Breusch–Pagan and White are provided as baselines.

pub mod distributions;
pub mod error;
pub mod haar;
pub mod hetero;
pub mod linalg;
pub mod regression;
pub mod sim;

pub use error::{Error, Result};
pub use hetero::{Method, TestResult};
pub use regression::{fit_ols, Dataset, RegressionFit};
