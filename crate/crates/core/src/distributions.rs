//! Standard normal and chi-square distribution functions, plus the null
//! centering/scaling constants of the ALRT and CVT statistics.

use std::f64::consts::{LN_2, PI, SQRT_2};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Centering and variance of `√n (T - center)` under homoscedasticity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullConstants {
    /// `log 2 + γ`
    pub alrt_center: f64,
    /// `π²/2 - 2`
    pub alrt_var: f64,
    pub cvt_center: f64,
    pub cvt_var: f64,
    pub euler_gamma: f64,
}

impl NullConstants {
    pub const fn new() -> Self {
        NullConstants {
            alrt_center: LN_2 + EULER_GAMMA,
            alrt_var: PI * PI / 2.0 - 2.0,
            cvt_center: 2.0,
            cvt_var: 24.0,
            euler_gamma: EULER_GAMMA,
        }
    }
}

impl Default for NullConstants {
    fn default() -> Self {
        Self::new()
    }
}

pub const NULL_CONSTANTS: NullConstants = NullConstants::new();

/// Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// 1 - Φ(z), without cancellation in the upper tail.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// Chi-square distribution with integer degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChiSquare {
    dof: usize,
}

impl ChiSquare {
    pub fn new(dof: usize) -> Result<Self> {
        if dof < 1 {
            return Err(Error::InvalidDof(dof));
        }
        Ok(ChiSquare { dof })
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        gamma_p(self.dof as f64 / 2.0, x / 2.0)
    }

    /// Upper tail `1 - F(x)`.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        gamma_q(self.dof as f64 / 2.0, x / 2.0)
    }
}

pub fn chisq_cdf(x: f64, dof: usize) -> Result<f64> {
    Ok(ChiSquare::new(dof)?.cdf(x))
}

pub fn chisq_sf(x: f64, dof: usize) -> Result<f64> {
    Ok(ChiSquare::new(dof)?.sf(x))
}

const MAX_ITER: usize = 1_000_000;
const REL_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Regularized lower incomplete gamma `P(a, x)`.
///
/// Series below `x < a + 1`, continued fraction for the complement above.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

/// `log(e^{-x} x^a / Γ(a))`
fn log_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - libm::lgamma(a)
}

/// Power series for `P(a, x)`; converges for all x but is only efficient
/// below `a + 1`.
pub fn gamma_p_series(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut denom = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * REL_EPS {
            break;
        }
    }
    (sum.ln() + log_prefactor(a, x)).exp().min(1.0)
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`;
/// efficient above `a + 1`.
pub fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < REL_EPS {
            break;
        }
    }
    (h.ln() + log_prefactor(a, x)).exp().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bisect_quantile(target: f64) -> f64 {
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal_cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn null_constants_to_six_decimals() {
        let c = NullConstants::default();
        assert_abs_diff_eq!(c.alrt_center, 1.270363, epsilon = 5e-7);
        assert_abs_diff_eq!(c.alrt_var, 2.934802, epsilon = 5e-7);
        assert_eq!(c.cvt_center, 2.0);
        assert_eq!(c.cvt_var, 24.0);
        assert_eq!(c.euler_gamma, 0.5772156649015329);
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_abs_diff_eq!(normal_cdf(1.959964), 0.975, epsilon = 1e-6);
        assert_abs_diff_eq!(bisect_quantile(0.975), 1.959964, epsilon = 1e-6);
        assert!(normal_cdf(-8.0) < 1e-15);
        assert!(normal_cdf(-40.0) >= 0.0);
        assert_eq!(normal_cdf(40.0), 1.0);
        // Φ(1) from a 30-digit reference.
        assert_abs_diff_eq!(normal_cdf(1.0), 0.841_344_746_068_543, epsilon = 1e-15);
    }

    #[test]
    fn normal_symmetry() {
        for i in -80..=80 {
            let z = i as f64 * 0.1;
            assert_abs_diff_eq!(normal_cdf(z) + normal_cdf(-z), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(normal_sf(z), normal_cdf(-z), epsilon = 1e-16);
        }
    }

    #[test]
    fn chisq_two_dof_is_exponential() {
        assert_eq!(chisq_cdf(0.0, 5).unwrap(), 0.0);
        assert_abs_diff_eq!(chisq_cdf(2.0 * LN_2, 2).unwrap(), 0.5, epsilon = 1e-15);
        for i in 0..=1000 {
            let x = i as f64 * 0.1;
            let exact = 1.0 - (-x / 2.0).exp();
            assert_abs_diff_eq!(chisq_cdf(x, 2).unwrap(), exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn series_and_fraction_agree() {
        // Both algorithms converge on either side of the split; compare them
        // directly away from the regime each is tuned for.
        for &(dof, x) in &[
            (50usize, 50.0),
            (50, 40.0),
            (50, 60.0),
            (3, 2.5),
            (200, 210.0),
            (1, 1.5),
        ] {
            let a = dof as f64 / 2.0;
            let series = gamma_p_series(a, x / 2.0);
            let fraction = 1.0 - gamma_q_continued_fraction(a, x / 2.0);
            assert_abs_diff_eq!(series, fraction, epsilon = 1e-10);
            assert_abs_diff_eq!(chisq_cdf(x, dof).unwrap(), series, epsilon = 1e-10);
        }
    }

    #[test]
    fn invalid_dof() {
        assert_eq!(chisq_cdf(1.0, 0), Err(Error::InvalidDof(0)));
        assert_eq!(ChiSquare::new(0), Err(Error::InvalidDof(0)));
    }

    #[test]
    fn cdf_is_monotone_and_bounded() {
        for &dof in &[1usize, 2, 7, 30, 325, 100_000] {
            let chi = ChiSquare::new(dof).unwrap();
            let mut prev = 0.0;
            let hi = dof as f64 * 3.0 + 50.0;
            for i in 0..=400 {
                let x = hi * i as f64 / 400.0;
                let c = chi.cdf(x);
                assert!((0.0..=1.0).contains(&c));
                assert!(c >= prev - 1e-15, "dof {dof}: cdf decreased at {x}");
                assert_abs_diff_eq!(c + chi.sf(x), 1.0, epsilon = 1e-12);
                prev = c;
            }
        }
    }
}
