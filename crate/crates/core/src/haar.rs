//! Haar-distributed k-frames and the moment identities behind the null
//! theory of the two tests.
//!
//! Under the null, `ε̂ = U z` with `U` the first k columns of a Haar
//! orthogonal n×n matrix and `z ~ N(0, I_k)`. Every mean and covariance in
//! [`lemma1_moments`] and [`lemma2_moments`] reduces to mixed moments of the
//! entries `v_ij` of `U`; [`exact_moment_table`] lists them and
//! [`verify_identities`] checks each one by Monte Carlo.

use std::f64::consts::{LN_2, PI};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::EULER_GAMMA;
use crate::error::{Error, Result};
use crate::linalg::HouseholderQr;

/// An n×k matrix with orthonormal columns, distributed as the first k
/// columns of a Haar orthogonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarFrame {
    u: DMatrix<f64>,
}

impl HaarFrame {
    /// QR of an n×k standard Gaussian matrix, with each column of Q
    /// multiplied by the sign of the matching diagonal entry of R. That makes
    /// the factorization the unique one with positive diagonal, whose Q is
    /// exactly Haar.
    pub fn sample<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        check_frame_shape(n, k)?;
        let gauss: Vec<f64> = (0..n * k).map(|_| rng.sample(StandardNormal)).collect();
        let qr = HouseholderQr::from_column_major(n, k, gauss);
        let mut u = qr.thin_q(k);
        for (j, d) in qr.pivots().iter().enumerate() {
            if *d < 0.0 {
                u.column_mut(j).neg_mut();
            }
        }
        Ok(HaarFrame { u })
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn k(&self) -> usize {
        self.u.ncols()
    }

    /// `‖UᵀU - I‖∞`, entrywise.
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.k();
        (self.u.transpose() * &self.u - DMatrix::identity(k, k)).amax()
    }

    /// Squared Euclidean norm of row `i`.
    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.u.row(i).norm_squared()
    }
}

fn check_frame_shape(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidShape(format!(
            "need 1 <= k <= n, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

pub fn sample_haar_frame(n: usize, k: usize, seed: u64) -> Result<HaarFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    HaarFrame::sample(n, k, &mut rng)
}

/// One mixed moment `E[Π v_{r c}^e]` with its closed form in n.
#[derive(Debug, Clone, Copy)]
pub struct MomentIdentity {
    pub name: &'static str,
    /// `(row, column, exponent)`, 1-based as in `v_11`.
    pub pattern: &'static [(usize, usize, u32)],
    pub exact: fn(f64) -> f64,
    /// The closed form is only claimed approximately.
    pub approximate: bool,
}

impl MomentIdentity {
    pub fn rows_needed(&self) -> usize {
        self.pattern.iter().map(|t| t.0).max().unwrap_or(0)
    }

    pub fn cols_needed(&self) -> usize {
        self.pattern.iter().map(|t| t.1).max().unwrap_or(0)
    }

    pub fn exact_at(&self, n: usize) -> f64 {
        (self.exact)(n as f64)
    }

    /// The integrand `Π v_{rc}^e` evaluated on one frame.
    pub fn integrand(&self, u: &DMatrix<f64>) -> f64 {
        self.pattern
            .iter()
            .map(|&(r, c, e)| u[(r - 1, c - 1)].powi(e as i32))
            .product()
    }
}

macro_rules! identity {
    ($name:expr, [$(($r:expr, $c:expr, $e:expr)),+ $(,)?], $f:expr) => {
        MomentIdentity { name: $name, pattern: &[$(($r, $c, $e)),+], exact: $f, approximate: false }
    };
    ($name:expr, [$(($r:expr, $c:expr, $e:expr)),+ $(,)?], $f:expr, approximate) => {
        MomentIdentity { name: $name, pattern: &[$(($r, $c, $e)),+], exact: $f, approximate: true }
    };
}

/// The mixed-moment identities used to derive the null moments, exactly as
/// stated in the source derivation. Some of them disagree with simulation;
/// [`verify_identities`] reports which.
pub fn exact_moment_table() -> Vec<MomentIdentity> {
    fn d6(n: f64) -> f64 {
        n * (n + 2.0) * (n + 2.0) * (n + 4.0) * (n + 6.0)
    }
    fn sq4(n: f64) -> f64 {
        (n * n - 4.0) * (n * n - 4.0)
    }
    vec![
        // single entry
        identity!("E[v11^2]", [(1, 1, 2)], |n| 1.0 / n),
        identity!("E[v11^4]", [(1, 1, 4)], |n| 3.0 / (n * (n + 2.0))),
        identity!("E[v11^6]", [(1, 1, 6)], |n| 15.0
            / (n * (n + 2.0) * (n + 4.0))),
        identity!("E[v11^8]", [(1, 1, 8)], |n| 105.0
            / (n * (n + 2.0) * (n + 4.0) * (n + 6.0))),
        // two entries, same row
        identity!("E[v11^2 v12^2]", [(1, 1, 2), (1, 2, 2)], |n| 1.0
            / (n * (n + 1.0))),
        identity!("E[v11^4 v12^2]", [(1, 1, 4), (1, 2, 2)], |n| 3.0
            / (n * (n + 2.0) * (n + 4.0))),
        identity!("E[v11^6 v12^2]", [(1, 1, 6), (1, 2, 2)], |n| {
            15.0 / (n * (n + 2.0) * (n + 4.0) * (n + 6.0))
        }),
        identity!("E[v11^4 v12^4]", [(1, 1, 4), (1, 2, 4)], |n| (9.0 * n
            - 6.0)
            / d6(n)),
        // two entries, different rows and columns
        identity!("E[v11^4 v22^2]", [(1, 1, 4), (2, 2, 2)], |n| {
            3.0 * (n + 3.0) / (n * (n - 1.0) * (n + 2.0) * (n + 4.0))
        }),
        identity!("E[v11^4 v22^4]", [(1, 1, 4), (2, 2, 4)], |n| {
            (9.0 * n * n + 81.0 * n + 222.0) / ((n - 1.0) * d6(n))
        }),
        // three entries, same row
        identity!(
            "E[v11^2 v12^2 v13^2]",
            [(1, 1, 2), (1, 2, 2), (1, 3, 2)],
            |n| { 1.0 / (n * (n + 2.0) * (n + 4.0)) }
        ),
        identity!(
            "E[v11^4 v12^2 v13^2]",
            [(1, 1, 4), (1, 2, 2), (1, 3, 2)],
            |n| { 3.0 * (n * n + 4.0) / ((n - 2.0) * d6(n)) }
        ),
        // three entries, different rows or columns
        identity!(
            "E[v11^2 v12^2 v22^2]",
            [(1, 1, 2), (1, 2, 2), (2, 2, 2)],
            |n| { (n + 1.0) / (n * (n - 1.0) * (n + 2.0) * (n + 4.0)) }
        ),
        identity!(
            "E[v11^2 v12^2 v23^2]",
            [(1, 1, 2), (1, 2, 2), (2, 3, 2)],
            |n| { (n + 3.0) / (n * (n - 1.0) * (n + 2.0) * (n + 4.0)) }
        ),
        identity!(
            "E[v11^4 v21^2 v22^2]",
            [(1, 1, 4), (2, 1, 2), (2, 2, 2)],
            |n| { (3.0 * n * n + 15.0 * n + 42.0) / ((n - 1.0) * d6(n)) }
        ),
        identity!(
            "E[v11^4 v22^2 v23^2]",
            [(1, 1, 4), (2, 2, 2), (2, 3, 2)],
            |n| {
                (3.0 * n.powi(3) + 21.0 * n * n + 12.0 * n - 156.0)
                    / ((n - 1.0) * (n - 2.0) * d6(n))
            }
        ),
        // four entries, same row
        identity!(
            "E[v11^2 v12^2 v13^2 v14^2]",
            [(1, 1, 2), (1, 2, 2), (1, 3, 2), (1, 4, 2)],
            |n| (n.powi(3) - 3.0 * n * n - 4.0 * n - 60.0) / ((n - 2.0) * (n - 3.0) * d6(n))
        ),
        // four entries, different rows or columns
        identity!(
            "E[v11^2 v12^2 v21^2 v22^2]",
            [(1, 1, 2), (1, 2, 2), (2, 1, 2), (2, 2, 2)],
            |n| (n.powi(3) + 3.0 * n * n - 4.0 * n - 36.0) / ((n - 1.0) * (n - 2.0) * d6(n))
        ),
        identity!(
            "E[v11^2 v12^2 v21^2 v23^2]",
            [(1, 1, 2), (1, 2, 2), (2, 1, 2), (2, 3, 2)],
            |n| {
                (n.powi(4) + 3.0 * n.powi(3) - 10.0 * n * n - 36.0 * n + 96.0)
                    / (n * (n - 1.0) * sq4(n) * (n + 4.0) * (n + 6.0))
            }
        ),
        identity!(
            "E[v11^3 v12 v21 v22]",
            [(1, 1, 3), (1, 2, 1), (2, 1, 1), (2, 2, 1)],
            |n| -3.0 / (n * (n - 1.0) * (n + 2.0) * (n + 4.0))
        ),
        identity!(
            "E[v11^2 v12^2 v23^2 v24^2]",
            [(1, 1, 2), (1, 2, 2), (2, 3, 2), (2, 4, 2)],
            |n| {
                (n.powi(4) + 5.0 * n.powi(3) - 10.0 * n * n - 44.0 * n + 120.0)
                    / (n * (n - 1.0) * sq4(n) * (n + 4.0) * (n + 6.0))
            }
        ),
        identity!(
            "E[v11^3 v12 v21^3 v22]",
            [(1, 1, 3), (1, 2, 1), (2, 1, 3), (2, 2, 1)],
            |n| -(9.0 * n - 6.0) / ((n - 1.0) * d6(n))
        ),
        identity!(
            "E[v11^3 v12 v21 v22^3]",
            [(1, 1, 3), (1, 2, 1), (2, 1, 1), (2, 2, 3)],
            |n| -(9.0 * n - 6.0) / ((n - 1.0) * d6(n)),
            approximate
        ),
        // more than four entries
        identity!(
            "E[v11^2 v12 v13 v22 v23]",
            [(1, 1, 2), (1, 2, 1), (1, 3, 1), (2, 2, 1), (2, 3, 1)],
            |n| -1.0 / (n * (n - 1.0) * (n + 2.0) * (n + 4.0))
        ),
        identity!(
            "E[v11^3 v12 v21 v22 v23^2]",
            [(1, 1, 3), (1, 2, 1), (2, 1, 1), (2, 2, 1), (2, 3, 2)],
            |n| -(3.0 * n * n - 6.0 * n - 48.0) / ((n - 1.0) * (n - 2.0) * d6(n))
        ),
        identity!(
            "E[v11^2 v12 v13 v21^2 v22 v23]",
            [
                (1, 1, 2),
                (1, 2, 1),
                (1, 3, 1),
                (2, 1, 2),
                (2, 2, 1),
                (2, 3, 1)
            ],
            |n| {
                -(n.powi(3) - 6.0 * n * n + 20.0 * n - 48.0)
                    / (n * (n - 1.0) * sq4(n) * (n + 4.0) * (n + 6.0))
            }
        ),
        identity!(
            "E[v11 v12 v13 v14 v21 v22 v23 v24]",
            [
                (1, 1, 1),
                (1, 2, 1),
                (1, 3, 1),
                (1, 4, 1),
                (2, 1, 1),
                (2, 2, 1),
                (2, 3, 1),
                (2, 4, 1)
            ],
            |n| {
                3.0 * (n.powi(3) - 6.0 * n * n + 20.0 * n - 48.0)
                    / (n * (n - 1.0) * (n - 3.0) * sq4(n) * (n + 4.0) * (n + 6.0))
            }
        ),
        identity!(
            "E[v11^2 v12 v13 v22 v23 v24^2]",
            [
                (1, 1, 2),
                (1, 2, 1),
                (1, 3, 1),
                (2, 2, 1),
                (2, 3, 1),
                (2, 4, 2)
            ],
            |n| {
                -(n.powi(3) - 6.0 * n * n + 20.0 * n - 48.0)
                    / (n * (n - 1.0) * sq4(n) * (n + 4.0) * (n + 6.0))
            },
            approximate
        ),
    ]
}

/// Exact moments of the squared row norms `‖vᵢ‖² ~ Beta(k/2, (n-k)/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaNormMoments {
    pub mean: f64,
    pub var: f64,
    /// Covariance between two different rows.
    pub cov: f64,
}

pub fn beta_norm_moments(n: usize, k: usize) -> Result<BetaNormMoments> {
    check_frame_shape(n, k)?;
    let nf = n as f64;
    let c = k as f64 / nf;
    let cov = if n > 1 {
        2.0 * c * (c - 1.0) / ((nf - 1.0) * (nf + 2.0))
    } else {
        0.0
    };
    Ok(BetaNormMoments {
        mean: c,
        var: 2.0 * c * (1.0 - c) / (nf + 2.0),
        cov,
    })
}

/// Expansions of log-norm moments, truncated before their `O(1/n²)`,
/// `O(1/k²)` and `O(1/(nk))` remainders. Accurate only for large n and k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormExpansions {
    /// `E log ‖vᵢ‖²`
    pub log: f64,
    /// `E ‖vᵢ‖² log ‖vᵢ‖²`
    pub norm_log: f64,
    /// `E (log ‖vᵢ‖²)²`
    pub log_sq: f64,
    /// `E log ‖v₁‖² log ‖v₂‖²`
    pub log_log_cross: f64,
    /// `E ‖v₁‖² log ‖v₂‖²`
    pub norm_log_cross: f64,
}

pub fn log_norm_expansions(n: usize, k: usize) -> Result<LogNormExpansions> {
    check_frame_shape(n, k)?;
    let (nf, kf) = (n as f64, k as f64);
    let c = kf / nf;
    let lc = c.ln();
    let d = 1.0 / nf - 1.0 / kf;
    Ok(LogNormExpansions {
        log: lc + d,
        norm_log: c * (lc - d),
        log_sq: lc * lc + 2.0 * d * lc - 2.0 * d,
        log_log_cross: lc * lc + 2.0 * d * lc,
        norm_log_cross: c * (lc + d),
    })
}

/// Mean vector and covariance matrix of a pair of residual power sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointMoments {
    pub mu: [f64; 2],
    pub sigma: [[f64; 2]; 2],
}

/// Null mean and covariance of `(Σ ε̂ᵢ², Σ log ε̂ᵢ²)`.
pub fn lemma1_moments(n: usize, k: usize) -> Result<JointMoments> {
    check_frame_shape(n, k)?;
    let (nf, kf) = (n as f64, k as f64);
    let c = kf / nf;
    let off = 2.0 * nf;
    Ok(JointMoments {
        mu: [kf, nf * (-EULER_GAMMA - LN_2 + c.ln())],
        sigma: [[2.0 * kf, off], [off, nf * (PI * PI / 2.0 + 2.0 / c - 2.0)]],
    })
}

/// Null moments of `(Σ ε̂ᵢ⁴, Σ ε̂ᵢ²)`: the exact finite-n covariance and the
/// simplified leading-order display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Moments {
    pub mu: [f64; 2],
    pub exact: [[f64; 2]; 2],
    pub display: [[f64; 2]; 2],
}

impl Lemma2Moments {
    pub fn exact_moments(&self) -> JointMoments {
        JointMoments {
            mu: self.mu,
            sigma: self.exact,
        }
    }

    pub fn display_moments(&self) -> JointMoments {
        JointMoments {
            mu: self.mu,
            sigma: self.display,
        }
    }
}

pub fn lemma2_moments(n: usize, k: usize) -> Result<Lemma2Moments> {
    check_frame_shape(n, k)?;
    if n <= 3 {
        return Err(Error::InvalidShape(format!(
            "exact fourth-moment variance needs n > 3, got {n}"
        )));
    }
    let (nf, kf) = (n as f64, k as f64);
    let mean4 = 3.0 * kf * (kf + 2.0) / (nf + 2.0);
    let var4 = exact_var_sum_fourth(nf, kf);
    let cov = (12.0 * kf * kf * (nf + 4.0) + 110.0 * kf) / ((nf + 2.0) * (nf + 4.0));
    let display_var4 = 24.0 * kf.powi(4) / nf.powi(3) + 72.0 * kf.powi(3) / (nf * nf);
    let display_cov = 12.0 * kf * kf / (nf + 2.0);
    Ok(Lemma2Moments {
        mu: [mean4, kf],
        exact: [[var4, cov], [cov, 2.0 * kf]],
        display: [[display_var4, display_cov], [display_cov, 2.0 * kf]],
    })
}

fn exact_var_sum_fourth(n: f64, k: f64) -> f64 {
    let poly = |c: &[f64]| c.iter().fold(0.0, |acc, a| acc * n + a);
    let num = 24.0 * k.powi(4) * poly(&[1.0, 10.0, -121.0, 152.0, -78.0])
        + 72.0 * k.powi(3) * poly(&[1.0, 7.0, -50.0, 384.0, -1132.0, 1200.0])
        + 24.0 * k * k * poly(&[15.0, 89.0, -751.0, -3245.0, 18394.0, -20514.0])
        + 72.0 * k * poly(&[6.0, -1.0, -63.0, 498.0, -1882.0, 2208.0]);
    let den = (n - 3.0) * (n * n - 4.0).powi(2) * (n + 4.0) * (n + 6.0);
    num / den
}

/// Monte Carlo outcome for one identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub approximate: bool,
    pub exact: f64,
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    pub z: Option<f64>,
    /// Band in standard errors that `|z|` must stay within.
    pub band: f64,
    pub pass: Option<bool>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<IdentityCheck>,
    pub warnings: Vec<String>,
}

impl VerificationReport {
    /// True when every check that ran passed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass != Some(false))
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| c.pass == Some(false))
    }

    pub fn get(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed columns: `name,exact,estimate,se,z,pass`. Skipped identities
    /// leave the estimate columns empty and write `skipped` as the verdict.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,exact,estimate,se,z,pass\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for c in &self.checks {
            let verdict = match c.pass {
                Some(true) => "true",
                Some(false) => "false",
                None => "skipped",
            };
            let _ = writeln!(
                out,
                "\"{}\",{:e},{},{},{},{}",
                c.name,
                c.exact,
                opt(c.estimate),
                opt(c.se),
                c.z.map(|z| format!("{z:.4}")).unwrap_or_default(),
                verdict
            );
        }
        out
    }
}

pub const EXACT_BAND: f64 = 4.0;
pub const APPROXIMATE_BAND: f64 = 6.0;
pub const MIN_SAMPLES: usize = 10_000;
const CHUNK: usize = 10_000;

/// Running mean and sum of squared deviations, merged with Chan's update.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Accumulator) -> Accumulator {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        Accumulator {
            count,
            mean: self.mean + d * other.count / count,
            m2: self.m2 + other.m2 + d * d * self.count * other.count / count,
        }
    }

    fn standard_error(&self) -> f64 {
        if self.count < 2.0 {
            return f64::INFINITY;
        }
        (self.m2 / (self.count - 1.0) / self.count).sqrt()
    }
}

enum Target {
    Identity(MomentIdentity),
    NormMean,
    NormVar(f64),
    NormCov(f64),
}

struct Entry {
    name: String,
    approximate: bool,
    exact: f64,
    target: Target,
}

fn build_entries(n: usize, k: usize) -> Result<(Vec<Entry>, Vec<IdentityCheck>)> {
    let mut run = Vec::new();
    let mut skipped = Vec::new();
    for id in exact_moment_table() {
        let exact = id.exact_at(n);
        let reason = if id.cols_needed() > k {
            Some(format!(
                "insufficient columns: needs k >= {}",
                id.cols_needed()
            ))
        } else if id.rows_needed() > n {
            Some(format!(
                "insufficient rows: needs n >= {}",
                id.rows_needed()
            ))
        } else if !exact.is_finite() {
            Some(format!("closed form undefined at n = {n}"))
        } else {
            None
        };
        match reason {
            Some(r) => skipped.push(IdentityCheck {
                name: id.name.to_string(),
                approximate: id.approximate,
                exact,
                estimate: None,
                se: None,
                z: None,
                band: band(id.approximate),
                pass: None,
                skipped: Some(r),
            }),
            None => run.push(Entry {
                name: id.name.to_string(),
                approximate: id.approximate,
                exact,
                target: Target::Identity(id),
            }),
        }
    }
    let beta = beta_norm_moments(n, k)?;
    run.push(Entry {
        name: "E[|v1|^2]".into(),
        approximate: false,
        exact: beta.mean,
        target: Target::NormMean,
    });
    run.push(Entry {
        name: "var(|v1|^2)".into(),
        approximate: false,
        exact: beta.var,
        target: Target::NormVar(beta.mean),
    });
    if n >= 2 {
        run.push(Entry {
            name: "cov(|v1|^2,|v2|^2)".into(),
            approximate: false,
            exact: beta.cov,
            target: Target::NormCov(beta.mean),
        });
    }
    Ok((run, skipped))
}

fn band(approximate: bool) -> f64 {
    if approximate {
        APPROXIMATE_BAND
    } else {
        EXACT_BAND
    }
}

fn evaluate(entry: &Entry, frame: &HaarFrame) -> f64 {
    match &entry.target {
        Target::Identity(id) => id.integrand(frame.u()),
        Target::NormMean => frame.row_norm_sq(0),
        Target::NormVar(mean) => (frame.row_norm_sq(0) - mean).powi(2),
        Target::NormCov(mean) => (frame.row_norm_sq(0) - mean) * (frame.row_norm_sq(1) - mean),
    }
}

/// Checks every identity, plus the row-norm beta moments, against `samples`
/// independent frames. Each block of 10 000 frames draws from its own
/// ChaCha stream, so the report depends only on `(n, k, samples, seed)`.
pub fn verify_identities(
    n: usize,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    check_frame_shape(n, k)?;
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let mut warnings = Vec::new();
    if samples < MIN_SAMPLES {
        warnings.push(format!(
            "only {samples} samples; standard errors below {MIN_SAMPLES} samples are unreliable"
        ));
    }
    let (entries, skipped) = build_entries(n, k)?;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Vec<Accumulator>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut acc = vec![Accumulator::default(); entries.len()];
            for _ in 0..count {
                let frame = HaarFrame::sample(n, k, &mut rng).expect("shape checked");
                for (a, e) in acc.iter_mut().zip(&entries) {
                    a.push(evaluate(e, &frame));
                }
            }
            acc
        })
        .collect();
    let totals = partial
        .into_iter()
        .fold(vec![Accumulator::default(); entries.len()], |acc, part| {
            acc.into_iter().zip(part).map(|(a, b)| a.merge(b)).collect()
        });

    let mut checks: Vec<IdentityCheck> = entries
        .iter()
        .zip(&totals)
        .map(|(e, acc)| {
            let se = acc.standard_error();
            let gap = acc.mean - e.exact;
            let b = band(e.approximate);
            let (z, pass) = if se > 0.0 {
                let z = gap / se;
                (z, z.abs() <= b)
            } else {
                (
                    if gap == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY.copysign(gap)
                    },
                    gap.abs() <= 1e-12,
                )
            };
            IdentityCheck {
                name: e.name.clone(),
                approximate: e.approximate,
                exact: e.exact,
                estimate: Some(acc.mean),
                se: Some(se),
                z: Some(z),
                band: b,
                pass: Some(pass),
                skipped: None,
            }
        })
        .collect();
    checks.extend(skipped);
    Ok(VerificationReport {
        n,
        k,
        samples,
        seed,
        checks,
        warnings,
    })
}
