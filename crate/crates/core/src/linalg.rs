//! Householder QR factorization on column-major storage.
//!
//! The factorization keeps the reflectors in compact form (unit-leading
//! vectors below the diagonal, scalar factors in `tau`), so `Qᵀy`, `Qy` and
//! least-squares residuals cost O(np) once the O(np²) factorization is done.

use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct HouseholderQr {
    n: usize,
    p: usize,
    /// Column-major n×p. Strict upper triangle holds R, strict lower triangle
    /// holds the reflector tails.
    factors: Vec<f64>,
    diag: Vec<f64>,
    tau: Vec<f64>,
}

impl HouseholderQr {
    /// Factors `a` (n×p, n ≥ p). Panics if `a` is wider than tall.
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (n, p) = a.shape();
        Self::from_column_major(n, p, a.as_slice().to_vec())
    }

    pub fn from_column_major(n: usize, p: usize, mut factors: Vec<f64>) -> Self {
        assert!(n >= p, "QR needs at least as many rows as columns");
        assert_eq!(factors.len(), n * p);
        let mut diag = vec![0.0; p];
        let mut tau = vec![0.0; p];
        for j in 0..p {
            let (head, tail) = factors.split_at_mut((j + 1) * n);
            let col = &mut head[j * n + j..];
            let (t, beta) = make_reflector(col);
            diag[j] = beta;
            tau[j] = t;
            if t == 0.0 {
                continue;
            }
            let v = &col[1..];
            for c in 0..(p - j - 1) {
                let target = &mut tail[c * n + j..(c + 1) * n];
                reflect(v, t, target);
            }
        }
        HouseholderQr {
            n,
            p,
            factors,
            diag,
            tau,
        }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    /// Diagonal of R (the pivots).
    pub fn pivots(&self) -> &[f64] {
        &self.diag
    }

    /// Numerical rank: pivots smaller than `n·ε·max|pivot|` count as dependent.
    pub fn rank(&self) -> usize {
        let max = self.diag.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        if max == 0.0 {
            return 0;
        }
        let tol = self.n as f64 * f64::EPSILON * max;
        self.diag.iter().filter(|d| d.abs() >= tol).count()
    }

    fn reflector(&self, j: usize) -> &[f64] {
        &self.factors[j * self.n + j + 1..(j + 1) * self.n]
    }

    /// Overwrites `y` with `Qᵀy`.
    pub fn apply_qt(&self, y: &mut [f64]) {
        assert_eq!(y.len(), self.n);
        for j in 0..self.p {
            if self.tau[j] != 0.0 {
                reflect(self.reflector(j), self.tau[j], &mut y[j..]);
            }
        }
    }

    /// Overwrites `y` with `Qy`.
    pub fn apply_q(&self, y: &mut [f64]) {
        assert_eq!(y.len(), self.n);
        for j in (0..self.p).rev() {
            if self.tau[j] != 0.0 {
                reflect(self.reflector(j), self.tau[j], &mut y[j..]);
            }
        }
    }

    /// Solves `R b = rhs[..p]` by back substitution.
    pub fn solve_r(&self, rhs: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut b = rhs[..p].to_vec();
        for i in (0..p).rev() {
            let s: f64 = ((i + 1)..p)
                .map(|c| self.factors[c * self.n + i] * b[c])
                .sum();
            b[i] = (b[i] - s) / self.diag[i];
        }
        b
    }

    /// Least-squares coefficients and residuals for a right-hand side.
    pub fn least_squares(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut t = y.to_vec();
        self.apply_qt(&mut t);
        let beta = self.solve_r(&t);
        t[..self.p].iter_mut().for_each(|v| *v = 0.0);
        self.apply_q(&mut t);
        (beta, t)
    }

    /// First `k` columns of Q.
    pub fn thin_q(&self, k: usize) -> DMatrix<f64> {
        assert!(k <= self.n);
        let mut q = DMatrix::zeros(self.n, k);
        for j in 0..k {
            let col = &mut q.as_mut_slice()[j * self.n..(j + 1) * self.n];
            col[j] = 1.0;
            self.apply_q(col);
        }
        q
    }
}

/// Turns `x` into a Householder reflector in place. Returns `(tau, beta)`
/// with `(I - tau v vᵀ) x = beta e₁`, `v = (1, x[1..])` after the call.
fn make_reflector(x: &mut [f64]) -> (f64, f64) {
    let alpha = x[0];
    let sigma = dot(&x[1..], &x[1..]);
    if sigma == 0.0 {
        return (0.0, alpha);
    }
    let norm = alpha.hypot(sigma.sqrt());
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    x[1..].iter_mut().for_each(|v| *v *= scale);
    x[0] = beta;
    (tau, beta)
}

/// Applies `I - tau v vᵀ` (with implicit leading 1 in `v`) to `y`.
#[inline]
fn reflect(v_tail: &[f64], tau: f64, y: &mut [f64]) {
    let (head, rest) = y.split_first_mut().expect("non-empty target");
    let d = tau * (*head + dot(v_tail, rest));
    *head -= d;
    axpy(-d, v_tail, rest);
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0_f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let head = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    head + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
