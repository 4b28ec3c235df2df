use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::scenario::{BetaRule, Design, Model, SimScenario};
use crate::error::Result;
use crate::regression::Dataset;

/// Random stream for one replication: ChaCha8 keyed by the scenario seed,
/// stream number = replication index.
pub fn rep_rng(seed: u64, rep_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep_index);
    rng
}

fn draw_design(s: &SimScenario, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n, p) = (s.n, s.p());
    match s.design {
        Design::GaussianIid => DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal)),
        Design::Gamma22 => {
            let g = Gamma::new(2.0, 0.5).expect("valid gamma parameters");
            DMatrix::from_fn(n, p, |_, _| g.sample(rng))
        }
        Design::Uniform01 => DMatrix::from_fn(n, p, |_, _| rng.random::<f64>()),
        Design::GridLowDim => {
            let step = 1.0 / (n - 1) as f64;
            DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { i as f64 * step })
        }
    }
}

/// Standard deviation multiplier of observation `i` given its covariate row.
pub fn error_scale(s: &SimScenario, x: &DMatrix<f64>, i: usize) -> f64 {
    let p0 = s.p0();
    let c0 = s.c0;
    match s.model {
        Model::Null => 1.0,
        Model::Model1Exp => (c0 * (0..p0).map(|j| x[(i, j)]).sum::<f64>()).exp(),
        Model::Model2Sin => {
            let v = 1.0 + c0 * (0..p0).map(|j| (10.0 * x[(i, j)]).sin()).sum::<f64>();
            v * v
        }
        Model::Model3Quad => {
            let v = 1.0 + c0 * (0..p0).map(|j| x[(i, j)]).sum::<f64>();
            v * v
        }
        Model::S1 => 0.25 * (c0 * x[(i, 1)]).exp(),
        Model::S2 => 0.25 * (1.0 + c0 * (10.0 * x[(i, 1)]).sin()).powi(2),
        Model::S3 => 0.25 * (1.0 + c0 * x[(i, 1)]).powi(2),
    }
}

fn mean_response(s: &SimScenario, x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows();
    match s.model {
        Model::S1 => DVector::from_fn(n, |i, _| 1.0 + x[(i, 1)].sin()),
        Model::S2 | Model::S3 => DVector::from_fn(n, |i, _| 1.0 + x[(i, 1)]),
        _ => match &s.beta {
            BetaRule::Zero => DVector::zeros(n),
            BetaRule::Leading(b) => x.column(0) * *b,
            BetaRule::Explicit(b) => x * DVector::from_column_slice(b),
        },
    }
}

/// Draws replication `rep_index` of the scenario. The design is drawn
/// first, then the n standard normal errors, from the replication's stream.
pub fn generate_instance(s: &SimScenario, rep_index: usize) -> Result<Dataset> {
    s.validate()?;
    let mut rng = rep_rng(s.seed, rep_index as u64);
    let x = draw_design(s, &mut rng);
    let mut y = mean_response(s, &x);
    for i in 0..s.n {
        let e: f64 = rng.sample(StandardNormal);
        y[i] += e * error_scale(s, &x, i);
    }
    Dataset::new(x, y)
}
