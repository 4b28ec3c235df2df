use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hetero::Method;

/// How covariates are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// i.i.d. N(0, 1) entries.
    #[serde(alias = "gaussian")]
    GaussianIid,
    /// i.i.d. Gamma with shape 2 and rate 2 (mean 1).
    #[serde(alias = "gamma")]
    Gamma22,
    /// i.i.d. Uniform(0, 1) entries.
    #[serde(alias = "uniform")]
    Uniform01,
    /// Fixed two-column design `(1, xᵢ)` with `xᵢ = (i-1)/(n-1)`.
    #[serde(alias = "grid")]
    GridLowDim,
}

impl Design {
    pub fn label(self) -> &'static str {
        match self {
            Design::GaussianIid => "gaussian",
            Design::Gamma22 => "gamma",
            Design::Uniform01 => "uniform",
            Design::GridLowDim => "grid",
        }
    }
}

/// Error law. Models 1–3 scale `εᵢ` by a function of `Xᵢ·c`; the S
/// settings use the grid design with `y = g(x) + 0.25 σ(x) ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Null,
    /// `εᵢ exp(Xᵢ·c)`
    #[serde(alias = "model1")]
    Model1Exp,
    /// `εᵢ (1 + Σⱼ cⱼ sin(10 xᵢⱼ))²`
    #[serde(alias = "model2")]
    Model2Sin,
    /// `εᵢ (1 + Xᵢ·c)²`
    #[serde(alias = "model3")]
    Model3Quad,
    /// `g(x) = 1 + sin x`, `σ(x) = exp(c₀x)`
    S1,
    /// `g(x) = 1 + x`, `σ(x) = (1 + c₀ sin 10x)²`
    S2,
    /// `g(x) = 1 + x`, `σ(x) = (1 + c₀x)²`
    S3,
}

impl Model {
    pub fn is_small_sample(self) -> bool {
        matches!(self, Model::S1 | Model::S2 | Model::S3)
    }

    pub fn label(self) -> &'static str {
        match self {
            Model::Null => "null",
            Model::Model1Exp => "model1",
            Model::Model2Sin => "model2",
            Model::Model3Quad => "model3",
            Model::S1 => "s1",
            Model::S2 => "s2",
            Model::S3 => "s3",
        }
    }
}

/// Number of leading covariates that carry heteroscedasticity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeteroFrac {
    /// `p₀ = 1`
    One,
    /// `p₀ = ⌈0.1 p⌉`; only defined for `p > 10`.
    TenPercent,
}

/// Regression coefficients. Residuals, and so every statistic, do not
/// depend on β; it only changes `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRule {
    Zero,
    /// `(b, 0, …, 0)`
    Leading(f64),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub n: usize,
    /// `p/n`; `p` rounds to nearest with ties down. Ignored by the grid design.
    pub ratio: f64,
    pub design: Design,
    pub model: Model,
    pub hetero_frac: HeteroFrac,
    pub c0: f64,
    pub beta: BetaRule,
    pub replications: usize,
    pub alpha: f64,
    pub seed: u64,
    pub tests: Vec<Method>,
}

impl SimScenario {
    /// Gaussian null with all four tests, 2000 replications at α = 0.05.
    pub fn null(n: usize, ratio: f64) -> Self {
        SimScenario {
            n,
            ratio,
            design: Design::GaussianIid,
            model: Model::Null,
            hetero_frac: HeteroFrac::One,
            c0: 0.5,
            beta: BetaRule::Zero,
            replications: 2000,
            alpha: 0.05,
            seed: 0,
            tests: Method::ALL.to_vec(),
        }
    }

    pub fn with_model(mut self, model: Model) -> Self {
        self.model = model;
        self
    }

    pub fn with_design(mut self, design: Design) -> Self {
        self.design = design;
        self
    }

    pub fn with_hetero_frac(mut self, frac: HeteroFrac) -> Self {
        self.hetero_frac = frac;
        self
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = c0;
        self
    }

    pub fn with_beta(mut self, beta: BetaRule) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tests(mut self, tests: &[Method]) -> Self {
        self.tests = tests.to_vec();
        self
    }

    /// Small-sample setting on the grid design with `p = 2`.
    pub fn small_sample(n: usize, model: Model, c0: f64) -> Self {
        SimScenario {
            ratio: 2.0 / n as f64,
            design: Design::GridLowDim,
            model,
            c0,
            tests: vec![Method::Alrt, Method::Cvt],
            ..SimScenario::null(n, 2.0 / n as f64)
        }
    }

    pub fn p(&self) -> usize {
        match self.design {
            Design::GridLowDim => 2,
            _ => (self.ratio * self.n as f64 - 0.5).ceil().max(0.0) as usize,
        }
    }

    pub fn k(&self) -> usize {
        self.n.saturating_sub(self.p())
    }

    /// Number of nonzero entries of `c`.
    pub fn p0(&self) -> usize {
        match self.hetero_frac {
            HeteroFrac::One => 1,
            HeteroFrac::TenPercent => self.p().div_ceil(10),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ratio must lie in (0, 1), got {}",
                self.ratio
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidArgument(
                "replications must be at least 1".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !self.c0.is_finite() {
            return Err(Error::InvalidArgument("c0 must be finite".into()));
        }
        let grid = self.design == Design::GridLowDim;
        if self.model.is_small_sample() && !grid {
            return Err(Error::InvalidArgument(format!(
                "model {} requires the grid design",
                self.model.label()
            )));
        }
        if grid
            && matches!(
                self.model,
                Model::Model1Exp | Model::Model2Sin | Model::Model3Quad
            )
        {
            return Err(Error::InvalidArgument(format!(
                "model {} needs a random design",
                self.model.label()
            )));
        }
        let p = self.p();
        if p == 0 || p >= self.n {
            return Err(Error::InvalidShape(format!(
                "n = {} and ratio {} give p = {p}",
                self.n, self.ratio
            )));
        }
        if grid && self.n < 3 {
            return Err(Error::InvalidShape("grid design needs n >= 3".into()));
        }
        if let BetaRule::Explicit(b) = &self.beta {
            if b.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "beta has {} entries, p = {p}",
                    b.len()
                )));
            }
        }
        self.check_feasible()
    }

    /// Heteroscedastic cells with `p₀ = 0.1p` are only defined for `p > 10`.
    pub fn check_feasible(&self) -> Result<()> {
        let hetero_model = matches!(
            self.model,
            Model::Model1Exp | Model::Model2Sin | Model::Model3Quad
        );
        if hetero_model && self.hetero_frac == HeteroFrac::TenPercent && self.p() <= 10 {
            return Err(Error::InfeasibleScenario(format!(
                "p0 = 0.1p needs p > 10 (n = {}, p = {})",
                self.n,
                self.p()
            )));
        }
        if self.p0() > self.p() {
            return Err(Error::InfeasibleScenario(format!(
                "p0 = {} exceeds p = {}",
                self.p0(),
                self.p()
            )));
        }
        Ok(())
    }

    /// Short human-readable cell label.
    pub fn label(&self) -> String {
        let frac = match self.hetero_frac {
            HeteroFrac::One => "p0=1",
            HeteroFrac::TenPercent => "p0=0.1p",
        };
        match self.model {
            Model::Null => format!(
                "{} n={} p/n={} ({})",
                self.model.label(),
                self.n,
                self.ratio,
                self.design.label()
            ),
            m if m.is_small_sample() => format!("{} c0={} n={}", m.label(), self.c0, self.n),
            m => format!(
                "{} {frac} n={} p/n={} ({})",
                m.label(),
                self.n,
                self.ratio,
                self.design.label()
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_rules() {
        assert_eq!(SimScenario::null(100, 0.05).p(), 5);
        assert_eq!(SimScenario::null(500, 0.3).p(), 150);
        assert_eq!(SimScenario::null(100, 0.7).p(), 70);
        // 0.5 · 5 = 2.5 rounds down.
        assert_eq!(SimScenario::null(5, 0.5).p(), 2);
        assert_eq!(
            SimScenario::null(500, 0.05)
                .with_hetero_frac(HeteroFrac::TenPercent)
                .p0(),
            3
        );
        assert_eq!(SimScenario::small_sample(25, Model::S2, 1.0).p(), 2);
    }

    #[test]
    fn ten_percent_needs_more_than_ten_covariates() {
        let s = SimScenario::null(100, 0.1)
            .with_model(Model::Model1Exp)
            .with_hetero_frac(HeteroFrac::TenPercent);
        assert!(matches!(s.validate(), Err(Error::InfeasibleScenario(_))));
        assert!(s.clone().with_model(Model::Null).validate().is_ok());
        let ok = SimScenario { ratio: 0.3, ..s };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn invalid_scenarios() {
        assert!(SimScenario::null(100, 1.0).validate().is_err());
        assert!(SimScenario::null(100, 0.5)
            .with_replications(0)
            .validate()
            .is_err());
        assert!(SimScenario::null(100, 0.5)
            .with_alpha(1.5)
            .validate()
            .is_err());
        assert!(SimScenario::null(100, 0.5)
            .with_model(Model::S1)
            .validate()
            .is_err());
        assert!(SimScenario::null(100, 0.5)
            .with_design(Design::GridLowDim)
            .with_model(Model::Model2Sin)
            .validate()
            .is_err());
        assert!(SimScenario::null(10, 0.5)
            .with_beta(BetaRule::Explicit(vec![1.0; 4]))
            .validate()
            .is_err());
    }

    #[test]
    fn serde_round_trip() {
        let s = SimScenario::small_sample(50, Model::S3, 0.5).with_seed(7);
        let back: SimScenario = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
