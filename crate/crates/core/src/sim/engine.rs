use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::generate_instance;
use super::scenario::{Design, SimScenario};
use crate::error::{Error, Result};
use crate::hetero::{run_test, white_applicable, Method, TestResult};
use crate::regression::{fit_ols, residual_moments};

/// Rejection tally of one test over the replications of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestTally {
    pub method: Method,
    /// False when the test cannot be run on this design (reported as NA).
    pub applicable: bool,
    pub rejections: usize,
    /// Replications where the statistic could not be computed, e.g. an
    /// exactly zero residual. They count as neither rejection nor trial.
    pub failures: usize,
    pub replications: usize,
    pub rejection_rate: Option<f64>,
    /// `sqrt(r(1-r)/R)`
    pub mc_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub label: String,
    pub scenario: SimScenario,
    pub p: usize,
    pub k: usize,
    pub p0: usize,
    pub tests: Vec<TestTally>,
    /// Set for cells the design grid cannot realize; no tests were run.
    pub infeasible: Option<String>,
}

impl SimReport {
    pub fn tally(&self, method: Method) -> Option<&TestTally> {
        self.tests.iter().find(|t| t.method == method)
    }

    /// Rejection rate of `method`, `None` when not run or not applicable.
    pub fn rate(&self, method: Method) -> Option<f64> {
        self.tally(method).and_then(|t| t.rejection_rate)
    }

    pub fn infeasible(scenario: &SimScenario, reason: String) -> Self {
        SimReport {
            label: scenario.label(),
            scenario: scenario.clone(),
            p: scenario.p(),
            k: scenario.k(),
            p0: scenario.p0(),
            tests: Vec::new(),
            infeasible: Some(reason),
        }
    }
}

/// Whether `method` can run on every replication of the scenario.
pub fn applicable(method: Method, s: &SimScenario) -> bool {
    let (n, p) = (s.n, s.p());
    let grid = s.design == Design::GridLowDim;
    match method {
        Method::Alrt | Method::Cvt => true,
        // The grid design already contains the intercept, which makes the
        // auxiliary regressions singular.
        Method::Bp => !grid && n > p + 1,
        Method::White => !grid && white_applicable(n, p),
    }
}

/// Per-replication results, one row per replication, one column per test
/// in `scenario.tests`. `None` marks a test that was not applicable or
/// failed on that replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawStatistics {
    pub methods: Vec<Method>,
    pub rows: Vec<Vec<Option<TestResult>>>,
}

impl RawStatistics {
    /// Standardized statistics of one method over the replications where it
    /// was computed.
    pub fn standardized(&self, method: Method) -> Vec<f64> {
        let Some(col) = self.methods.iter().position(|m| *m == method) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter_map(|r| r[col].as_ref().map(|t| t.standardized))
            .collect()
    }
}

fn run_replication(
    s: &SimScenario,
    rep: usize,
    plan: &[(Method, bool)],
) -> Result<Vec<Option<TestResult>>> {
    let data = generate_instance(s, rep)?;
    let fit = fit_ols(&data)?;
    Ok(plan
        .iter()
        .map(|&(m, ok)| {
            if ok {
                run_test(m, &data, &fit, s.alpha).ok()
            } else {
                None
            }
        })
        .collect())
}

/// Runs every replication, in parallel, and keeps each test result.
pub fn run_scenario_raw(s: &SimScenario) -> Result<RawStatistics> {
    s.validate()?;
    let plan: Vec<(Method, bool)> = s.tests.iter().map(|&m| (m, applicable(m, s))).collect();
    let rows = (0..s.replications)
        .into_par_iter()
        .map(|rep| run_replication(s, rep, &plan))
        .collect::<Result<Vec<_>>>()?;
    Ok(RawStatistics {
        methods: s.tests.clone(),
        rows,
    })
}

/// Tallies raw results into a report.
pub fn summarize(s: &SimScenario, raw: &RawStatistics) -> SimReport {
    let tests = raw
        .methods
        .iter()
        .enumerate()
        .map(|(col, &method)| {
            let ok = applicable(method, s);
            let mut rejections = 0;
            let mut failures = 0;
            for row in &raw.rows {
                match &row[col] {
                    Some(t) if t.reject => rejections += 1,
                    Some(_) => {}
                    None if ok => failures += 1,
                    None => {}
                }
            }
            let trials = raw.rows.len() - failures;
            let (rate, se) = if ok && trials > 0 {
                let r = rejections as f64 / trials as f64;
                (Some(r), Some((r * (1.0 - r) / trials as f64).sqrt()))
            } else {
                (None, None)
            };
            TestTally {
                method,
                applicable: ok,
                rejections,
                failures,
                replications: raw.rows.len(),
                rejection_rate: rate,
                mc_se: se,
            }
        })
        .collect();
    SimReport {
        label: s.label(),
        scenario: s.clone(),
        p: s.p(),
        k: s.k(),
        p0: s.p0(),
        tests,
        infeasible: None,
    }
}

/// Size or power of each requested test over the scenario's replications.
/// The result depends only on the scenario, not on the worker count.
pub fn run_scenario(s: &SimScenario) -> Result<SimReport> {
    let raw = run_scenario_raw(s)?;
    Ok(summarize(s, &raw))
}

/// `(Σ ε̂ᵢ², Σ log ε̂ᵢ², Σ ε̂ᵢ⁴)` of the OLS residuals of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSums {
    pub sum_sq: f64,
    pub sum_log_sq: f64,
    pub sum_fourth: f64,
}

/// Residual power sums for every replication of the scenario.
pub fn residual_power_sums(s: &SimScenario) -> Result<Vec<PowerSums>> {
    s.validate()?;
    (0..s.replications)
        .into_par_iter()
        .map(|rep| {
            let data = generate_instance(s, rep)?;
            let m = residual_moments(&fit_ols(&data)?)?;
            Ok(PowerSums {
                sum_sq: m.sum_sq,
                sum_log_sq: m.sum_log_sq,
                sum_fourth: m.sum_fourth,
            })
        })
        .collect()
}

/// Runs a scenario, or returns an infeasible marker report when the cell
/// cannot be realized.
pub fn run_cell(s: &SimScenario) -> Result<SimReport> {
    match run_scenario(s) {
        Err(Error::InfeasibleScenario(reason)) => Ok(SimReport::infeasible(s, reason)),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetero::{alrt_statistic, bp_test, cvt_statistic, white_test};
    use crate::sim::scenario::{BetaRule, HeteroFrac, Model};

    #[test]
    fn single_replication_rates() {
        let s = SimScenario::null(30, 0.2).with_replications(1).with_seed(4);
        let r = run_scenario(&s).unwrap();
        for t in &r.tests {
            let rate = t.rejection_rate.unwrap();
            assert!(rate == 0.0 || rate == 1.0);
            assert_eq!(t.mc_se, Some(0.0));
        }
    }

    #[test]
    fn white_marked_not_applicable() {
        let s = SimScenario::null(100, 0.3).with_replications(3);
        let r = run_scenario(&s).unwrap();
        let w = r.tally(Method::White).unwrap();
        assert!(!w.applicable);
        assert_eq!(w.rejection_rate, None);
        assert!(r.tally(Method::Bp).unwrap().applicable);
    }

    #[test]
    fn grid_design_only_runs_residual_tests() {
        let s = SimScenario::small_sample(25, Model::S1, 0.5)
            .with_tests(&Method::ALL)
            .with_replications(5);
        let r = run_scenario(&s).unwrap();
        assert!(r.tally(Method::Alrt).unwrap().applicable);
        assert!(!r.tally(Method::Bp).unwrap().applicable);
        assert!(!r.tally(Method::White).unwrap().applicable);
    }

    #[test]
    fn infeasible_cell_gives_marker() {
        let s = SimScenario::null(100, 0.1)
            .with_model(Model::Model1Exp)
            .with_hetero_frac(HeteroFrac::TenPercent);
        assert!(matches!(
            run_scenario(&s),
            Err(Error::InfeasibleScenario(_))
        ));
        let r = run_cell(&s).unwrap();
        assert!(r.infeasible.is_some());
        assert!(r.tests.is_empty());
    }

    #[test]
    fn statistics_do_not_depend_on_beta() {
        let base = SimScenario::null(80, 0.1)
            .with_model(Model::Model1Exp)
            .with_seed(9);
        let shifted = base.clone().with_beta(BetaRule::Leading(2.0));
        for rep in 0..4 {
            let a = generate_instance(&base, rep).unwrap();
            let b = generate_instance(&shifted, rep).unwrap();
            assert_ne!(a.y(), b.y());
            let (fa, fb) = (fit_ols(&a).unwrap(), fit_ols(&b).unwrap());
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-8 * x.abs().max(y.abs());
            assert!(close(
                alrt_statistic(&fa).unwrap(),
                alrt_statistic(&fb).unwrap()
            ));
            assert!(close(
                cvt_statistic(&fa).unwrap(),
                cvt_statistic(&fb).unwrap()
            ));
            assert!(close(
                bp_test(&a, &fa, 0.05).unwrap().statistic,
                bp_test(&b, &fb, 0.05).unwrap().statistic
            ));
            assert!(close(
                white_test(&a, &fa, 0.05).unwrap().statistic,
                white_test(&b, &fb, 0.05).unwrap().statistic
            ));
        }
    }

    #[test]
    fn tally_independent_of_worker_count() {
        let s = SimScenario::null(60, 0.3)
            .with_model(Model::Model3Quad)
            .with_replications(40)
            .with_seed(5);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_scenario_raw(&s).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
    }

    #[test]
    fn power_sums_match_fit() {
        let s = SimScenario::null(50, 0.4).with_replications(3).with_seed(8);
        let sums = residual_power_sums(&s).unwrap();
        let fit = fit_ols(&generate_instance(&s, 2).unwrap()).unwrap();
        assert_eq!(sums[2].sum_sq, residual_moments(&fit).unwrap().sum_sq);
    }
}
