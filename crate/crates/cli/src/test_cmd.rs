//! `hetro test`: run the tests on a user CSV file.

use std::fmt::Write as _;
use std::path::PathBuf;

use hetro_core::hetero::run_test;
use hetro_core::sim::report::SCHEMA_VERSION;
use hetro_core::{fit_ols, Error, Method, TestResult};
use serde::{Deserialize, Serialize};

use crate::exit::{emit, CliError, CliResult, INAPPLICABLE};
use crate::input::{Frame, HeaderMode};
use crate::Format;

pub struct TestArgs {
    pub input: PathBuf,
    pub response: String,
    pub covariates: Option<Vec<String>>,
    pub tests: Vec<Method>,
    pub alpha: f64,
    pub intercept: bool,
    pub header: HeaderMode,
    pub delimiter: u8,
    pub format: Format,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub method: Method,
    pub reason: String,
}

/// JSON document written by `--format json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub schema_version: u32,
    pub input: String,
    pub response: String,
    pub covariates: Vec<String>,
    pub intercept: bool,
    pub alpha: f64,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub results: Vec<TestResult>,
    pub not_applicable: Vec<Skipped>,
}

pub fn run(args: &TestArgs) -> CliResult<u8> {
    if args.tests.is_empty() {
        return Err(CliError::usage("at least one test must be requested"));
    }
    let frame = Frame::read(&args.input, args.header, args.delimiter)?;
    let response = frame.resolve(&args.response).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("response {m}")),
        other => other,
    })?;
    let covariates = match &args.covariates {
        Some(list) => list
            .iter()
            .map(|c| frame.resolve(c))
            .collect::<Result<Vec<_>, _>>()?,
        None => frame.default_covariates(response),
    };
    let mut data = frame.dataset(response, &covariates)?;
    if args.intercept {
        data = data.with_intercept()?;
    }
    let fit = fit_ols(&data)?;

    let mut results = Vec::new();
    let mut not_applicable = Vec::new();
    for &m in &args.tests {
        match run_test(m, &data, &fit, args.alpha) {
            Ok(r) => results.push(r),
            Err(Error::NotApplicable(reason)) => not_applicable.push(Skipped { method: m, reason }),
            Err(e) => return Err(CliError::from(e)),
        }
    }
    let report = TestReport {
        schema_version: SCHEMA_VERSION,
        input: args.input.display().to_string(),
        response: frame.names[response].clone(),
        covariates: covariates.iter().map(|&j| frame.names[j].clone()).collect(),
        intercept: args.intercept,
        alpha: args.alpha,
        n: fit.n(),
        p: fit.p(),
        k: fit.n() - fit.p(),
        results,
        not_applicable,
    };
    let text = match args.format {
        Format::Table => render_table(&report),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::internal(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => render_csv(&report)?,
    };
    emit(&text, args.output.as_deref())?;
    if report.results.is_empty() {
        for s in &report.not_applicable {
            eprintln!("hetro: {} {}", s.method, s.reason);
        }
        return Ok(INAPPLICABLE);
    }
    Ok(0)
}

fn fmt_p(p: f64) -> String {
    if p != 0.0 && p < 1e-4 {
        format!("{p:.3e}")
    } else {
        format!("{p:.4}")
    }
}

fn render_table(r: &TestReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "n = {}, p = {}{}, k = {}, alpha = {}",
        r.n,
        r.p,
        if r.intercept {
            " (incl. intercept)"
        } else {
            ""
        },
        r.k,
        r.alpha
    );
    let _ = writeln!(
        out,
        "{:<7} {:>14} {:>14} {:>5} {:>11}  decision",
        "method", "statistic", "standardized", "dof", "p-value"
    );
    for t in &r.results {
        let dof = t.dof.map(|d| d.to_string()).unwrap_or_else(|| "-".into());
        let decision = if t.reject {
            "reject homoscedasticity"
        } else {
            "do not reject"
        };
        let _ = writeln!(
            out,
            "{:<7} {:>14.6} {:>14.6} {:>5} {:>11}  {decision}",
            t.method.label(),
            t.statistic,
            t.standardized,
            dof,
            fmt_p(t.p_value)
        );
    }
    for s in &r.not_applicable {
        let _ = writeln!(
            out,
            "{:<7} {:>14} {:>14} {:>5} {:>11}  {}",
            s.method.label(),
            "-",
            "-",
            "-",
            "-",
            s.reason
        );
    }
    out
}

/// Columns: `method,statistic,standardized,dof,p_value,reject,alpha,n,p,k,note`.
fn render_csv(r: &TestReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::internal(e.to_string());
    w.write_record([
        "method",
        "statistic",
        "standardized",
        "dof",
        "p_value",
        "reject",
        "alpha",
        "n",
        "p",
        "k",
        "note",
    ])
    .map_err(err)?;
    let (n, p, k) = (r.n.to_string(), r.p.to_string(), r.k.to_string());
    for t in &r.results {
        w.write_record([
            t.method.key(),
            &t.statistic.to_string(),
            &t.standardized.to_string(),
            &t.dof.map(|d| d.to_string()).unwrap_or_default(),
            &t.p_value.to_string(),
            &t.reject.to_string(),
            &t.alpha.to_string(),
            &n,
            &p,
            &k,
            "",
        ])
        .map_err(err)?;
    }
    for s in &r.not_applicable {
        w.write_record([
            s.method.key(),
            "",
            "",
            "",
            "",
            "",
            &r.alpha.to_string(),
            &n,
            &p,
            &k,
            &s.reason,
        ])
        .map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::internal(e.to_string()))
}
