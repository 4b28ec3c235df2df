//! Report serialization: a wide CSV (one row per cell), a long CSV (one
//! row per cell and test) and versioned JSON.

use serde::Serialize;

use super::engine::SimReport;
use super::scenario::HeteroFrac;
use crate::error::{Error, Result};
use crate::hetero::Method;

pub const SCHEMA_VERSION: u32 = 1;

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn frac_label(f: HeteroFrac) -> &'static str {
    match f {
        HeteroFrac::One => "1",
        HeteroFrac::TenPercent => "0.1p",
    }
}

/// Cell value in the wide table: the rate, `NA` when the test does not
/// apply, `-` for infeasible cells, empty when the test was not requested.
fn wide_value(r: &SimReport, m: Method) -> String {
    if r.infeasible.is_some() {
        return "-".into();
    }
    match r.tally(m) {
        None => String::new(),
        Some(t) if !t.applicable => "NA".into(),
        Some(t) => t
            .rejection_rate
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "NA".into()),
    }
}

/// Columns: `cell,label,n,ratio,p,p0,design,model,hetero_frac,c0,replications,alrt,cvt,bp,white`.
pub fn wide_csv(reports: &[SimReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "cell",
        "label",
        "n",
        "ratio",
        "p",
        "p0",
        "design",
        "model",
        "hetero_frac",
        "c0",
        "replications",
        "alrt",
        "cvt",
        "bp",
        "white",
    ])
    .map_err(csv_error)?;
    for (i, r) in reports.iter().enumerate() {
        let s = &r.scenario;
        let mut row = vec![
            i.to_string(),
            r.label.clone(),
            s.n.to_string(),
            s.ratio.to_string(),
            r.p.to_string(),
            r.p0.to_string(),
            s.design.label().into(),
            s.model.label().into(),
            frac_label(s.hetero_frac).into(),
            s.c0.to_string(),
            s.replications.to_string(),
        ];
        row.extend(Method::ALL.iter().map(|&m| wide_value(r, m)));
        w.write_record(&row).map_err(csv_error)?;
    }
    finish(w)
}

/// One row per cell and requested test; infeasible cells get a single row
/// with an empty `test` column and the reason in `infeasible`.
pub fn long_csv(reports: &[SimReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "cell",
        "label",
        "n",
        "ratio",
        "p",
        "k",
        "p0",
        "design",
        "model",
        "hetero_frac",
        "c0",
        "alpha",
        "seed",
        "test",
        "applicable",
        "replications",
        "rejections",
        "failures",
        "rejection_rate",
        "mc_se",
        "infeasible",
    ])
    .map_err(csv_error)?;
    for (i, r) in reports.iter().enumerate() {
        let s = &r.scenario;
        let head = vec![
            i.to_string(),
            r.label.clone(),
            s.n.to_string(),
            s.ratio.to_string(),
            r.p.to_string(),
            r.k.to_string(),
            r.p0.to_string(),
            s.design.label().into(),
            s.model.label().into(),
            frac_label(s.hetero_frac).into(),
            s.c0.to_string(),
            s.alpha.to_string(),
            s.seed.to_string(),
        ];
        if let Some(reason) = &r.infeasible {
            let mut row = head.clone();
            row.extend([
                "".into(),
                "false".into(),
                s.replications.to_string(),
                "".into(),
                "".into(),
            ]);
            row.extend(["".into(), "".into(), reason.clone()]);
            w.write_record(&row).map_err(csv_error)?;
            continue;
        }
        for t in &r.tests {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let mut row = head.clone();
            row.extend([
                t.method.key().to_string(),
                t.applicable.to_string(),
                t.replications.to_string(),
                t.rejections.to_string(),
                t.failures.to_string(),
                opt(t.rejection_rate),
                opt(t.mc_se),
                String::new(),
            ]);
            w.write_record(&row).map_err(csv_error)?;
        }
    }
    finish(w)
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema_version: u32,
    table: &'a str,
    reports: &'a [SimReport],
}

pub fn to_json(table: &str, reports: &[SimReport]) -> Result<String> {
    serde_json::to_string_pretty(&JsonReport {
        schema_version: SCHEMA_VERSION,
        table,
        reports,
    })
    .map_err(|e| Error::Io(e.to_string()))
}
