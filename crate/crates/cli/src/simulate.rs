//! `hetro simulate`: run a built-in table or a grid file.

use std::cell::RefCell;
use std::path::{Path, PathBuf};

use hetro_core::sim::report::{long_csv, to_json, wide_csv};
use hetro_core::sim::{
    run_table, Progress, RawSink, RawStatistics, RunOptions, TableSpec, BUILTIN_TABLES,
    DEFAULT_REPLICATIONS, DEFAULT_SEED,
};
use hetro_core::{Error, Result};

use crate::exit::{CliError, CliResult, DATA, OK};
use crate::plot::rejection_svg;

pub struct SimulateArgs {
    pub table: String,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub out_dir: PathBuf,
    pub dump_raw: bool,
    pub checkpoint: Option<PathBuf>,
    pub quiet: bool,
}

/// A built-in table name, or else a path to a TOML grid file.
pub fn resolve_spec(args: &SimulateArgs) -> Result<TableSpec> {
    let mut spec = if BUILTIN_TABLES.contains(&args.table.as_str()) {
        TableSpec::builtin(
            &args.table,
            args.reps.unwrap_or(DEFAULT_REPLICATIONS),
            args.seed.unwrap_or(DEFAULT_SEED),
        )?
    } else {
        let path = Path::new(&args.table);
        if !path.is_file() {
            return Err(Error::UnknownTable(format!(
                "{} (not a built-in table [{}] or a grid file)",
                args.table,
                BUILTIN_TABLES.join(", ")
            )));
        }
        let mut spec = TableSpec::from_path(path)?;
        if let Some(r) = args.reps {
            spec = spec.with_replications(r);
        }
        if let Some(s) = args.seed {
            spec = spec.with_seed(s);
        }
        spec
    };
    if let Some(a) = args.alpha {
        spec = spec.with_alpha(a);
    }
    if spec.cells.iter().any(|c| c.replications == 0) {
        return Err(Error::InvalidArgument(
            "replications must be positive".into(),
        ));
    }
    Ok(spec)
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::new(DATA, format!("{}: {e}", path.display())))
}

/// Columns: `cell,rep,method,statistic,standardized,p_value,reject`.
fn raw_rows(w: &mut csv::Writer<std::fs::File>, cell: usize, raw: &RawStatistics) -> Result<()> {
    let err = |e: csv::Error| Error::Io(e.to_string());
    for (rep, row) in raw.rows.iter().enumerate() {
        for t in row.iter().flatten() {
            w.write_record([
                cell.to_string(),
                rep.to_string(),
                t.method.key().to_string(),
                t.statistic.to_string(),
                t.standardized.to_string(),
                t.p_value.to_string(),
                t.reject.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: &SimulateArgs) -> CliResult<u8> {
    let spec = resolve_spec(args)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::new(DATA, format!("{}: {e}", args.out_dir.display())))?;
    let name = spec.name.clone();
    let out = |suffix: &str| args.out_dir.join(format!("{name}{suffix}"));

    let raw_writer = if args.dump_raw {
        let path = out("_raw.csv");
        let mut w = csv::Writer::from_path(&path)
            .map_err(|e| CliError::new(DATA, format!("{}: {e}", path.display())))?;
        w.write_record([
            "cell",
            "rep",
            "method",
            "statistic",
            "standardized",
            "p_value",
            "reject",
        ])
        .map_err(|e| CliError::internal(e.to_string()))?;
        Some(RefCell::new(w))
    } else {
        None
    };
    let sink = |cell: usize, raw: &RawStatistics| match &raw_writer {
        Some(w) => raw_rows(&mut w.borrow_mut(), cell, raw),
        None => Ok(()),
    };
    let quiet = args.quiet;
    let progress = |p: Progress<'_>| {
        if quiet {
            return;
        }
        let r = p.report;
        let rates: Vec<String> = if let Some(reason) = &r.infeasible {
            vec![format!("infeasible ({reason})")]
        } else {
            r.tests
                .iter()
                .map(|t| match t.rejection_rate {
                    Some(v) => format!("{} {v:.4}", t.method.label()),
                    None => format!("{} NA", t.method.label()),
                })
                .collect()
        };
        let tag = if p.resumed { " (resumed)" } else { "" };
        eprintln!(
            "[{}/{}] {}{tag}: {}",
            p.index + 1,
            p.total,
            r.label,
            rates.join(", ")
        );
    };
    let options = RunOptions {
        checkpoint: args.checkpoint.clone(),
        progress: Some(&progress),
        raw_sink: args.dump_raw.then_some(&sink as &RawSink),
    };
    let reports = run_table(&spec, &options)?;

    write(&out(".csv"), &wide_csv(&reports)?)?;
    write(&out("_long.csv"), &long_csv(&reports)?)?;
    write(&out(".json"), &to_json(&name, &reports)?)?;
    write(
        &out(".svg"),
        &rejection_svg(&format!("{name}: rejection rate vs p/n"), &reports),
    )?;
    if !quiet {
        eprintln!(
            "wrote {} cells to {}",
            reports.len(),
            args.out_dir.join(&name).display()
        );
    }
    Ok(OK)
}
