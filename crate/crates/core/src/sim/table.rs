use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::engine::{run_cell, run_scenario_raw, summarize, RawStatistics, SimReport};
use super::scenario::{BetaRule, Design, HeteroFrac, Model, SimScenario};
use crate::error::{Error, Result};
use crate::hetero::Method;

/// Base seed used when none is given.
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_REPLICATIONS: usize = 2000;

pub const RATIOS: [f64; 6] = [0.05, 0.1, 0.3, 0.5, 0.7, 0.9];
pub const BUILTIN_TABLES: [&str; 7] = [
    "table1", "table2", "table3", "table4", "table5", "table6", "table7",
];

/// An ordered grid of scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub name: String,
    pub cells: Vec<SimScenario>,
}

/// Seed of cell `index` derived from a table's base seed (splitmix64 step).
pub fn cell_seed(base: u64, index: usize) -> u64 {
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const POWER_TESTS: [Method; 3] = [Method::Alrt, Method::Cvt, Method::Bp];

impl TableSpec {
    /// One of the built-in grids `table1` … `table7`.
    pub fn builtin(name: &str, replications: usize, seed: u64) -> Result<Self> {
        let mut cells = Vec::new();
        let base =
            |n: usize, ratio: f64| SimScenario::null(n, ratio).with_replications(replications);
        match name {
            "table1" => {
                for ratio in RATIOS {
                    for n in [100, 500, 1000] {
                        cells.push(base(n, ratio));
                    }
                }
            }
            "table2" | "table3" | "table4" => {
                let model = match name {
                    "table2" => Model::Model1Exp,
                    "table3" => Model::Model2Sin,
                    _ => Model::Model3Quad,
                };
                for frac in [HeteroFrac::One, HeteroFrac::TenPercent] {
                    for ratio in RATIOS {
                        for n in [100, 500, 1000] {
                            cells.push(
                                base(n, ratio)
                                    .with_model(model)
                                    .with_hetero_frac(frac)
                                    .with_tests(&POWER_TESTS),
                            );
                        }
                    }
                }
            }
            "table5" => {
                for model in [Model::S1, Model::S2, Model::S3] {
                    for c0 in [0.0, 0.5, 1.0] {
                        for n in [50, 25] {
                            cells.push(
                                SimScenario::small_sample(n, model, c0)
                                    .with_replications(replications),
                            );
                        }
                    }
                }
            }
            "table6" => {
                for ratio in RATIOS {
                    for design in [Design::Gamma22, Design::Uniform01] {
                        cells.push(base(500, ratio).with_design(design));
                    }
                }
            }
            "table7" => {
                for model in [Model::Model1Exp, Model::Model2Sin, Model::Model3Quad] {
                    for ratio in RATIOS {
                        for design in [Design::Gamma22, Design::Uniform01] {
                            cells.push(
                                base(500, ratio)
                                    .with_design(design)
                                    .with_model(model)
                                    .with_hetero_frac(HeteroFrac::TenPercent)
                                    .with_tests(&POWER_TESTS),
                            );
                        }
                    }
                }
            }
            other => return Err(Error::UnknownTable(other.to_string())),
        }
        for (i, c) in cells.iter_mut().enumerate() {
            c.seed = cell_seed(seed, i);
        }
        Ok(TableSpec {
            name: name.to_string(),
            cells,
        })
    }

    /// Parses a TOML grid file; see [`GridFile`].
    pub fn from_toml(text: &str, fallback_name: &str) -> Result<Self> {
        let file: GridFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let defaults = file.defaults.unwrap_or_default();
        let base_seed = defaults.seed.unwrap_or(0);
        let cells = file
            .cells
            .iter()
            .enumerate()
            .map(|(i, cell)| cell.resolve(&defaults, cell_seed(base_seed, i), i))
            .collect::<Result<Vec<_>>>()?;
        Ok(TableSpec {
            name: file.name.unwrap_or_else(|| fallback_name.to_string()),
            cells,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("grid");
        Self::from_toml(&text, stem)
    }

    /// Overrides the replication count of every cell.
    pub fn with_replications(mut self, replications: usize) -> Self {
        self.cells
            .iter_mut()
            .for_each(|c| c.replications = replications);
        self
    }

    /// Re-derives every cell seed from a new base seed, replacing any
    /// explicit per-cell seeds.
    pub fn with_seed(mut self, base: u64) -> Self {
        for (i, c) in self.cells.iter_mut().enumerate() {
            c.seed = cell_seed(base, i);
        }
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.cells.iter_mut().for_each(|c| c.alpha = alpha);
        self
    }
}

/// Grid file layout:
///
/// ```toml
/// name = "my-grid"
///
/// [defaults]
/// n = 500
/// replications = 2000
/// seed = 1
/// tests = ["alrt", "cvt"]
///
/// [[cell]]
/// ratio = 0.5
/// model = "model1_exp"
/// ```
///
/// Every scenario field may appear in `[defaults]` or in a `[[cell]]`; cell
/// values win. Cells without an explicit `seed` get one derived from the
/// default seed and the cell position.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub name: Option<String>,
    pub defaults: Option<CellConfig>,
    #[serde(default, rename = "cell")]
    pub cells: Vec<CellConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub n: Option<usize>,
    pub ratio: Option<f64>,
    pub design: Option<Design>,
    pub model: Option<Model>,
    pub hetero_frac: Option<HeteroFrac>,
    pub c0: Option<f64>,
    pub beta: Option<BetaRule>,
    pub replications: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub tests: Option<Vec<Method>>,
}

impl CellConfig {
    fn resolve(&self, d: &CellConfig, derived_seed: u64, index: usize) -> Result<SimScenario> {
        let n = self
            .n
            .or(d.n)
            .ok_or_else(|| Error::Parse(format!("cell {index}: missing `n`")))?;
        let design = self.design.or(d.design).unwrap_or(Design::GaussianIid);
        let ratio = match self.ratio.or(d.ratio) {
            Some(r) => r,
            None if design == Design::GridLowDim => 2.0 / n as f64,
            None => return Err(Error::Parse(format!("cell {index}: missing `ratio`"))),
        };
        let model = self.model.or(d.model).unwrap_or(Model::Null);
        let default_tests = if design == Design::GridLowDim {
            vec![Method::Alrt, Method::Cvt]
        } else {
            Method::ALL.to_vec()
        };
        let base = SimScenario::null(n, ratio);
        Ok(SimScenario {
            design,
            model,
            hetero_frac: self
                .hetero_frac
                .or(d.hetero_frac)
                .unwrap_or(HeteroFrac::One),
            c0: self.c0.or(d.c0).unwrap_or(base.c0),
            beta: self
                .beta
                .clone()
                .or_else(|| d.beta.clone())
                .unwrap_or(BetaRule::Zero),
            replications: self
                .replications
                .or(d.replications)
                .unwrap_or(base.replications),
            alpha: self.alpha.or(d.alpha).unwrap_or(base.alpha),
            seed: self.seed.unwrap_or(derived_seed),
            tests: self
                .tests
                .clone()
                .or_else(|| d.tests.clone())
                .unwrap_or(default_tests),
            ..base
        })
    }
}

/// Progress notification after each cell.
#[derive(Debug, Clone, Copy)]
pub struct Progress<'a> {
    pub index: usize,
    pub total: usize,
    pub report: &'a SimReport,
    /// The cell was loaded from the checkpoint rather than simulated.
    pub resumed: bool,
}

/// Callback receiving a cell index and its per-replication results.
pub type RawSink<'a> = dyn Fn(usize, &RawStatistics) -> Result<()> + 'a;

#[derive(Default)]
pub struct RunOptions<'a> {
    /// JSON-lines file of finished cells. Cells already present with the
    /// same scenario are not rerun; new cells are appended as they finish.
    pub checkpoint: Option<PathBuf>,
    pub progress: Option<&'a dyn Fn(Progress<'_>)>,
    /// Receives the per-replication results of every simulated cell.
    /// Resumed and infeasible cells are not passed.
    pub raw_sink: Option<&'a RawSink<'a>>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointLine {
    index: usize,
    report: SimReport,
}

fn load_checkpoint(path: &Path, spec: &TableSpec) -> Result<BTreeMap<usize, SimReport>> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // A torn final line from an interrupted run is ignored.
        let Ok(entry) = serde_json::from_str::<CheckpointLine>(&line) else {
            continue;
        };
        if spec.cells.get(entry.index) == Some(&entry.report.scenario) {
            done.insert(entry.index, entry.report);
        }
    }
    Ok(done)
}

/// Runs every cell in order. Infeasible cells yield marker reports.
pub fn run_table(spec: &TableSpec, options: &RunOptions<'_>) -> Result<Vec<SimReport>> {
    let mut done = match &options.checkpoint {
        Some(path) => load_checkpoint(path, spec)?,
        None => BTreeMap::new(),
    };
    let mut sink = match &options.checkpoint {
        Some(path) => Some(OpenOptions::new().create(true).append(true).open(path)?),
        None => None,
    };
    let total = spec.cells.len();
    let mut reports = Vec::with_capacity(total);
    for (index, cell) in spec.cells.iter().enumerate() {
        let (report, resumed) = match done.remove(&index) {
            Some(r) => (r, true),
            None => {
                let r = match options.raw_sink {
                    Some(sink) => match run_scenario_raw(cell) {
                        Ok(raw) => {
                            sink(index, &raw)?;
                            summarize(cell, &raw)
                        }
                        Err(Error::InfeasibleScenario(reason)) => {
                            SimReport::infeasible(cell, reason)
                        }
                        Err(e) => return Err(e),
                    },
                    None => run_cell(cell)?,
                };
                if let Some(f) = sink.as_mut() {
                    let line = serde_json::to_string(&CheckpointLine {
                        index,
                        report: r.clone(),
                    })
                    .map_err(|e| Error::Io(e.to_string()))?;
                    writeln!(f, "{line}")?;
                    f.flush()?;
                }
                (r, false)
            }
        };
        if let Some(cb) = options.progress {
            cb(Progress {
                index,
                total,
                report: &report,
                resumed,
            });
        }
        reports.push(report);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    #[test]
    fn builtin_shapes() {
        let sizes: Vec<usize> = BUILTIN_TABLES
            .iter()
            .map(|t| TableSpec::builtin(t, 10, 1).unwrap().cells.len())
            .collect();
        assert_eq!(sizes, [18, 36, 36, 36, 18, 12, 36]);
        assert!(matches!(
            TableSpec::builtin("table9", 10, 1),
            Err(Error::UnknownTable(_))
        ));
    }

    #[test]
    fn builtin_seeds_differ_per_cell() {
        let t = TableSpec::builtin("table1", 10, 42).unwrap();
        let mut seeds: Vec<u64> = t.cells.iter().map(|c| c.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 18);
        assert_eq!(t, TableSpec::builtin("table1", 10, 42).unwrap());
    }

    #[test]
    fn toml_grid_merges_defaults() {
        let text = r#"
            name = "custom"
            [defaults]
            n = 200
            replications = 30
            seed = 9
            tests = ["alrt", "cvt"]

            [[cell]]
            ratio = 0.5

            [[cell]]
            ratio = 0.1
            model = "model3_quad"
            hetero_frac = "ten_percent"
            beta = { leading = 2.0 }
            seed = 77

            [[cell]]
            n = 25
            design = "grid_low_dim"
            model = "s2"
            c0 = 1.0
        "#;
        let t = TableSpec::from_toml(text, "x").unwrap();
        assert_eq!(t.name, "custom");
        assert_eq!(t.cells.len(), 3);
        assert_eq!(t.cells[0].n, 200);
        assert_eq!(t.cells[0].seed, cell_seed(9, 0));
        assert_eq!(t.cells[1].seed, 77);
        assert_eq!(t.cells[1].beta, BetaRule::Leading(2.0));
        assert_eq!(t.cells[1].hetero_frac, HeteroFrac::TenPercent);
        assert_eq!(t.cells[2].p(), 2);
        assert_eq!(t.cells[2].tests, [Method::Alrt, Method::Cvt]);
        assert!(t.cells.iter().all(|c| c.validate().is_ok()));
    }

    #[test]
    fn toml_errors() {
        assert!(matches!(
            TableSpec::from_toml("[[cell]]\nratio = 0.5", "x"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            TableSpec::from_toml("[[cell]]\nn = 10\nbogus = 1", "x"),
            Err(Error::Parse(_))
        ));
        let empty = TableSpec::from_toml("", "empty").unwrap();
        assert!(run_table(&empty, &RunOptions::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn checkpoint_resumes_finished_cells() {
        let dir = std::env::temp_dir().join(format!("hetro-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.jsonl");
        let _ = std::fs::remove_file(&path);
        let mut spec = TableSpec::builtin("table5", 20, 3).unwrap();
        spec.cells.truncate(3);

        let first = run_table(
            &spec,
            &RunOptions {
                checkpoint: Some(path.clone()),
                progress: None,
                raw_sink: None,
            },
        )
        .unwrap();
        let resumed = Cell::new(0);
        let cb = |p: Progress<'_>| {
            if p.resumed {
                resumed.set(resumed.get() + 1);
            }
        };
        let second = run_table(
            &spec,
            &RunOptions {
                checkpoint: Some(path.clone()),
                progress: Some(&cb),
                raw_sink: None,
            },
        )
        .unwrap();
        assert_eq!(first, second);
        assert_eq!(resumed.get(), 3);

        // A changed scenario invalidates its checkpoint entry.
        spec.cells[1].replications = 21;
        resumed.set(0);
        run_table(
            &spec,
            &RunOptions {
                checkpoint: Some(path.clone()),
                progress: Some(&cb),
                raw_sink: None,
            },
        )
        .unwrap();
        assert_eq!(resumed.get(), 2);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn reseeding_matches_builtin_seeds() {
        let a = TableSpec::builtin("table3", 10, 5).unwrap();
        let b = TableSpec::builtin("table3", 10, 0).unwrap().with_seed(5);
        assert_eq!(a, b);
    }

    #[test]
    fn raw_sink_matches_plain_run() {
        let mut spec = TableSpec::builtin("table2", 15, 9).unwrap();
        spec.cells.truncate(4);
        let seen = std::cell::RefCell::new(Vec::new());
        let sink = |i: usize, raw: &RawStatistics| {
            seen.borrow_mut().push((i, raw.rows.len()));
            Ok(())
        };
        let with_raw = run_table(
            &spec,
            &RunOptions {
                raw_sink: Some(&sink),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(with_raw, run_table(&spec, &RunOptions::default()).unwrap());
        let feasible: Vec<usize> = (0..4)
            .filter(|&i| with_raw[i].infeasible.is_none())
            .collect();
        assert_eq!(
            seen.borrow().iter().map(|s| s.0).collect::<Vec<_>>(),
            feasible
        );
        assert!(seen.borrow().iter().all(|s| s.1 == 15));
    }
}
