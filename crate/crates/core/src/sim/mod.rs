//! Size and power experiments: scenario grids, data generation, a parallel
//! replication engine and report assembly.

pub mod engine;
pub mod generate;
pub mod report;
pub mod scenario;
pub mod table;

pub use engine::{
    applicable, residual_power_sums, run_cell, run_scenario, run_scenario_raw, summarize,
    PowerSums, RawStatistics, SimReport, TestTally,
};
pub use generate::{error_scale, generate_instance, rep_rng};
pub use scenario::{BetaRule, Design, HeteroFrac, Model, SimScenario};
pub use table::{
    cell_seed, run_table, Progress, RawSink, RunOptions, TableSpec, BUILTIN_TABLES,
    DEFAULT_REPLICATIONS, DEFAULT_SEED, RATIOS,
};
