//! `hetro`: heteroscedasticity tests for regressions with many covariates.

mod exit;
mod input;
mod plot;
mod simulate;
mod test_cmd;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand, ValueEnum};
use hetro_core::Method;

use exit::{CliError, CliResult};
use input::HeaderMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

/// Heteroscedasticity tests for linear regressions whose number of covariates
/// grows with the sample size.
///
/// Exit codes: 0 success, 1 moment verification failed, 2 data error,
/// 3 requested test not applicable, 4 usage error, 5 internal error.
/// HETRO_THREADS caps the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "hetro", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test a CSV data set for heteroscedastic errors.
    Test {
        /// CSV file; a header row is detected automatically.
        input: PathBuf,
        /// Response column, by name or 0-based index.
        #[arg(short, long)]
        response: String,
        /// Covariate columns by name or 0-based index [default: every other numeric column].
        #[arg(short = 'x', long, value_delimiter = ',')]
        covariates: Option<Vec<String>>,
        /// Tests to run.
        #[arg(short, long, value_delimiter = ',', default_value = "alrt,cvt", value_parser = parse_method)]
        tests: Vec<Method>,
        /// Significance level in (0, 1).
        #[arg(short, long, default_value_t = 0.05, value_parser = parse_alpha)]
        alpha: f64,
        /// Append a constant column before fitting. The intercept counts as a
        /// covariate: it raises p by one and lowers k = n - p by one.
        #[arg(long)]
        intercept: bool,
        #[arg(long, value_enum, default_value_t = HeaderMode::Auto)]
        header: HeaderMode,
        /// Field delimiter (a single ASCII character).
        #[arg(long, default_value = ",", value_parser = parse_delimiter)]
        delimiter: u8,
        #[arg(short, long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Write to this file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a simulation table and write CSV, JSON and SVG reports.
    Simulate {
        /// Built-in table (table1 ... table7) or a TOML grid file.
        table: String,
        /// Replications per cell [default: 2000, or the grid file's value].
        #[arg(long)]
        reps: Option<usize>,
        /// Base seed; cell seeds are derived from it [default: 1, or the grid file's seeds].
        #[arg(long)]
        seed: Option<u64>,
        /// Significance level in (0, 1) [default: 0.05].
        #[arg(long, value_parser = parse_alpha)]
        alpha: Option<f64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also write every replication's statistics to <name>_raw.csv.
        #[arg(long)]
        dump_raw: bool,
        /// JSON-lines checkpoint; rerunning with the same file skips finished cells.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Suppress per-cell progress on stderr.
        #[arg(short, long)]
        quiet: bool,
    },
    /// Check the Haar moment identities by Monte Carlo.
    VerifyMoments {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("alpha must lie in (0, 1), got {s}"))
    }
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s.as_bytes() {
        [b] if b.is_ascii() => Ok(*b),
        _ => Err("delimiter must be one ASCII character".into()),
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("HETRO_THREADS") else {
        return Ok(());
    };
    let threads: usize = v.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::usage(format!(
            "HETRO_THREADS must be a positive integer, got `{v}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::internal(e.to_string()))
}

fn dispatch(command: Command) -> CliResult<u8> {
    configure_threads()?;
    match command {
        Command::Test {
            input,
            response,
            covariates,
            tests,
            alpha,
            intercept,
            header,
            delimiter,
            format,
            output,
        } => test_cmd::run(&test_cmd::TestArgs {
            input,
            response,
            covariates,
            tests,
            alpha,
            intercept,
            header,
            delimiter,
            format,
            output,
        }),
        Command::Simulate {
            table,
            reps,
            seed,
            alpha,
            out_dir,
            dump_raw,
            checkpoint,
            quiet,
        } => simulate::run(&simulate::SimulateArgs {
            table,
            reps,
            seed,
            alpha,
            out_dir,
            dump_raw,
            checkpoint,
            quiet,
        }),
        Command::VerifyMoments {
            n,
            k,
            samples,
            seed,
            format,
            output,
        } => verify::run(&verify::VerifyArgs {
            n,
            k,
            samples,
            seed,
            format,
            output,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::from(exit::OK),
                _ => ExitCode::from(exit::USAGE),
            };
        }
    };
    match std::panic::catch_unwind(|| dispatch(cli.command)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(e)) => {
            eprintln!("hetro: error: {e}");
            ExitCode::from(e.code)
        }
        Err(_) => ExitCode::from(exit::INTERNAL),
    }
}
