//! CSV ingestion for the `test` command.

use std::path::Path;

use clap::ValueEnum;
use hetro_core::{Dataset, Error, Result};

/// Whether the first record holds column names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeaderMode {
    /// Header iff some field of the first record is not a number.
    Auto,
    Yes,
    No,
}

const MISSING: [&str; 6] = ["", "na", "nan", "null", "none", "."];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell {
    Num(f64),
    Missing,
    Text,
}

/// Dot-decimal only; `f64::from_str` ignores the locale.
fn parse_cell(raw: &str) -> Cell {
    let t = raw.trim();
    if MISSING.iter().any(|m| t.eq_ignore_ascii_case(m)) {
        return Cell::Missing;
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_nan() => Cell::Missing,
        Ok(v) => Cell::Num(v),
        Err(_) => Cell::Text,
    }
}

/// A parsed CSV file, stored by column.
#[derive(Debug, Clone)]
pub struct Frame {
    pub names: Vec<String>,
    pub has_header: bool,
    columns: Vec<Vec<Cell>>,
    raw: Vec<Vec<String>>,
}

impl Frame {
    pub fn read(path: &Path, header: HeaderMode, delimiter: u8) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, header, delimiter)
    }

    pub fn parse(text: &str, header: HeaderMode, delimiter: u8) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .delimiter(delimiter)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("record {}: {e}", i + 1)))?;
            records.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
        }
        let Some(first) = records.first() else {
            return Err(Error::Parse("input has no records".into()));
        };
        let width = first.len();
        let has_header = match header {
            HeaderMode::Yes => true,
            HeaderMode::No => false,
            HeaderMode::Auto => first.iter().any(|f| parse_cell(f) == Cell::Text),
        };
        let names = if has_header {
            records.remove(0)
        } else {
            (0..width).map(|i| i.to_string()).collect()
        };
        if records.is_empty() {
            return Err(Error::Parse("input has no data rows".into()));
        }
        let columns = (0..width)
            .map(|j| records.iter().map(|r| parse_cell(&r[j])).collect())
            .collect();
        Ok(Frame {
            names,
            has_header,
            columns,
            raw: records,
        })
    }

    pub fn rows(&self) -> usize {
        self.raw.len()
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    fn is_numeric(&self, j: usize) -> bool {
        self.columns[j].iter().all(|c| *c != Cell::Text)
    }

    /// Resolves a column by exact name, then by 0-based index.
    pub fn resolve(&self, token: &str) -> Result<usize> {
        let token = token.trim();
        if let Some(j) = self.names.iter().position(|n| n == token) {
            return Ok(j);
        }
        match token.parse::<usize>() {
            Ok(j) if j < self.width() => Ok(j),
            _ => Err(Error::Parse(format!(
                "column `{token}` not found (columns: {})",
                self.names.join(", ")
            ))),
        }
    }

    /// Every numeric column other than `response`, in file order.
    pub fn default_covariates(&self, response: usize) -> Vec<usize> {
        (0..self.width())
            .filter(|&j| j != response && self.is_numeric(j))
            .collect()
    }

    /// Values of column `j`; missing, non-numeric or infinite cells are errors.
    pub fn numeric_column(&self, j: usize) -> Result<Vec<f64>> {
        self.columns[j]
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let row = i + 1 + usize::from(self.has_header);
                match *c {
                    Cell::Num(v) if v.is_finite() => Ok(v),
                    Cell::Num(_) => Err(Error::NonFinite(format!(
                        "column `{}`, line {row}",
                        self.names[j]
                    ))),
                    Cell::Missing => Err(Error::Parse(format!(
                        "missing value in column `{}` at line {row}; missing data is not imputed",
                        self.names[j]
                    ))),
                    Cell::Text => Err(Error::Parse(format!(
                        "non-numeric value `{}` in column `{}` at line {row}",
                        self.raw[i][j], self.names[j]
                    ))),
                }
            })
            .collect()
    }

    /// Builds the regression instance from a response and covariate columns.
    pub fn dataset(&self, response: usize, covariates: &[usize]) -> Result<Dataset> {
        if covariates.is_empty() {
            return Err(Error::InvalidShape("no covariate columns selected".into()));
        }
        if covariates.contains(&response) {
            return Err(Error::InvalidArgument(format!(
                "column `{}` is both response and covariate",
                self.names[response]
            )));
        }
        let y = self.numeric_column(response)?;
        let cols = covariates
            .iter()
            .map(|&j| self.numeric_column(j))
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<Vec<f64>> = (0..self.rows())
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        Dataset::from_rows(&rows, y)
    }
}
