//! Report and side-file writers.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use carleman_core::numerics::format_f17;
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::experiments::{Cell, Check, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    ParseError,
    ValidationError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Pass => 0,
            Self::Fail => 1,
            Self::ParseError => 2,
            Self::ValidationError => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    /// The parameter or precondition that failed.
    pub precondition: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport<'a> {
    pub subcommand: &'a str,
    pub seed: u64,
    pub status: Status,
    pub config: Option<&'a ExperimentConfig>,
    pub checks: &'a [Check],
    pub results: Value,
    pub artifacts: Vec<String>,
    pub error: Option<ErrorInfo>,
}

/// Run-dependent facts kept out of the deterministic report.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub timestamp_unix_seconds: u64,
    pub wall_time_seconds: f64,
    pub threads: usize,
    pub version: &'static str,
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Num(x) => format_f17(*x),
        Cell::Int(n) => n.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

pub fn write_table(dir: &Path, table: &Table) -> io::Result<PathBuf> {
    let path = dir.join(table.file);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)?;
    w.write_record(&table.headers)?;
    for row in &table.rows {
        w.write_record(row.iter().map(cell_text))?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_seventeen_digits_and_lf() {
        let dir = tempfile::tempdir().unwrap();
        let table = Table {
            file: "t.csv",
            headers: vec!["x".into(), "label".into()],
            rows: vec![vec![Cell::Num(0.1), Cell::Text("a".into())], vec![Cell::Int(3), Cell::Text("b".into())]],
        };
        let path = write_table(dir.path(), &table).unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert_eq!(text, "x,label\n1.0000000000000001e-1,a\n3,b\n");
    }

    #[test]
    fn exit_codes() {
        let codes: Vec<i32> = [Status::Pass, Status::Fail, Status::ParseError, Status::ValidationError]
            .iter()
            .map(|s| s.exit_code())
            .collect();
        assert_eq!(codes, vec![0, 1, 2, 3]);
    }
}
