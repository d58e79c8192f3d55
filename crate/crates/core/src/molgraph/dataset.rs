//! `smiles,label` CSV files.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{parse_smiles, MolecularGraph, SmilesError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Labels are 0 or 1; the model output is a logit.
    Binary,
    Regression,
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "binary" => Ok(Task::Binary),
            "regression" => Ok(Task::Regression),
            other => Err(format!("unknown task `{other}` (expected binary or regression)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("missing column `{0}` in header")]
    MissingColumn(&'static str),
    #[error("line {line}: invalid {task} label `{value}`")]
    Label { line: u64, value: String, task: &'static str },
    #[error("line {line}: {source}")]
    Smiles { line: u64, source: SmilesError },
    #[error("dataset has no rows")]
    Empty,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub smiles: String,
    pub graph: MolecularGraph,
    pub label: f64,
}

pub fn read_dataset(path: &Path, task: Task) -> Result<Vec<Record>, DatasetError> {
    read_dataset_from(File::open(path)?, task)
}

/// Reads a CSV with `smiles` and `label` columns in any position.
///
/// Every error past the header carries its 1-based line number.
pub fn read_dataset_from(reader: impl Read, task: Task) -> Result<Vec<Record>, DatasetError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers().map_err(|e| csv_error(&e, 1))?.clone();
    let column = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(DatasetError::MissingColumn(name))
    };
    let smiles_col = column("smiles")?;
    let label_col = column("label")?;

    let mut out = Vec::new();
    for row in csv.records() {
        let row = row.map_err(|e| csv_error(&e, 0))?;
        let line = row.position().map_or(0, |p| p.line());
        let smiles = row.get(smiles_col).unwrap_or_default().to_string();
        let raw = row.get(label_col).unwrap_or_default();
        let label = parse_label(raw, task).ok_or_else(|| DatasetError::Label {
            line,
            value: raw.to_string(),
            task: match task {
                Task::Binary => "binary",
                Task::Regression => "regression",
            },
        })?;
        let graph = parse_smiles(&smiles).map_err(|source| DatasetError::Smiles { line, source })?;
        out.push(Record { smiles, graph, label });
    }
    if out.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(out)
}

fn parse_label(raw: &str, task: Task) -> Option<f64> {
    match task {
        Task::Binary => match raw {
            "0" | "0.0" => Some(0.0),
            "1" | "1.0" => Some(1.0),
            _ => None,
        },
        Task::Regression => raw.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

fn csv_error(e: &csv::Error, fallback_line: u64) -> DatasetError {
    DatasetError::Csv {
        line: e.position().map_or(fallback_line, |p| p.line()),
        message: e.to_string(),
    }
}

pub fn write_dataset(path: &Path, rows: &[(String, f64)]) -> Result<(), DatasetError> {
    write_dataset_to(File::create(path)?, rows)
}

/// Labels are written with `f64`'s shortest round-trip form, so integral
/// labels come out as `0` and `1`.
pub fn write_dataset_to(writer: impl Write, rows: &[(String, f64)]) -> Result<(), DatasetError> {
    let mut csv = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| DatasetError::Csv {
        line: 0,
        message: e.to_string(),
    };
    csv.write_record(["smiles", "label"]).map_err(io)?;
    for (smiles, label) in rows {
        csv.write_record([smiles.as_str(), &label.to_string()]).map_err(io)?;
    }
    csv.flush()?;
    Ok(())
}
