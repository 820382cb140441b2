//! JSON and CSV renderings of reports, score matrices and regime tables.

use std::fmt::Write;
use std::path::Path;

use ace_core::pipeline::{AceReport, RegimeTable};
use ace_core::ScoreMatrix;

use crate::error::{CliError, CliResult};

const NA: &str = "NA";

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |v| format!("{v:?}"))
}

pub fn report_json(report: &AceReport) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
    out.push(b'\n');
    out
}

pub fn read_report(path: &Path) -> CliResult<AceReport> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::parse(path, e.to_string()))
}

/// Raw index values, one row per evaluating space, `NA` for failed cells.
pub fn score_matrix_csv(scores: &ScoreMatrix, ids: &[String]) -> String {
    let mut out = String::from("space");
    for id in ids {
        write!(out, ",{id}").unwrap();
    }
    out.push('\n');
    for (m, id) in ids.iter().enumerate() {
        out.push_str(id);
        for j in 0..scores.size {
            write!(out, ",{}", cell(scores.get(m, j).map(|v| v.raw))).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn regime_csv(table: &RegimeTable) -> String {
    let mut out = String::from("regime,external,r_s,tau_b\n");
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.regime.name(),
            row.external.name(),
            cell(row.r_s),
            cell(row.tau_b)
        )
        .unwrap();
    }
    out
}

/// Oriented per-trial scores of the regimes side by side.
pub fn regime_scores_csv(ids: &[String], columns: &[(&str, Option<&[Option<f64>]>)]) -> String {
    let present: Vec<_> = columns
        .iter()
        .filter_map(|(n, c)| c.map(|c| (*n, c)))
        .collect();
    let mut out = String::from("id");
    for (name, _) in &present {
        write!(out, ",{name}").unwrap();
    }
    out.push('\n');
    for (m, id) in ids.iter().enumerate() {
        out.push_str(id);
        for (_, col) in &present {
            write!(out, ",{}", cell(col[m])).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Per-trial external measures, the input format of `compare`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalTable {
    pub ids: Vec<String>,
    pub nmi: Vec<f64>,
    pub acc: Vec<f64>,
}

impl ExternalTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,nmi,acc\n");
        for ((id, n), a) in self.ids.iter().zip(&self.nmi).zip(&self.acc) {
            writeln!(out, "{id},{n:?},{a:?}").unwrap();
        }
        out
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(&bytes[..]);
        let headers = reader
            .headers()
            .map_err(|e| CliError::parse(path, e.to_string()))?
            .clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CliError::parse(path, format!("missing column `{name}`")))
        };
        let (ci, cn, ca) = (column("id")?, column("nmi")?, column("acc")?);
        let mut table = ExternalTable {
            ids: Vec::new(),
            nmi: Vec::new(),
            acc: Vec::new(),
        };
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::parse(path, e.to_string()))?;
            let num = |c: usize| -> CliResult<f64> {
                let v: f64 = record[c].parse().map_err(|_| {
                    CliError::parse(path, format!("line {}: `{}`", line + 2, &record[c]))
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(CliError::NonFinite {
                        path: path.to_path_buf(),
                        location: format!("line {}", line + 2),
                    })
                }
            };
            table.ids.push(record[ci].to_string());
            table.nmi.push(num(cn)?);
            table.acc.push(num(ca)?);
        }
        Ok(table)
    }
}
