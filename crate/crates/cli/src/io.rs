//! Bundle manifests, matrix files (CSV or `EMB1` binary) and label files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ace_core::{EmbeddingMatrix, Partition, Trial, TrialBundle};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"EMB1";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub trials: Vec<TrialEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialEntry {
    pub id: String,
    pub embedding: PathBuf,
    pub labels: PathBuf,
}

/// Optional declared sizes, checked against the loaded data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Reads a matrix, choosing the format from the leading magic bytes.
pub fn read_matrix(path: &Path) -> CliResult<EmbeddingMatrix> {
    let bytes = read(path)?;
    if bytes.starts_with(MAGIC) {
        decode_binary(path, &bytes)
    } else {
        decode_csv_matrix(path, &bytes)
    }
}

fn decode_binary(path: &Path, bytes: &[u8]) -> CliResult<EmbeddingMatrix> {
    let word = |at: usize| -> CliResult<u64> {
        let b = bytes
            .get(at..at + 8)
            .ok_or_else(|| CliError::parse(path, "truncated header"))?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    };
    let (n, d) = (word(4)? as usize, word(12)? as usize);
    let body = &bytes[20..];
    let expected = n.checked_mul(d).and_then(|c| c.checked_mul(8));
    if expected != Some(body.len()) {
        return Err(CliError::parse(
            path,
            format!(
                "header declares {n} x {d} values but body holds {} bytes",
                body.len()
            ),
        ));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(CliError::NonFinite {
            path: path.to_path_buf(),
            location: format!("row {}, column {}", i / d + 1, i % d + 1),
        });
    }
    matrix(path, n, d, values)
}

fn matrix(path: &Path, n: usize, d: usize, values: Vec<f64>) -> CliResult<EmbeddingMatrix> {
    if n == 0 || d == 0 {
        return Err(CliError::parse(path, "matrix is empty"));
    }
    EmbeddingMatrix::new(n, d, values).map_err(|e| CliError::parse(path, e.to_string()))
}

fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes)
}

fn decode_csv_matrix(path: &Path, bytes: &[u8]) -> CliResult<EmbeddingMatrix> {
    let mut values = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for record in csv_reader(bytes).records() {
        let record = record.map_err(|e| CliError::parse(path, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows += 1;
        if *cols.get_or_insert(record.len()) != record.len() {
            return Err(CliError::parse(
                path,
                format!("row {rows} has {} columns", record.len()),
            ));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::parse(path, format!("row {rows}, column {}: `{field}`", j + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::NonFinite {
                    path: path.to_path_buf(),
                    location: format!("row {rows}, column {}", j + 1),
                });
            }
            values.push(v);
        }
    }
    matrix(path, rows, cols.unwrap_or(0), values)
}

pub fn encode_binary(z: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * z.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(z.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(z.cols() as u64).to_le_bytes());
    for v in z.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Shortest decimal that parses back to the same value.
pub fn encode_csv_matrix(z: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::new();
    for row in z.iter_rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(",")).unwrap();
    }
    out
}

pub fn read_labels(path: &Path) -> CliResult<Partition> {
    let bytes = read(path)?;
    let mut labels = Vec::new();
    for (line, record) in csv_reader(&bytes).records().enumerate() {
        let record = record.map_err(|e| CliError::parse(path, e.to_string()))?;
        let field = match record.len() {
            0 => continue,
            1 => &record[0],
            _ => {
                return Err(CliError::parse(
                    path,
                    format!("line {}: expected one label", line + 1),
                ))
            }
        };
        if field.is_empty() {
            continue;
        }
        let label: i64 = field.parse().map_err(|_| {
            CliError::parse(
                path,
                format!("line {}: `{field}` is not an integer", line + 1),
            )
        })?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(CliError::parse(path, "no labels"));
    }
    Ok(Partition::canonicalize(&labels)?)
}

pub fn encode_labels(rho: &Partition) -> Vec<u8> {
    let mut out = Vec::new();
    for l in rho.labels() {
        writeln!(out, "{l}").unwrap();
    }
    out
}

/// Accepts either a manifest file or a directory holding `manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST)
    } else {
        path.to_path_buf()
    }
}

pub fn read_manifest(path: &Path) -> CliResult<Manifest> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::parse(path, e.to_string()))
}

/// Loads a bundle; relative paths resolve against the manifest's directory.
pub fn load_bundle(path: &Path) -> CliResult<TrialBundle> {
    let path = manifest_path(path);
    let manifest = read_manifest(&path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| base.join(p);
    let mut trials = Vec::with_capacity(manifest.trials.len());
    for entry in &manifest.trials {
        let z = read_matrix(&resolve(&entry.embedding))?;
        let rho = read_labels(&resolve(&entry.labels))?;
        trials.push(Trial::new(entry.id.clone(), z, rho).map_err(shape)?);
    }
    let raw = manifest
        .raw_input
        .as_deref()
        .map(|p| read_matrix(&resolve(p)))
        .transpose()?;
    let truth = manifest
        .truth
        .as_deref()
        .map(|p| read_labels(&resolve(p)))
        .transpose()?;
    let bundle = TrialBundle::new(trials, raw, truth).map_err(shape)?;
    if let Some(meta) = &manifest.meta {
        check_meta(meta, &bundle)?;
    }
    Ok(bundle)
}

fn shape(e: ace_core::Error) -> CliError {
    match e {
        ace_core::Error::ShapeMismatch(msg) => CliError::Shape(msg),
        other => CliError::Core(other),
    }
}

fn check_meta(meta: &Meta, bundle: &TrialBundle) -> CliResult<()> {
    if let Some(n) = meta.n {
        if n != bundle.n() {
            return Err(CliError::Shape(format!(
                "manifest declares n = {n}, files hold {}",
                bundle.n()
            )));
        }
    }
    if let (Some(k), Some(truth)) = (meta.k, bundle.truth()) {
        if k != truth.k() {
            return Err(CliError::Shape(format!(
                "manifest declares k = {k}, truth has {}",
                truth.k()
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MatrixFormat {
    Bin,
    Csv,
}

/// Writes every matrix and label file of `bundle` plus its manifest into
/// `dir`, which is created if needed.
pub fn save_bundle(
    dir: &Path,
    bundle: &TrialBundle,
    format: MatrixFormat,
    meta: Option<Meta>,
) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let (ext, encode): (&str, fn(&EmbeddingMatrix) -> Vec<u8>) = match format {
        MatrixFormat::Bin => ("emb", encode_binary),
        MatrixFormat::Csv => ("csv", encode_csv_matrix),
    };
    let mut entries = Vec::with_capacity(bundle.len());
    for t in bundle.trials() {
        let embedding = PathBuf::from(format!("{}.{ext}", t.id));
        let labels = PathBuf::from(format!("{}.labels.csv", t.id));
        write_file(&dir.join(&embedding), &encode(&t.embedding))?;
        write_file(&dir.join(&labels), &encode_labels(&t.partition))?;
        entries.push(TrialEntry {
            id: t.id.clone(),
            embedding,
            labels,
        });
    }
    let raw_input = match bundle.raw_input() {
        Some(x) => {
            let p = PathBuf::from(format!("raw.{ext}"));
            write_file(&dir.join(&p), &encode(x))?;
            Some(p)
        }
        None => None,
    };
    let truth = match bundle.truth() {
        Some(y) => {
            let p = PathBuf::from("truth.csv");
            write_file(&dir.join(&p), &encode_labels(y))?;
            Some(p)
        }
        None => None,
    };
    let manifest = Manifest {
        trials: entries,
        raw_input,
        truth,
        meta,
    };
    let path = dir.join(MANIFEST);
    let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    json.push(b'\n');
    write_file(&path, &json)?;
    Ok(path)
}
