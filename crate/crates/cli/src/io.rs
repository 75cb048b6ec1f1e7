//! CSV and JSON files. Every file is written to a temporary name and
//! renamed into place.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crpmap::{Dataset, Partition};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(path, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
    if !header.is_empty() {
        w.write_record(header).map_err(fail)?;
    }
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}

/// Headerless numeric CSV, one observation per line.
pub fn write_dataset(path: &Path, data: &Dataset) -> CliResult<()> {
    write_csv(path, &[], data.rows().map(|r| r.iter().map(|v| v.to_string()).collect()))
}

/// `row,cluster` with both columns 1-based.
pub fn write_assignments(path: &Path, partition: &Partition) -> CliResult<()> {
    let rows = partition.one_based_labels().into_iter().enumerate().map(|(i, k)| vec![(i + 1).to_string(), k.to_string()]);
    write_csv(path, &["row", "cluster"], rows)
}

fn open_csv(path: &Path, header: bool) -> CliResult<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(header).flexible(true).trim(csv::Trim::All).from_reader(file))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.kind() {
        csv::ErrorKind::Io(_) => CliError::io(path, std::io::Error::other(e.to_string())),
        _ => CliError::input(format!("{}: {e}", path.display())),
    }
}

/// Interns string labels to ids in order of first appearance.
fn intern(labels: Vec<String>) -> Vec<usize> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    labels
        .into_iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect()
}

pub struct LoadedData {
    pub dataset: Dataset,
    /// Label column contents, interned.
    pub labels: Option<Vec<usize>>,
}

/// Reads a numeric CSV. `label_column` is a header name or a 1-based column
/// number; that column is taken out of the features.
pub fn read_dataset(path: &Path, header: bool, label_column: Option<&str>) -> CliResult<LoadedData> {
    let mut rdr = open_csv(path, header)?;
    let names: Option<Vec<String>> = if header {
        Some(rdr.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect())
    } else {
        None
    };
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = names.as_ref().map(|h| h.len());
    let mut label_idx: Option<usize> = None;
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(CliError::input(format!(
                "{} line {line}: expected {w} fields, found {}",
                path.display(),
                rec.len()
            )));
        }
        if label_idx.is_none() {
            if let Some(spec) = label_column {
                label_idx = Some(resolve_column(spec, names.as_deref(), w)?);
            }
        }
        for (j, field) in rec.iter().enumerate() {
            if Some(j) == label_idx {
                labels.push(field.to_string());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| {
                let col = names.as_ref().map_or_else(|| format!("column {}", j + 1), |h| format!("column '{}'", h[j]));
                CliError::input(format!("{} line {line}, {col}: '{field}' is not a number", path.display()))
            })?;
            values.push(v);
        }
        n += 1;
    }
    let total = width.unwrap_or(0);
    let dim = total - usize::from(label_idx.is_some());
    if n == 0 || dim == 0 {
        return Err(CliError::input(format!("{}: no numeric data", path.display())));
    }
    let mut dataset = Dataset::new(values, n, dim).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    if let Some(h) = names {
        let features = h.into_iter().enumerate().filter(|(j, _)| Some(*j) != label_idx).map(|(_, s)| s).collect();
        dataset = dataset.with_feature_names(features)?;
    }
    Ok(LoadedData { dataset, labels: label_idx.map(|_| intern(labels)) })
}

fn resolve_column(spec: &str, names: Option<&[String]>, width: usize) -> CliResult<usize> {
    if let Some(j) = names.and_then(|h| h.iter().position(|s| s == spec)) {
        return Ok(j);
    }
    match spec.parse::<usize>() {
        Ok(j) if (1..=width).contains(&j) => Ok(j - 1),
        _ => Err(CliError::input(format!("label column '{spec}' not found (use a header name or 1..={width})"))),
    }
}

/// Reads cluster labels: either a `row,cluster` file as written by `fit`,
/// or one label per line (the last field of each line).
pub fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let mut rdr = open_csv(path, false)?;
    let mut labels = Vec::new();
    let mut first = true;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if first {
            first = false;
            if rec.len() == 2 && rec[0].eq_ignore_ascii_case("row") {
                continue;
            }
        }
        match rec.len().checked_sub(1).and_then(|i| rec.get(i)) {
            Some(l) if !l.is_empty() => labels.push(l.to_string()),
            _ => {
                let line = rec.position().map_or(0, |p| p.line());
                return Err(CliError::input(format!("{} line {line}: missing label", path.display())));
            }
        }
    }
    if labels.is_empty() {
        return Err(CliError::input(format!("{}: no labels", path.display())));
    }
    Ok(intern(labels))
}

pub fn fmt_f64(v: f64) -> String {
    v.to_string()
}
