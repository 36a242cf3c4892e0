//! Batch runs over a directory of instance files.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::dispatch::{dispatch, Algorithm, DispatchOptions, Problem};
use crate::io::format::parse_instance;

pub const CSV_HEADER: [&str; 6] = ["instance", "algorithm", "outcome", "objective", "millis", "oracle_match"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub instance: String,
    pub algorithm: String,
    pub outcome: String,
    pub objective: Option<i64>,
    pub millis: u128,
    pub oracle_match: Option<bool>,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// `*.json` files directly inside `dir`, sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| io_error(dir, e))? {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "json") && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Runs every algorithm on every instance of the corpus, with the oracle
/// cross-check enabled. An empty algorithm list means automatic selection.
///
/// Rows come back sorted by instance name, then algorithm.
pub fn bench(dir: &Path, algorithms: &[Algorithm], problem: Problem, base: &DispatchOptions) -> Result<Vec<BenchRow>> {
    let files = corpus_files(dir)?;
    let choices: Vec<Option<Algorithm>> = if algorithms.is_empty() {
        vec![None]
    } else {
        algorithms.iter().copied().map(Some).collect()
    };
    let per_file: Vec<Vec<BenchRow>> = files
        .par_iter()
        .map(|path| {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            let inst = parse_instance(&text).map_err(|e| io_error(path, e))?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            choices
                .iter()
                .map(|&algorithm| {
                    let opts = DispatchOptions {
                        algorithm,
                        oracle_check: true,
                        ..base.clone()
                    };
                    let report = dispatch(&inst, problem, &opts).map_err(|e| io_error(path, e))?;
                    Ok(BenchRow {
                        instance: name.clone(),
                        algorithm: report.algorithm,
                        outcome: report.outcome.name().to_string(),
                        objective: report.objective,
                        millis: report.millis,
                        oracle_match: report.oracle_match,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<BenchRow> = per_file.into_iter().flatten().collect();
    rows.sort_by(|a, b| (&a.instance, &a.algorithm).cmp(&(&b.instance, &b.algorithm)));
    Ok(rows)
}

/// Writes the rows as CSV. The `millis` column stays empty unless `timing`
/// is set, so that repeated runs produce identical bytes.
pub fn write_csv<W: Write>(rows: &[BenchRow], out: W, timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_error = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for row in rows {
        let objective = row.objective.map(|v| v.to_string()).unwrap_or_default();
        let millis = if timing { row.millis.to_string() } else { String::new() };
        let oracle = row.oracle_match.map(|b| b.to_string()).unwrap_or_default();
        w.write_record([
            row.instance.as_str(),
            row.algorithm.as_str(),
            row.outcome.as_str(),
            objective.as_str(),
            millis.as_str(),
            oracle.as_str(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
