use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::RunResult;
use crate::error::Result;

/// Rows are classifiers and columns feature labels, both in order of first
/// appearance. A cell holds the averaged row for that pair when one exists,
/// otherwise the first single run.
pub fn results_table_csv(results: &[RunResult]) -> Result<String> {
    let mut rows: Vec<&str> = Vec::new();
    let mut cols: Vec<&str> = Vec::new();
    for r in results {
        if !rows.contains(&r.classifier.as_str()) {
            rows.push(&r.classifier);
        }
        if !cols.contains(&r.features.as_str()) {
            cols.push(&r.features);
        }
    }
    let cell = |row: &str, col: &str| -> Option<f64> {
        let matching = || results.iter().filter(|r| r.classifier == row && r.features == col);
        matching()
            .filter(|r| !r.averaged_over.is_empty())
            .last()
            .or_else(|| matching().next())
            .map(|r| r.mean_accuracy)
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(std::iter::once("classifier").chain(cols.iter().copied()))?;
    for row in &rows {
        let mut record = vec![row.to_string()];
        record.extend(cols.iter().map(|col| cell(row, col).map_or(String::new(), |v| format!("{v:.4}"))));
        w.write_record(&record)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv"))
}

/// One line per run, for sweeps.
pub fn runs_csv(results: &[RunResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "classifier",
        "features",
        "encoding",
        "feature_dim",
        "window_fraction",
        "sampling_fraction",
        "mean_accuracy",
        "fold_accuracies",
        "train_samples",
        "fit_seconds",
        "gram_seconds",
        "kernel_evaluations",
        "cross_evaluations",
    ])?;
    for r in results {
        let join = |xs: Vec<String>| xs.join(";");
        w.write_record([
            r.classifier.clone(),
            r.features.clone(),
            r.encoding.clone(),
            r.feature_dim.to_string(),
            match (r.window_fraction, r.averaged_over.is_empty()) {
                (Some(f), _) => f.to_string(),
                (None, false) => "avg".to_owned(),
                (None, true) => String::new(),
            },
            r.sampling_fraction.to_string(),
            format!("{:.4}", r.mean_accuracy),
            join(r.fold_accuracies.iter().map(|a| format!("{a:.4}")).collect()),
            r.train_sizes.iter().sum::<usize>().to_string(),
            format!("{:.6}", r.fit_seconds),
            format!("{:.6}", r.gram_seconds),
            r.kernel_evaluations.to_string(),
            r.cross_evaluations.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv"))
}

#[derive(Serialize)]
struct Envelope<'a> {
    version: u32,
    results: &'a [RunResult],
}

/// Writes `<stem>.csv` (table) and `<stem>.json` (full provenance).
pub fn emit_results(results: &[RunResult], dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    fs::write(&csv_path, results_table_csv(results)?)?;
    let json = serde_json::to_string_pretty(&Envelope { version: 1, results })?;
    fs::write(&json_path, json + "\n")?;
    Ok((csv_path, json_path))
}
