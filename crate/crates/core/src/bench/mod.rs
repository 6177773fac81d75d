//! Cross-validated experiments, sweeps and result files.

mod config;
mod emit;
mod run;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eventlog::LogStatistics;

pub use config::{
    BenchConfig, ClassifierConfig, DatasetConfig, DateRangeConfig, ExperimentConfig, GramCacheConfig,
    InterCaseConfig, Preprocessing, SyntheticSource, WindowBase,
};
pub use emit::{emit_results, results_table_csv, runs_csv};
pub use run::{load_log, prepare, prepare_log, preprocess_log, run_experiment, FitRecord, Prepared, RunResult, Session};

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: u32,
    pub dataset: LogStatistics,
    pub prefix_samples: usize,
    /// One row per classifier × feature set.
    pub table: Vec<RunResult>,
    /// Every individual run behind the table.
    pub runs: Vec<RunResult>,
    pub sampling: Vec<RunResult>,
    pub prefix_length: Vec<RunResult>,
}

pub fn run_bench(cfg: &BenchConfig, data_root: Option<&Path>) -> Result<BenchReport> {
    cfg.validate()?;
    let base = &cfg.experiment;
    let session = Session::new(prepare(base, data_root)?, &base.gram_cache)?;
    let classifiers = if cfg.classifiers.is_empty() {
        vec![base.classifier.clone()]
    } else {
        cfg.classifiers.clone()
    };
    let feature_sets = if cfg.feature_sets.is_empty() {
        vec![base.inter_case.features.clone()]
    } else {
        cfg.feature_sets.clone()
    };
    let fractions = if cfg.window_fractions.is_empty() {
        vec![base.inter_case.window_fraction]
    } else {
        cfg.window_fractions.clone()
    };

    let mut report = BenchReport {
        version: REPORT_VERSION,
        dataset: session.prepared().statistics.clone(),
        prefix_samples: session.prepared().samples.len(),
        table: Vec::new(),
        runs: Vec::new(),
        sampling: Vec::new(),
        prefix_length: Vec::new(),
    };
    for classifier in &classifiers {
        let mut exp = base.clone();
        exp.classifier = classifier.clone();
        for set in &feature_sets {
            exp.inter_case.features = set.clone();
            let runs = if set.is_empty() {
                vec![session.run_experiment(&exp)?]
            } else {
                session.window_sweep(&exp, &fractions)?
            };
            report.table.push(runs.last().expect("at least one run").clone());
            report.runs.extend(runs);
        }
        exp.inter_case.features = base.inter_case.features.clone();
        if !cfg.sampling_fractions.is_empty() {
            report.sampling.extend(session.sampling_sweep(&exp, &cfg.sampling_fractions)?);
        }
        if !cfg.prefix_ks.is_empty() {
            report.prefix_length.extend(session.grid_prefix_length(&exp, &cfg.prefix_ks)?);
        }
    }
    Ok(report)
}

/// Writes `results.csv`, `runs.csv`, `report.json` and, when present,
/// `sampling.csv` and `prefix_length.csv`.
pub fn write_report(report: &BenchReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put("results.csv", results_table_csv(&report.table)?)?;
    put("runs.csv", runs_csv(&report.runs)?)?;
    if !report.sampling.is_empty() {
        put("sampling.csv", runs_csv(&report.sampling)?)?;
    }
    if !report.prefix_length.is_empty() {
        put("prefix_length.csv", runs_csv(&report.prefix_length)?)?;
    }
    put("report.json", serde_json::to_string_pretty(report)? + "\n")?;
    Ok(written)
}
