use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{check_fraction, DatasetConfig, ExperimentConfig, GramCacheConfig, Preprocessing, WindowBase};
use crate::encoding::{apply_scaler, fit_scaler, EncodingContext, FeatureVector, IntraEncoder};
use crate::error::{Error, Result};
use crate::eventlog::synthetic::FineProcess;
use crate::eventlog::{
    build_prefix_log, log_statistics, make_cv_folds, read_log, stratified_indices, EventLog, LogStatistics,
    PrefixSample, Trace,
};
use crate::intercase::{EventIndex, InterCaseEncoder, InterCaseStats, PeerWindow};
use crate::qkernel::{data_fingerprint, fingerprint, pair_seed, psd_repair, GramCache, Kernel, KernelMatrix, SHOT_PSD_FLOOR};
use crate::qsim::{ShotConfig, MAX_QUBITS};
use crate::svm::fit_multiclass;
use crate::vqc::{readout_qubits, train, VqcModel};

use super::config::ClassifierConfig;

const SAMPLING_DOMAIN: u64 = 0x73616d70;
const SHOT_DOMAIN: u64 = 0x73686f74;
const VQC_DOMAIN: u64 = 0x76716369;
const CAP_DOMAIN: u64 = 0x63617073;

/// Which training cases a fitted component saw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub fold: usize,
    pub component: String,
    pub n_cases: usize,
    pub cases_fingerprint: String,
    #[serde(skip)]
    pub case_ids: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub classifier: String,
    pub features: String,
    pub encoding: String,
    pub feature_dim: usize,
    pub window_fraction: Option<f64>,
    /// Window width per fold, in seconds.
    pub window_seconds: Vec<f64>,
    /// Window fractions this row averages over; empty for a single run.
    pub averaged_over: Vec<f64>,
    pub sampling_fraction: f64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub train_sizes: Vec<usize>,
    pub test_sizes: Vec<usize>,
    /// Gram construction plus solver training, summed over folds.
    pub fit_seconds: f64,
    pub gram_seconds: f64,
    pub kernel_evaluations: u64,
    pub cross_evaluations: u64,
    pub gram_cache_hits: usize,
    pub seed: u64,
    pub shots: Option<u32>,
    pub config_fingerprint: String,
    pub provenance: Vec<FitRecord>,
}

impl RunResult {
    /// Equality ignoring wall-clock timings.
    pub fn same_outcome(&self, other: &RunResult) -> bool {
        let strip = |r: &RunResult| RunResult {
            fit_seconds: 0.0,
            gram_seconds: 0.0,
            ..r.clone()
        };
        strip(self) == strip(other)
    }
}

/// A preprocessed log with its prefix samples and event index.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub log: EventLog,
    pub samples: Vec<PrefixSample>,
    pub index: Arc<EventIndex>,
    pub statistics: LogStatistics,
}

pub fn load_log(dataset: &DatasetConfig, data_root: Option<&Path>) -> Result<EventLog> {
    if let Some(path) = &dataset.path {
        let path = match data_root {
            Some(root) if path.is_relative() => root.join(path),
            _ => path.clone(),
        };
        if !path.exists() {
            return Err(Error::config(format!("dataset {} does not exist", path.display())));
        }
        return read_log(&path, dataset.format, &dataset.columns);
    }
    match &dataset.synthetic {
        Some(s) => Ok(FineProcess::new(s.cases, s.seed).generate()),
        None => Err(Error::config("dataset needs a path or a synthetic source")),
    }
}

/// Singleton-variant filter followed by the date slice.
pub fn preprocess_log(mut log: EventLog, pre: &Preprocessing) -> Result<EventLog> {
    if pre.filter_singleton_variants {
        log = log.filter_singleton_variants();
    }
    if let Some(range) = &pre.date_range {
        log = log.slice(&range.to_slice()?);
    }
    Ok(log)
}

/// Variant filter, date slice, prefix extraction and the optional
/// stratified sample cap.
pub fn prepare_log(log: EventLog, pre: &Preprocessing, seed: u64) -> Result<Prepared> {
    let log = preprocess_log(log, pre)?;
    let mut samples = build_prefix_log(&log, pre.min_prefix, pre.max_prefix)?;
    if let Some(cap) = pre.max_samples {
        if samples.len() > cap {
            let labels: Vec<_> = samples.iter().map(|s| s.label().clone()).collect();
            let fraction = cap as f64 / samples.len() as f64;
            let keep = stratified_indices(&labels, fraction, pair_seed(seed, CAP_DOMAIN, 0, 0))?;
            samples = keep.into_iter().map(|i| samples[i].clone()).collect();
        }
    }
    if samples.is_empty() {
        return Err(Error::Degenerate("preprocessing left no prefix samples".into()));
    }
    log::info!(
        "prepared log: {} cases, {} events, {} prefix samples",
        log.num_cases(),
        log.num_events(),
        samples.len()
    );
    let statistics = log_statistics(&log);
    let index = Arc::new(EventIndex::new(&log));
    Ok(Prepared {
        log,
        samples,
        index,
        statistics,
    })
}

pub fn prepare(cfg: &ExperimentConfig, data_root: Option<&Path>) -> Result<Prepared> {
    cfg.validate()?;
    prepare_log(load_log(&cfg.dataset, data_root)?, &cfg.preprocessing, cfg.seed)
}

enum GramStore {
    Disabled,
    Memory(Mutex<HashMap<String, KernelMatrix>>),
    Disk(GramCache),
}

/// Runs experiments against one prepared dataset, sharing a Gram cache.
pub struct Session {
    prepared: Prepared,
    store: GramStore,
}

struct FoldData {
    train_x: Vec<Vec<f64>>,
    train_y: Vec<String>,
    test_x: Vec<Vec<f64>>,
    test_y: Vec<String>,
    window_seconds: Option<f64>,
    provenance: Vec<FitRecord>,
}

struct Encoders {
    intra: IntraEncoder,
    inter: Option<InterCaseEncoder>,
    window_seconds: Option<f64>,
    provenance: Vec<FitRecord>,
    /// Pre-built record for the scaler, fitted later on the same cases.
    record: FitRecord,
}

impl Encoders {
    fn encode(&self, samples: &[PrefixSample], idx: &[usize]) -> Result<Vec<FeatureVector>> {
        idx.par_iter()
            .map(|&i| {
                let prefix = &samples[i];
                let v = self.intra.encode(prefix);
                match &self.inter {
                    Some(enc) => Ok(enc.compose(v, prefix)?.combined()),
                    None => Ok(v),
                }
            })
            .collect()
    }
}

struct FoldOutcome {
    accuracy: f64,
    fit_seconds: f64,
    gram_seconds: f64,
    kernel_evaluations: u64,
    cross_evaluations: u64,
    cache_hit: bool,
}

impl Session {
    pub fn new(prepared: Prepared, cache: &GramCacheConfig) -> Result<Self> {
        let store = match (cache.enabled, &cache.dir) {
            (false, _) => GramStore::Disabled,
            (true, None) => GramStore::Memory(Mutex::new(HashMap::new())),
            (true, Some(dir)) => GramStore::Disk(GramCache::new(dir, cache.format)?),
        };
        Ok(Session { prepared, store })
    }

    pub fn prepared(&self) -> &Prepared {
        &self.prepared
    }

    pub fn run_experiment(&self, cfg: &ExperimentConfig) -> Result<RunResult> {
        cfg.validate()?;
        let samples = &self.prepared.samples;
        let folds = make_cv_folds(samples, cfg.folds, cfg.seed)?;
        let mut result = RunResult {
            classifier: cfg.classifier.name(),
            features: cfg.feature_label(),
            encoding: cfg.encoding.to_string(),
            feature_dim: 0,
            window_fraction: (!cfg.inter_case.features.is_empty()).then_some(cfg.inter_case.window_fraction),
            window_seconds: Vec::new(),
            averaged_over: Vec::new(),
            sampling_fraction: cfg.sampling_fraction,
            fold_accuracies: Vec::new(),
            mean_accuracy: 0.0,
            train_sizes: Vec::new(),
            test_sizes: Vec::new(),
            fit_seconds: 0.0,
            gram_seconds: 0.0,
            kernel_evaluations: 0,
            cross_evaluations: 0,
            gram_cache_hits: 0,
            seed: cfg.seed,
            shots: cfg.shots,
            config_fingerprint: fingerprint([serde_json::to_vec(cfg)?]),
            provenance: Vec::new(),
        };
        for fold in 0..cfg.folds {
            let mut train_idx = folds.train_indices(fold);
            let test_idx = folds.test_indices(fold);
            if cfg.sampling_fraction < 1.0 {
                let labels: Vec<_> = train_idx.iter().map(|&i| samples[i].label().clone()).collect();
                let keep = stratified_indices(&labels, cfg.sampling_fraction, pair_seed(cfg.seed, SAMPLING_DOMAIN, fold, 0))?;
                train_idx = keep.into_iter().map(|k| train_idx[k]).collect();
            }
            let data = self.encode_fold(cfg, fold, &train_idx, &test_idx)?;
            let outcome = self.classify(cfg, fold, &data)?;
            log::info!(
                "{} [{}] fold {fold}: accuracy {:.4}, fit {:.3}s (gram {:.3}s, {} evaluations)",
                result.classifier,
                result.features,
                outcome.accuracy,
                outcome.fit_seconds,
                outcome.gram_seconds,
                outcome.kernel_evaluations
            );
            result.feature_dim = data.train_x.first().map_or(0, Vec::len);
            result.fold_accuracies.push(outcome.accuracy);
            result.train_sizes.push(data.train_x.len());
            result.test_sizes.push(data.test_x.len());
            result.fit_seconds += outcome.fit_seconds;
            result.gram_seconds += outcome.gram_seconds;
            result.kernel_evaluations += outcome.kernel_evaluations;
            result.cross_evaluations += outcome.cross_evaluations;
            result.gram_cache_hits += usize::from(outcome.cache_hit);
            result.window_seconds.extend(data.window_seconds);
            result.provenance.extend(data.provenance);
        }
        result.mean_accuracy = mean(&result.fold_accuracies);
        Ok(result)
    }

    /// Encodes every prepared sample with components fitted on the whole
    /// log. Values are unscaled. Meant for export, not for evaluation.
    pub fn encode_all(&self, cfg: &ExperimentConfig) -> Result<(Vec<FeatureVector>, Vec<String>)> {
        cfg.validate()?;
        let samples = &self.prepared.samples;
        let all: Vec<usize> = (0..samples.len()).collect();
        let encoders = self.fit_encoders(cfg, 0, &all)?;
        let rows = encoders.encode(samples, &all)?;
        let labels = samples.iter().map(|s| s.label().name().to_owned()).collect();
        Ok((rows, labels))
    }

    fn fit_encoders(&self, cfg: &ExperimentConfig, fold: usize, train_idx: &[usize]) -> Result<Encoders> {
        let samples = &self.prepared.samples;
        let train_cases: HashSet<&str> = train_idx.iter().map(|&i| samples[i].case_id()).collect();
        let train_traces: Vec<&Trace> = self
            .prepared
            .log
            .traces()
            .iter()
            .filter(|t| train_cases.contains(t.case_id()))
            .map(|t| t.as_ref())
            .collect();
        let record = |component: &str| {
            let mut case_ids: Vec<String> = train_traces.iter().map(|t| t.case_id().to_owned()).collect();
            case_ids.sort();
            FitRecord {
                fold,
                component: component.to_owned(),
                n_cases: case_ids.len(),
                cases_fingerprint: fingerprint(&case_ids),
                case_ids,
            }
        };
        let mut provenance = Vec::new();

        let context = EncodingContext::fit(train_traces.iter().copied(), &cfg.static_attributes);
        provenance.push(record("vocabulary"));
        let intra = IntraEncoder::new(cfg.encoding.clone(), context.clone())?;

        let mut window_seconds = None;
        let inter = if cfg.inter_case.features.is_empty() {
            None
        } else {
            let stats = InterCaseStats::fit(&train_traces, cfg.inter_case.batch)?;
            provenance.push(record("inter_case_stats"));
            let base = match cfg.inter_case.window_base {
                WindowBase::Seconds(s) => s,
                WindowBase::MedianCaseDuration => {
                    let mut durations: Vec<f64> = train_traces
                        .iter()
                        .map(|t| t.duration().num_milliseconds() as f64 / 1000.0)
                        .collect();
                    provenance.push(record("window_base"));
                    crate::eventlog::stats::median(&mut durations)
                }
            };
            // A window cannot be empty; degenerate bases fall back to one second.
            let width = (base * cfg.inter_case.window_fraction).max(1.0);
            window_seconds = Some(width);
            Some(InterCaseEncoder::new(
                Arc::clone(&self.prepared.index),
                Arc::new(stats),
                context.activities.clone(),
                context.resources.clone(),
                &cfg.inter_case.features,
                PeerWindow::from_seconds(width)?,
            )?)
        };

        Ok(Encoders {
            intra,
            inter,
            window_seconds,
            provenance,
            record: record("scaler"),
        })
    }

    fn encode_fold(&self, cfg: &ExperimentConfig, fold: usize, train_idx: &[usize], test_idx: &[usize]) -> Result<FoldData> {
        let samples = &self.prepared.samples;
        let encoders = self.fit_encoders(cfg, fold, train_idx)?;
        let train_raw = encoders.encode(samples, train_idx)?;
        let test_raw = encoders.encode(samples, test_idx)?;
        let Encoders {
            window_seconds,
            mut provenance,
            record: scaler_record,
            ..
        } = encoders;
        let scaler = fit_scaler(&train_raw, cfg.scale_range)?;
        provenance.push(scaler_record);
        let scale = |rows: Vec<FeatureVector>| -> Result<Vec<Vec<f64>>> {
            rows.iter().map(|r| Ok(apply_scaler(r, &scaler)?.values)).collect()
        };
        let labels = |idx: &[usize]| idx.iter().map(|&i| samples[i].label().name().to_owned()).collect();
        Ok(FoldData {
            train_x: scale(train_raw)?,
            train_y: labels(train_idx),
            test_x: scale(test_raw)?,
            test_y: labels(test_idx),
            window_seconds,
            provenance,
        })
    }

    fn gram(&self, kernel: &Kernel, train_x: &[Vec<f64>]) -> Result<(KernelMatrix, bool)> {
        let key = || -> Result<String> {
            Ok(fingerprint([
                data_fingerprint(train_x).into_bytes(),
                serde_json::to_vec(&kernel.kind())?,
            ]))
        };
        let compute = || {
            let k = kernel.gram(train_x)?;
            if kernel.kind().is_shot_based() {
                psd_repair(&k, SHOT_PSD_FLOOR)
            } else {
                Ok(k)
            }
        };
        match &self.store {
            GramStore::Disabled => Ok((compute()?, false)),
            GramStore::Memory(map) => {
                let key = key()?;
                if let Some(k) = map.lock().expect("cache lock").get(&key) {
                    return Ok((k.clone(), true));
                }
                let k = compute()?;
                map.lock().expect("cache lock").insert(key, k.clone());
                Ok((k, false))
            }
            GramStore::Disk(cache) => cache.get_or_compute(&key()?, compute),
        }
    }

    fn classify(&self, cfg: &ExperimentConfig, fold: usize, data: &FoldData) -> Result<FoldOutcome> {
        let shots = ShotConfig {
            shots: cfg.shots,
            seed: pair_seed(cfg.seed, SHOT_DOMAIN, fold, 0),
        };
        let mut out = FoldOutcome {
            accuracy: 0.0,
            fit_seconds: 0.0,
            gram_seconds: 0.0,
            kernel_evaluations: 0,
            cross_evaluations: 0,
            cache_hit: false,
        };
        let predictions: Vec<String> = match &cfg.classifier {
            ClassifierConfig::Majority => {
                let start = Instant::now();
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for y in &data.train_y {
                    *counts.entry(y.as_str()).or_default() += 1;
                }
                let mut best: Option<(&str, usize)> = None;
                for (label, n) in counts {
                    if best.map_or(true, |(_, b)| n > b) {
                        best = Some((label, n));
                    }
                }
                let label = best.map(|(l, _)| l.to_owned()).unwrap_or_default();
                out.fit_seconds = start.elapsed().as_secs_f64();
                vec![label; data.test_x.len()]
            }
            ClassifierConfig::Vqc { map, layers, optimizer } => {
                let n = data.train_x.first().map_or(0, Vec::len);
                if n == 0 || n > MAX_QUBITS {
                    return Err(Error::config(format!("{n} features cannot be embedded on 1..={MAX_QUBITS} qubits")));
                }
                let classes: Vec<String> = sorted_classes(&data.train_y);
                if readout_qubits(classes.len()) > n {
                    return Err(Error::config(format!(
                        "{} classes need more readout qubits than the {n} features provide",
                        classes.len()
                    )));
                }
                let class_of: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
                let y: Vec<usize> = data.train_y.iter().map(|c| class_of[c.as_str()]).collect();
                let opt = crate::vqc::OptimizerConfig {
                    seed: pair_seed(cfg.seed, VQC_DOMAIN, fold, 1),
                    ..*optimizer
                };
                let start = Instant::now();
                let model = VqcModel::init(*map, n, *layers, classes, pair_seed(cfg.seed, VQC_DOMAIN, fold, 0))?;
                let (model, _) = train(model, &data.train_x, &y, &opt)?;
                out.fit_seconds = start.elapsed().as_secs_f64();
                data.test_x
                    .par_iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let s = shots.with_seed(pair_seed(shots.seed, VQC_DOMAIN, i, 2));
                        Ok(model.classes[model.predict(x, s)?].clone())
                    })
                    .collect::<Result<_>>()?
            }
            classifier => {
                let (kind, svm) = classifier.kernel(shots).expect("kernel classifier");
                let kernel = Kernel::new(kind)?;
                let start = Instant::now();
                let (gram, hit) = self.gram(&kernel, &data.train_x)?;
                out.gram_seconds = start.elapsed().as_secs_f64();
                out.kernel_evaluations = kernel.evaluations();
                out.cache_hit = hit;
                let model = fit_multiclass(&gram, &data.train_y, &svm)?;
                out.fit_seconds = start.elapsed().as_secs_f64();
                kernel.reset_evaluations();
                let cross = kernel.cross(&data.test_x, &data.train_x)?;
                out.cross_evaluations = kernel.evaluations();
                model.predict_all(&cross).into_iter().cloned().collect()
            }
        };
        let correct = predictions.iter().zip(&data.test_y).filter(|(p, y)| p == y).count();
        out.accuracy = if data.test_y.is_empty() {
            0.0
        } else {
            correct as f64 / data.test_y.len() as f64
        };
        Ok(out)
    }

    /// One run per window fraction plus, for several fractions, an averaged
    /// row (fold means per window, then the mean across windows).
    pub fn window_sweep(&self, cfg: &ExperimentConfig, fractions: &[f64]) -> Result<Vec<RunResult>> {
        if fractions.is_empty() {
            return Err(Error::config("window sweep needs at least one fraction"));
        }
        let mut runs = Vec::with_capacity(fractions.len() + 1);
        for &f in fractions {
            let mut c = cfg.clone();
            c.inter_case.window_fraction = f;
            runs.push(self.run_experiment(&c)?);
        }
        if runs.len() > 1 {
            let avg = average_runs(&runs, fractions, cfg)?;
            runs.push(avg);
        }
        Ok(runs)
    }

    /// Stratified subsampling of every training fold.
    pub fn sampling_sweep(&self, cfg: &ExperimentConfig, fractions: &[f64]) -> Result<Vec<RunResult>> {
        if fractions.is_empty() {
            return Err(Error::config("sampling sweep needs at least one fraction"));
        }
        fractions
            .iter()
            .map(|&f| {
                check_fraction("sampling fraction", f)?;
                let mut c = cfg.clone();
                c.sampling_fraction = f;
                self.run_experiment(&c)
            })
            .collect()
    }

    /// One run per index-based prefix length.
    pub fn grid_prefix_length(&self, cfg: &ExperimentConfig, ks: &[usize]) -> Result<Vec<RunResult>> {
        if ks.is_empty() {
            return Err(Error::config("prefix-length grid needs at least one k"));
        }
        ks.iter()
            .map(|&k| {
                let mut c = cfg.clone();
                c.encoding = crate::encoding::IntraEncoding::IndexBased { k };
                self.run_experiment(&c)
            })
            .collect()
    }
}

fn sorted_classes(labels: &[String]) -> Vec<String> {
    let mut classes = labels.to_vec();
    classes.sort();
    classes.dedup();
    classes
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn average_runs(runs: &[RunResult], fractions: &[f64], cfg: &ExperimentConfig) -> Result<RunResult> {
    let first = &runs[0];
    let n = runs.len() as f64;
    let folds = first.fold_accuracies.len();
    let fold_accuracies = (0..folds)
        .map(|f| runs.iter().map(|r| r.fold_accuracies[f]).sum::<f64>() / n)
        .collect();
    let means: Vec<f64> = runs.iter().map(|r| r.mean_accuracy).collect();
    Ok(RunResult {
        window_fraction: None,
        window_seconds: Vec::new(),
        averaged_over: fractions.to_vec(),
        fold_accuracies,
        mean_accuracy: mean(&means),
        fit_seconds: runs.iter().map(|r| r.fit_seconds).sum::<f64>() / n,
        gram_seconds: runs.iter().map(|r| r.gram_seconds).sum::<f64>() / n,
        kernel_evaluations: runs.iter().map(|r| r.kernel_evaluations).sum::<u64>() / runs.len() as u64,
        cross_evaluations: runs.iter().map(|r| r.cross_evaluations).sum::<u64>() / runs.len() as u64,
        gram_cache_hits: runs.iter().map(|r| r.gram_cache_hits).sum(),
        config_fingerprint: fingerprint([serde_json::to_vec(cfg)?, serde_json::to_vec(fractions)?]),
        provenance: Vec::new(),
        ..first.clone()
    })
}

/// Prepares the dataset and runs a single experiment.
pub fn run_experiment(cfg: &ExperimentConfig, data_root: Option<&Path>) -> Result<RunResult> {
    Session::new(prepare(cfg, data_root)?, &cfg.gram_cache)?.run_experiment(cfg)
}
