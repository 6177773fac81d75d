//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criterion 1 needs the Road Traffic Fine Management log
//! (`Road_Traffic_Fine_Management_Process.xes.gz` or `.xes`) under
//! `$QPPM_DATA_ROOT`; criterion 7 uses it when present and otherwise reports
//! on a generated fine-process log.

mod oracles;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{DateTime, FixedOffset};
use nalgebra::DMatrix;
use qppm::bench::{
    prepare_log, ClassifierConfig, DatasetConfig, DateRangeConfig, ExperimentConfig, GramCacheConfig, Preprocessing, Session,
    SyntheticSource,
};
use qppm::encoding::Vocabulary;
use qppm::eventlog::synthetic::FineProcess;
use qppm::eventlog::{log_statistics, parse_date, read_log, CaseInclusion, ColumnMap, DateSlice, Event, EventLog, Trace};
use qppm::intercase::{BatchConfig, EventIndex, InterCaseEncoder, InterCaseStats, InterFeature, PeerWindow};
use qppm::qkernel::{Kernel, KernelKind, KernelMatrix};
use qppm::qsim::{kernel_overlap, FeatureMapKind, FeatureMapVariant, ShotConfig};
use qppm::svm::{fit, SvmConfig};
use qppm::vqc::{train, Batch, OptimizerConfig, VqcModel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oracles::MapFamily;

struct Outcome {
    passed: bool,
    /// Soft criteria are reported but never fail the run.
    gating: bool,
    detail: String,
}

fn gate(passed: bool, detail: String) -> Outcome {
    Outcome {
        passed,
        gating: true,
        detail,
    }
}

fn family(v: FeatureMapVariant) -> MapFamily {
    match v {
        FeatureMapVariant::Angle => MapFamily::Angle,
        FeatureMapVariant::Zz => MapFamily::Zz,
        FeatureMapVariant::AngleZz => MapFamily::AngleZz,
    }
}

fn all_maps() -> Vec<FeatureMapKind> {
    FeatureMapVariant::ALL
        .into_iter()
        .flat_map(|v| [1, 2].map(|l| FeatureMapKind::new(v, l).unwrap()))
        .collect()
}

fn point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::PI)).collect()
}

// ---- 1 ---------------------------------------------------------------------

const RTFM_FILES: [&str; 2] = [
    "Road_Traffic_Fine_Management_Process.xes.gz",
    "Road_Traffic_Fine_Management_Process.xes",
];

fn rtfm_path() -> Option<PathBuf> {
    let root = PathBuf::from(std::env::var_os("QPPM_DATA_ROOT")?);
    RTFM_FILES.iter().map(|f| root.join(f)).find(|p| p.exists())
}

/// Slicing rules tried in order; offsets are minutes east of UTC.
fn slice_candidates() -> Vec<(CaseInclusion, i32)> {
    let mut v = Vec::new();
    for rule in [CaseInclusion::FirstEvent, CaseInclusion::AllEvents, CaseInclusion::AnyEvent] {
        for offset in [0, 60, 120] {
            v.push((rule, offset));
        }
    }
    v
}

fn c1_dataset_statistics(matched_rule: &mut Option<(CaseInclusion, i32)>) -> Outcome {
    let Some(path) = rtfm_path() else {
        return gate(
            false,
            format!("RTFM log not found: set QPPM_DATA_ROOT to a directory holding {}", RTFM_FILES[0]),
        );
    };
    let started = Instant::now();
    let log = match read_log(&path, None, &ColumnMap::default()) {
        Ok(l) => l,
        Err(e) => return gate(false, format!("cannot read {}: {e}", path.display())),
    };
    let filtered = log.filter_singleton_variants();
    let full = log_statistics(&filtered);
    let full_ok = (full.cases, full.events, full.variants) == (150_270, 560_551, 131);
    let (start, end) = (parse_date("20030501").unwrap(), parse_date("20040430").unwrap());
    let mut tried = Vec::new();
    for (rule, offset) in slice_candidates() {
        let slice = DateSlice::new(start, end)
            .unwrap()
            .with_rule(rule)
            .with_offset(FixedOffset::east_opt(offset * 60).unwrap());
        let s = log_statistics(&filtered.slice(&slice));
        let counts = (s.cases, s.events, s.activities, s.variants);
        tried.push(format!("{rule:?}@{offset:+}min={counts:?}"));
        if counts == (3_321, 12_406, 11, 27) {
            *matched_rule = Some((rule, offset));
            break;
        }
    }
    let elapsed = started.elapsed();
    let ok = full_ok && matched_rule.is_some() && elapsed < Duration::from_secs(120);
    gate(
        ok,
        format!(
            "filtered {}/{}/{} variants (want 150270/560551/131); slice {} ; {:.1}s",
            full.cases,
            full.events,
            full.variants,
            match matched_rule {
                Some((r, o)) => format!("matched 3321/12406/11/27 with rule {r:?}, offset {o:+} min"),
                None => format!("no rule matched: {}", tried.join(", ")),
            },
            elapsed.as_secs_f64()
        ),
    )
}

// ---- 2 ---------------------------------------------------------------------

fn c2_kernel_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut worst_closed, mut pairs) = (0.0f64, 0.0f64, 0usize);
    for kind in all_maps() {
        for n in 1..=4 {
            for _ in 0..200 {
                let (x, x2) = (point(&mut rng, n), point(&mut rng, n));
                let k = kernel_overlap(&x, &x2, kind, ShotConfig::EXACT).unwrap();
                worst = worst.max((k - oracles::dense_kernel(family(kind.variant), kind.layers, &x, &x2)).abs());
                if kind.variant == FeatureMapVariant::Angle {
                    worst_closed = worst_closed.max((k - oracles::angle_closed_form(kind.layers, &x, &x2)).abs());
                }
                pairs += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    gate(
        worst < 1e-10 && worst_closed < 1e-10 && elapsed < Duration::from_secs(30),
        format!(
            "{pairs} pairs over 6 maps, n=1..4: max |Δ| dense {worst:.1e}, angle closed form {worst_closed:.1e} (tol 1e-10); {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---- 3 ---------------------------------------------------------------------

fn min_eig(k: &KernelMatrix) -> f64 {
    let m = DMatrix::from_row_slice(k.rows(), k.cols(), k.values());
    let sym = (&m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

fn c3_gram_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 4;
    let (mut asym, mut diag, mut lambda) = (0.0f64, 0.0f64, f64::INFINITY);
    let points: Vec<Vec<f64>> = (0..50).map(|_| point(&mut rng, n)).collect();
    for kind in all_maps() {
        let g = Kernel::new(KernelKind::Quantum {
            map: kind,
            shots: ShotConfig::EXACT,
        })
        .unwrap()
        .gram(&points)
        .unwrap();
        for i in 0..50 {
            diag = diag.max((g.get(i, i) - 1.0).abs());
            // The diagonal is fixed at 1; check the circuit agrees.
            diag = diag.max((kernel_overlap(&points[i], &points[i], kind, ShotConfig::EXACT).unwrap() - 1.0).abs());
            for j in 0..50 {
                asym = asym.max((g.get(i, j) - g.get(j, i)).abs());
            }
        }
        lambda = lambda.min(min_eig(&g));
    }
    let exact_ok = asym < 1e-12 && diag < 1e-12 && lambda >= -1e-8;

    // Shot noise: 500 trials of a 12-sample Gram, maps cycling.
    let maps = all_maps();
    let (mut within, mut total) = (0usize, 0usize);
    for trial in 0..500u64 {
        let kind = maps[trial as usize % maps.len()];
        let pts: Vec<Vec<f64>> = (0..12).map(|_| point(&mut rng, n)).collect();
        let exact = Kernel::new(KernelKind::Quantum {
            map: kind,
            shots: ShotConfig::EXACT,
        })
        .unwrap()
        .gram(&pts)
        .unwrap();
        let shot = Kernel::new(KernelKind::Quantum {
            map: kind,
            shots: ShotConfig::shots(1000, 1_000 + trial).unwrap(),
        })
        .unwrap()
        .gram(&pts)
        .unwrap();
        for i in 0..12 {
            for j in i + 1..12 {
                let p = exact.get(i, j);
                let bound = 5.0 * (p * (1.0 - p) / 1000.0).sqrt();
                let dev = (shot.get(i, j) - p).abs();
                within += usize::from(dev < bound || (bound == 0.0 && dev == 0.0));
                total += 1;
            }
        }
    }
    let frac = within as f64 / total as f64;
    gate(
        exact_ok && frac >= 0.99,
        format!(
            "exact: asymmetry {asym:.1e} (<1e-12), |diag-1| {diag:.1e}, λ_min {lambda:.3e} (≥-1e-8); shots: {within}/{total} = {:.4} within 5σ (≥0.99)",
            frac
        ),
    )
}

// ---- 4 ---------------------------------------------------------------------

fn rbf_problem(rng: &mut ChaCha8Rng, m: usize) -> (DMatrix<f64>, Vec<f64>) {
    let pts: Vec<[f64; 2]> = (0..m).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let mut y: Vec<f64> = (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    y.shuffle(rng);
    let k = DMatrix::from_fn(m, m, |i, j| {
        let d = (pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2);
        (-1.5 * d).exp()
    });
    (k, y)
}

fn to_kernel_matrix(k: &DMatrix<f64>) -> KernelMatrix {
    KernelMatrix::from_dmatrix(k)
}

fn c4_svm() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_obj, mut worst_kkt, mut models) = (0.0f64, 0.0f64, 0usize);
    let mut check_kkt = |k: &DMatrix<f64>, y: &[f64], cfg: &SvmConfig| -> Result<f64, String> {
        let model = fit(&to_kernel_matrix(k), y, cfg).map_err(|e| e.to_string())?;
        let alpha = model.alphas(y.len());
        let v = oracles::kkt_violation(k, y, &alpha, model.bias, cfg.c);
        worst_kkt = worst_kkt.max(v);
        models += 1;
        Ok(-model.dual_objective(&to_kernel_matrix(k)))
    };
    for p in 0..10 {
        let (k, y) = rbf_problem(&mut rng, 6);
        let c = [0.3, 1.0, 10.0][p % 3];
        let cfg = SvmConfig {
            c,
            ..Default::default()
        };
        let smo = match check_kkt(&k, &y, &cfg) {
            Ok(v) => v,
            Err(e) => return gate(false, format!("problem {p}: {e}")),
        };
        let (oracle, _) = oracles::brute_force_dual(&k, &y, c);
        worst_obj = worst_obj.max((smo + oracle).abs());
    }
    // KKT also on larger problems, as every trained model must satisfy it.
    for _ in 0..20 {
        let (k, y) = rbf_problem(&mut rng, 40);
        if let Err(e) = check_kkt(&k, &y, &SvmConfig::default()) {
            return gate(false, e);
        }
    }
    gate(
        worst_obj < 1e-5 && worst_kkt <= 1e-3,
        format!(
            "10 six-point problems: max |dual - QP oracle| {worst_obj:.1e} (tol 1e-5); max KKT violation {worst_kkt:.1e} over {models} models (tol 1e-3)"
        ),
    )
}

// ---- 5 ---------------------------------------------------------------------

fn c5_vqc() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-4;
    // Shift-rule derivatives of the class scores against central differences.
    let mut worst = 0.0f64;
    // The same comparison on the cross-entropy, with the label probability
    // of the worst draw (finite differences of -ln p degrade as p shrinks).
    let (mut worst_loss, mut worst_loss_p) = (0.0f64, 1.0f64);
    for draw in 0..50 {
        let n = 1 + draw % 4;
        let max_classes = (1usize << n).min(4);
        let classes = rng.gen_range(2..=max_classes);
        let variant = FeatureMapVariant::ALL[rng.gen_range(0..3)];
        let kind = FeatureMapKind::new(variant, rng.gen_range(1..=2)).unwrap();
        let layers = rng.gen_range(1..=2);
        let model = VqcModel::init(kind, n, layers, (0..classes).map(|c| format!("c{c}")).collect(), draw as u64).unwrap();
        let theta: Vec<f64> = (0..layers * n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let x = vec![point(&mut rng, n)];
        let label = rng.gen_range(0..classes);
        let batch = Batch::new(&model, &x, &[label]).unwrap();
        let jac = batch.score_jacobian(&theta, 0).unwrap();
        let grad = batch.parameter_shift_gradient(&theta, &[0]).unwrap();
        for k in 0..theta.len() {
            let (mut plus, mut minus) = (theta.clone(), theta.clone());
            plus[k] += h;
            minus[k] -= h;
            let (sp, sm) = (batch.scores(&plus, 0).unwrap(), batch.scores(&minus, 0).unwrap());
            for c in 0..classes {
                worst = worst.max(((sp[c] - sm[c]) / (2.0 * h) - jac[k][c]).abs());
            }
            let fd = (batch.loss(&plus, None).unwrap() - batch.loss(&minus, None).unwrap()) / (2.0 * h);
            let dev = (fd - grad[k]).abs();
            if dev > worst_loss {
                worst_loss = dev;
                worst_loss_p = batch.scores(&theta, 0).unwrap()[label];
            }
        }
    }

    // One qubit, two classes split along the rotation angle.
    let xs: Vec<Vec<f64>> = [0.1, 0.3, 0.5, 2.6, 2.8, 3.0].iter().map(|&v| vec![v]).collect();
    let labels = [0, 0, 0, 1, 1, 1];
    let kind = FeatureMapKind::new(FeatureMapVariant::Angle, 1).unwrap();
    let model = VqcModel::init(kind, 1, 1, vec!["a".into(), "b".into()], 0).unwrap();
    let opt = OptimizerConfig {
        learning_rate: 0.1,
        epochs: 40,
        ..Default::default()
    };
    let (_, report) = train(model, &xs, &labels, &opt).unwrap();
    let h = &report.loss_history;
    let monotone = h.windows(2).all(|w| w[1] <= w[0]);
    gate(
        worst < 1e-5 && monotone,
        format!(
            "parameter shift vs central differences on class scores: max |Δ| {worst:.1e} over 50 draws (tol 1e-5); on the loss: {worst_loss:.1e} (label probability {worst_loss_p:.3}); 1-qubit loss {:.4} -> {:.4}, non-increasing: {monotone}",
            h[0],
            h[h.len() - 1]
        ),
    )
}

// ---- 6 ---------------------------------------------------------------------

const HOUR_MS: i64 = 3_600_000;

fn random_log(rng: &mut ChaCha8Rng) -> EventLog {
    let activities = ["A", "B", "C", "D", "E", "F"];
    let resources = ["r1", "r2", "r3", "r4"];
    let n_cases = rng.gen_range(3..=80);
    let mut traces = Vec::new();
    for c in 0..n_cases {
        let id = format!("c{c}");
        let mut t = rng.gen_range(0..200i64);
        let mut events = Vec::new();
        for _ in 0..rng.gen_range(1..=12) {
            events.push(Event {
                case_id: id.clone(),
                activity: activities[rng.gen_range(0..activities.len())].into(),
                timestamp: DateTime::from_timestamp_millis(1_000_000_000_000 + t * HOUR_MS).unwrap(),
                resource: rng.gen_bool(0.8).then(|| resources[rng.gen_range(0..resources.len())].into()),
            });
            t += rng.gen_range(0..10);
        }
        traces.push(Trace::new(id, BTreeMap::new(), events).unwrap());
    }
    EventLog::from_traces(traces).unwrap()
}

fn c6_intercase() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut anchors, mut edge_anchors, mut mismatches, mut max_events) = (0usize, 0usize, 0usize, 0usize);
    let mut first_mismatch = String::new();
    for l in 0..100 {
        let log = random_log(&mut rng);
        max_events = max_events.max(log.num_events());
        let train: Vec<&Trace> = log.traces().iter().filter(|_| rng.gen_bool(0.6)).map(|t| t.as_ref()).collect();
        let batch = BatchConfig {
            epsilon_seconds: (rng.gen_range(1..=6) * 3600) as f64,
            min_burst: rng.gen_range(2..=4),
        };
        let width_ms = rng.gen_range(1..=40) * HOUR_MS;
        let oracle = oracles::FullScan::new(&log, &train, (batch.epsilon_seconds * 1000.0) as i64, batch.min_burst);
        let stats = InterCaseStats::fit(&train, batch).unwrap();
        let activities = Vocabulary::new(train.iter().flat_map(|t| t.events().iter().map(|e| e.activity.clone())));
        let resources = Vocabulary::new(train.iter().flat_map(|t| t.events().iter().filter_map(|e| e.resource.clone())));
        let index = Arc::new(EventIndex::new(&log));
        let encoder = InterCaseEncoder::new(
            Arc::clone(&index),
            Arc::new(stats),
            activities,
            resources,
            &[],
            PeerWindow::from_seconds(width_ms as f64 / 1000.0).unwrap(),
        )
        .unwrap();
        for (case, trace) in log.traces().iter().enumerate() {
            for pos in 0..trace.len() {
                let anchor = index.anchor_at(trace.case_id(), pos).unwrap();
                let got = oracles::InterValues {
                    peer_cases: encoder.feature(InterFeature::PeerCases, anchor),
                    peer_act: encoder.feature(InterFeature::PeerAct, anchor),
                    res_count: encoder.feature(InterFeature::ResCount, anchor),
                    avg_delay: encoder.feature(InterFeature::AvgDelay, anchor),
                    freq_act: encoder.feature(InterFeature::FreqAct, anchor),
                    top_res: encoder.feature(InterFeature::TopRes, anchor),
                    batch: encoder.feature(InterFeature::Batch, anchor),
                };
                let (want, on_edge) = oracle.features(case, pos, width_ms);
                anchors += 1;
                edge_anchors += usize::from(on_edge);
                if got != want {
                    mismatches += 1;
                    if first_mismatch.is_empty() {
                        first_mismatch = format!("; first in log {l}, case {}, pos {pos}: got {got:?}, want {want:?}", trace.case_id());
                    }
                }
            }
        }
    }
    gate(
        mismatches == 0 && edge_anchors > 0 && max_events <= 1000,
        format!(
            "100 logs (≤{max_events} events), {anchors} anchors x 7 features, {edge_anchors} with an event on the window edge: {mismatches} mismatches{first_mismatch}"
        ),
    )
}

// ---- 7 ---------------------------------------------------------------------

/// Sessions below are built from logs loaded here; the dataset block only
/// has to pass validation.
fn placeholder_dataset() -> DatasetConfig {
    DatasetConfig {
        synthetic: Some(SyntheticSource { cases: 1, seed: 0 }),
        ..Default::default()
    }
}

fn trend(log: EventLog, pre: &Preprocessing, source: &str) -> Outcome {
    let started = Instant::now();
    let seed = 7;
    let prepared = match prepare_log(log, pre, seed) {
        Ok(p) => p,
        Err(e) => return gate(false, format!("{source}: {e}")),
    };
    let n = prepared.samples.len();
    let session = Session::new(prepared, &GramCacheConfig::default()).unwrap();
    let base = ExperimentConfig {
        seed,
        dataset: placeholder_dataset(),
        ..Default::default()
    };
    let with = |classifier: ClassifierConfig, features: Vec<InterFeature>| {
        let mut cfg = base.clone();
        cfg.classifier = classifier;
        cfg.inter_case.features = features;
        cfg
    };
    let zz2 = || ClassifierConfig::from_name("qke_zz_2").unwrap();
    let run = |cfg: &ExperimentConfig| -> qppm::Result<f64> {
        let runs = if cfg.inter_case.features.is_empty() {
            vec![session.run_experiment(cfg)?]
        } else {
            session.window_sweep(cfg, &[0.15, 0.3, 0.5])?
        };
        Ok(runs.last().unwrap().mean_accuracy)
    };
    let result = (|| -> qppm::Result<(f64, f64, f64)> {
        let baseline = run(&with(zz2(), vec![]))?;
        let peer = run(&with(zz2(), vec![InterFeature::PeerCases]))?;
        let rbf = run(&with(ClassifierConfig::from_name("svc_rbf").unwrap(), vec![]))?;
        Ok((baseline, peer, rbf))
    })();
    match result {
        Ok((baseline, peer, rbf)) => {
            let ok = peer > baseline && baseline >= rbf - 0.02;
            Outcome {
                passed: ok,
                gating: false,
                detail: format!(
                    "{source}, {n} prefix samples, seed {seed}: qke_zz_2 index_bsd_4 {baseline:.4}, +peer_cases {peer:.4}, svc_rbf {rbf:.4}; {:.0}s",
                    started.elapsed().as_secs_f64()
                ),
            }
        }
        Err(e) => Outcome {
            passed: false,
            gating: false,
            detail: format!("{source}: {e}"),
        },
    }
}

fn c7_trend(rule: Option<(CaseInclusion, i32)>) -> Outcome {
    let mut pre = Preprocessing {
        max_samples: Some(400),
        ..Default::default()
    };
    if let Some(path) = rtfm_path() {
        let (rule, offset) = rule.unwrap_or((CaseInclusion::FirstEvent, 0));
        pre.filter_singleton_variants = true;
        pre.date_range = Some(DateRangeConfig {
            start: "20030501".into(),
            end: "20040430".into(),
            rule,
            utc_offset_minutes: offset,
        });
        match read_log(&path, None, &ColumnMap::default()) {
            Ok(log) => trend(log, &pre, "RTFM-S"),
            Err(e) => gate(false, e.to_string()),
        }
    } else {
        let mut out = trend(FineProcess::new(600, 11).generate(), &pre, "generated fine-process log (RTFM absent)");
        out.detail = format!("not run on RTFM; {}", out.detail);
        out
    }
}

// ---- 8 ---------------------------------------------------------------------

fn c8_sampling_scaling() -> Outcome {
    let cfg = ExperimentConfig {
        seed: 8,
        dataset: placeholder_dataset(),
        classifier: ClassifierConfig::from_name("qke_zz_1").unwrap(),
        encoding: "index_bsd_3".parse().unwrap(),
        preprocessing: Preprocessing {
            max_samples: Some(600),
            ..Default::default()
        },
        ..Default::default()
    };
    let prepared = prepare_log(FineProcess::new(400, 8).generate(), &cfg.preprocessing, cfg.seed).unwrap();
    let disabled = GramCacheConfig {
        enabled: false,
        ..Default::default()
    };
    let session = Session::new(prepared, &disabled).unwrap();
    // Warm-up so allocation and thread start-up do not land in the first timing.
    session.sampling_sweep(&cfg, &[0.2]).unwrap();
    let runs = session.sampling_sweep(&cfg, &[1.0, 0.5]).unwrap();
    let (full, half) = (&runs[0], &runs[1]);
    let count_ratio = half.kernel_evaluations as f64 / full.kernel_evaluations as f64;
    let time_ratio = half.gram_seconds / full.gram_seconds;
    gate(
        (count_ratio / 0.25 - 1.0).abs() <= 0.01 && time_ratio < 0.5,
        format!(
            "evaluations {} -> {} (ratio {count_ratio:.4}, want 0.25 ± 1%); Gram time {:.3}s -> {:.3}s (ratio {time_ratio:.3}, superlinear < 0.5)",
            full.kernel_evaluations, half.kernel_evaluations, full.gram_seconds, half.gram_seconds
        ),
    )
}

fn main() {
    let mut rule = None;
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        ("dataset statistics", Box::new(|| c1_dataset_statistics(&mut rule))),
        ("kernel oracle equivalence", Box::new(c2_kernel_oracle)),
        ("Gram properties", Box::new(c3_gram_properties)),
        ("SVM correctness", Box::new(c4_svm)),
        ("VQC gradients", Box::new(c5_vqc)),
        ("inter-case oracle equivalence", Box::new(c6_intercase)),
    ];
    let mut failed = 0;
    let mut report = |i: usize, name: &str, o: Outcome| {
        let tag = match (o.passed, o.gating) {
            (true, true) => "PASS",
            (false, true) => "FAIL",
            (true, false) => "PASS (soft)",
            (false, false) => "FAIL (soft)",
        };
        if o.gating && !o.passed {
            failed += 1;
        }
        println!("criterion {i} {tag}: {name}: {}", o.detail);
    };
    let mut i = 0;
    for (name, run) in criteria {
        i += 1;
        report(i, name, run());
    }
    report(7, "desk-scale trend", c7_trend(rule));
    report(8, "sampling-sweep scaling", c8_sampling_scaling());
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all gating criteria passed");
}
