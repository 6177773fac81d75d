use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use qppm::bench::{
    load_log, preprocess_log, prepare, run_bench, write_report, BenchConfig, DateRangeConfig, GramCacheConfig,
    Preprocessing, Session,
};
use qppm::encoding::{write_feature_csv, IntraEncoding};
use qppm::eventlog::{log_statistics, read_log, write_csv, CaseInclusion, ColumnMap, EventLog, LogFormat};
use qppm::intercase::InterFeature;

use crate::{check, Cli, Command, FilterArgs, FormatArg, LogArgs, RuleArg, UsageError};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let config = match &cli.config {
        Some(path) => Some(load_config(path, &cli)?),
        None => None,
    };
    let data_root = cli.data_root.as_deref();
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    match cli.command {
        Command::Stats { log, filter, json } => {
            let log = filtered_log(&log, &filter, config.as_ref(), data_root)?;
            let s = log_statistics(&log);
            if json {
                println!("{}", serde_json::to_string_pretty(&s)?);
            } else {
                println!("cases\tevents\tactivities\tvariants\tmedian case time");
                println!("{}\t{}\t{}\t{}\t{}", s.cases, s.events, s.activities, s.variants, s.median_case_time);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Prepare { log, filter, out } => {
            let log = filtered_log(&log, &filter, config.as_ref(), data_root)?;
            let out = out.unwrap_or_else(|| out_dir.join("prepared.csv"));
            let file = create(&out)?;
            write_csv(&log, BufWriter::new(file))?;
            eprintln!("wrote {} cases, {} events to {}", log.num_cases(), log.num_events(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Encode { encoding, features, out } => {
            let mut cfg = config.ok_or_else(|| usage("encode needs --config"))?.experiment;
            if let Some(name) = encoding {
                cfg.encoding = name.parse::<IntraEncoding>()?;
            }
            if let Some(names) = features {
                cfg.inter_case.features = names
                    .iter()
                    .filter(|n| !n.is_empty())
                    .map(|n| n.parse::<InterFeature>())
                    .collect::<qppm::Result<_>>()?;
            }
            let disabled = GramCacheConfig {
                enabled: false,
                ..Default::default()
            };
            let session = Session::new(prepare(&cfg, data_root)?, &disabled)?;
            let (rows, labels) = session.encode_all(&cfg)?;
            let out = out.unwrap_or_else(|| out_dir.join("features.csv"));
            write_feature_csv(&rows, &labels, BufWriter::new(create(&out)?))?;
            eprintln!(
                "wrote {} rows x {} features to {}",
                rows.len(),
                rows.first().map_or(0, |r| r.len()),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench => {
            let cfg = config.ok_or_else(|| usage("bench needs --config"))?;
            let started = Instant::now();
            let report = run_bench(&cfg, data_root)?;
            let files = write_report(&report, &out_dir)?;
            println!(
                "{} prefix samples from {} cases; {} runs in {:.1}s",
                report.prefix_samples,
                report.dataset.cases,
                report.runs.len() + report.sampling.len() + report.prefix_length.len(),
                started.elapsed().as_secs_f64()
            );
            print!("{}", qppm::bench::results_table_csv(&report.table)?);
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::KernelCheck {
            qubits,
            map,
            samples,
            perturb,
        } => {
            let seed = cli.seed.or(config.map(|c| c.experiment.seed)).unwrap_or(0);
            let passed = check::kernel_check(qubits, map.as_deref(), samples, perturb, seed)?;
            Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn load_config(path: &Path, cli: &Cli) -> Result<BenchConfig> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg: BenchConfig =
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    if cli.exact {
        cfg.experiment.shots = None;
    } else if let Some(shots) = cli.shots {
        cfg.experiment.shots = Some(shots);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn filtered_log(args: &LogArgs, filter: &FilterArgs, config: Option<&BenchConfig>, data_root: Option<&Path>) -> Result<EventLog> {
    let mut dataset = config.map(|c| c.experiment.dataset.clone()).unwrap_or_default();
    let mut pre = config.map(|c| c.experiment.preprocessing.clone()).unwrap_or_else(Preprocessing::default);
    override_columns(&mut dataset.columns, args);
    let log = match &args.path {
        Some(path) => {
            let path = match data_root {
                Some(root) if path.is_relative() && !path.exists() => root.join(path),
                _ => path.clone(),
            };
            let format = args.format.map(|f| match f {
                FormatArg::Xes => LogFormat::Xes,
                FormatArg::Csv => LogFormat::Csv,
            });
            read_log(&path, format.or(dataset.format), &dataset.columns)
                .with_context(|| format!("reading {}", path.display()))?
        }
        None if config.is_some() => load_log(&dataset, data_root)?,
        None => return Err(usage("give a log path or --config")),
    };
    pre.filter_singleton_variants |= filter.filter_singletons;
    if let (Some(start), Some(end)) = (&filter.from, &filter.to) {
        pre.date_range = Some(DateRangeConfig {
            start: start.clone(),
            end: end.clone(),
            rule: match filter.rule {
                RuleArg::FirstEvent => CaseInclusion::FirstEvent,
                RuleArg::AllEvents => CaseInclusion::AllEvents,
                RuleArg::AnyEvent => CaseInclusion::AnyEvent,
            },
            utc_offset_minutes: filter.utc_offset_minutes,
        });
    }
    Ok(preprocess_log(log, &pre)?)
}

fn override_columns(columns: &mut ColumnMap, args: &LogArgs) {
    if let Some(c) = &args.case_column {
        columns.case_id = c.clone();
    }
    if let Some(c) = &args.activity_column {
        columns.activity = c.clone();
    }
    if let Some(c) = &args.timestamp_column {
        columns.timestamp = c.clone();
    }
    if let Some(c) = &args.resource_column {
        columns.resource = Some(c.clone());
    }
}
