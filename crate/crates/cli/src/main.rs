mod check;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Quantum and classical next-activity prediction benchmarks on event logs.
#[derive(Debug, Parser)]
#[command(name = "qppm", version)]
pub struct Cli {
    /// Benchmark configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice; overrides the config value.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Estimate quantum probabilities from this many shots.
    #[arg(long, global = true, conflicts_with = "exact")]
    pub shots: Option<u32>,
    /// Exact statevector probabilities (overrides shots in the config).
    #[arg(long, global = true)]
    pub exact: bool,
    /// Output directory.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Directory that relative dataset paths resolve against.
    #[arg(long, global = true, env = "QPPM_DATA_ROOT")]
    pub data_root: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print case/event/activity/variant counts and the median case time.
    Stats {
        #[command(flatten)]
        log: LogArgs,
        #[command(flatten)]
        filter: FilterArgs,
        /// Print JSON instead of a table row.
        #[arg(long)]
        json: bool,
    },
    /// Write the filtered and sliced log as CSV.
    Prepare {
        #[command(flatten)]
        log: LogArgs,
        #[command(flatten)]
        filter: FilterArgs,
        /// Output file (default: <out-dir>/prepared.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the composed feature matrix with labels as CSV.
    Encode {
        /// Intra-case encoding, e.g. index_bsd_4, last_state, agg_count.
        #[arg(long)]
        encoding: Option<String>,
        /// Comma-separated inter-case features.
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<String>>,
        /// Output file (default: <out-dir>/features.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured benchmark and write result files.
    Bench,
    /// Compare the simulator against dense unitary matrices on random inputs.
    KernelCheck {
        #[arg(long, default_value_t = 4)]
        qubits: usize,
        /// Feature map such as zz_2; all maps with 1 and 2 layers when omitted.
        #[arg(long)]
        map: Option<String>,
        /// Random input pairs per map.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Self-test: perturb one angle on the oracle side so the check must fail.
        #[arg(long)]
        perturb: bool,
    },
}

#[derive(Debug, Args)]
pub struct LogArgs {
    /// Event log (.xes, .xes.gz, .csv); defaults to the config dataset.
    pub path: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long)]
    pub case_column: Option<String>,
    #[arg(long)]
    pub activity_column: Option<String>,
    #[arg(long)]
    pub timestamp_column: Option<String>,
    #[arg(long)]
    pub resource_column: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Xes,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RuleArg {
    FirstEvent,
    AllEvents,
    AnyEvent,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Drop cases whose variant occurs once.
    #[arg(long)]
    pub filter_singletons: bool,
    /// First day kept (YYYY-MM-DD or YYYYMMDD).
    #[arg(long, requires = "to")]
    pub from: Option<String>,
    /// Last day kept, inclusive.
    #[arg(long, requires = "from")]
    pub to: Option<String>,
    #[arg(long, value_enum, default_value = "first-event")]
    pub rule: RuleArg,
    /// Offset of the day boundaries from UTC.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub utc_offset_minutes: i32,
}

/// Errors that are the caller's fault: bad flags, configs or inputs.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    let usage = err.chain().any(|e| {
        e.downcast_ref::<UsageError>().is_some()
            || e.downcast_ref::<qppm::Error>().is_some_and(qppm::Error::is_usage)
    });
    if usage {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(code) => code,
        Err(err) => {
            // Library errors already embed their source in the message.
            let mut parts: Vec<String> = Vec::new();
            for cause in err.chain() {
                let msg = cause.to_string();
                if !parts.last().is_some_and(|prev| prev.contains(&msg)) {
                    parts.push(msg);
                }
            }
            eprintln!("error: {}", parts.join(": "));
            ExitCode::from(exit_code(&err))
        }
    }
}
