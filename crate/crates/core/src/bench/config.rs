use std::path::PathBuf;

use chrono::FixedOffset;
use serde::{Deserialize, Serialize};

use crate::encoding::IntraEncoding;
use crate::error::{Error, Result};
use crate::eventlog::{parse_date, CaseInclusion, ColumnMap, DateSlice, LogFormat};
use crate::intercase::{BatchConfig, InterFeature, MAX_INTER_FEATURES};
use crate::qkernel::{CacheFormat, KernelKind};
use crate::qsim::{FeatureMapKind, ShotConfig};
use crate::svm::SvmConfig;
use crate::vqc::OptimizerConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSource {
    pub cases: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Where the event log comes from. Relative paths resolve against the data
/// root directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: Option<PathBuf>,
    pub format: Option<LogFormat>,
    pub columns: ColumnMap,
    /// Generated log used instead of a file.
    pub synthetic: Option<SyntheticSource>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DateRangeConfig {
    /// `YYYY-MM-DD` or `YYYYMMDD`, both ends inclusive.
    pub start: String,
    pub end: String,
    #[serde(default)]
    pub rule: CaseInclusion,
    #[serde(default)]
    pub utc_offset_minutes: i32,
}

impl DateRangeConfig {
    pub fn to_slice(&self) -> Result<DateSlice> {
        let offset = FixedOffset::east_opt(self.utc_offset_minutes * 60)
            .ok_or_else(|| Error::config(format!("bad UTC offset {} minutes", self.utc_offset_minutes)))?;
        Ok(DateSlice::new(parse_date(&self.start)?, parse_date(&self.end)?)?
            .with_rule(self.rule)
            .with_offset(offset))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Preprocessing {
    pub filter_singleton_variants: bool,
    pub date_range: Option<DateRangeConfig>,
    pub min_prefix: usize,
    pub max_prefix: Option<usize>,
    /// Stratified cap on the number of prefix samples.
    pub max_samples: Option<usize>,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Preprocessing {
            filter_singleton_variants: false,
            date_range: None,
            min_prefix: 1,
            max_prefix: None,
            max_samples: None,
        }
    }
}

/// What a window fraction is multiplied by.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowBase {
    /// Median case duration of the training traces of each fold.
    MedianCaseDuration,
    Seconds(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterCaseConfig {
    pub features: Vec<InterFeature>,
    pub window_fraction: f64,
    pub window_base: WindowBase,
    pub batch: BatchConfig,
}

impl Default for InterCaseConfig {
    fn default() -> Self {
        InterCaseConfig {
            features: Vec::new(),
            window_fraction: 0.5,
            window_base: WindowBase::MedianCaseDuration,
            batch: BatchConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierConfig {
    Majority,
    SvcLinear {
        #[serde(default)]
        svm: SvmConfig,
    },
    SvcRbf {
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        svm: SvmConfig,
    },
    Qke {
        map: FeatureMapKind,
        #[serde(default)]
        svm: SvmConfig,
    },
    Vqc {
        map: FeatureMapKind,
        #[serde(default = "one")]
        layers: usize,
        #[serde(default)]
        optimizer: OptimizerConfig,
    },
}

fn one() -> usize {
    1
}

impl ClassifierConfig {
    /// Table name, e.g. `svc_rbf`, `qke_zz_2`, `vqc_zz_a_1`.
    pub fn name(&self) -> String {
        match self {
            ClassifierConfig::Majority => "majority".into(),
            ClassifierConfig::SvcLinear { .. } => "svc_linear".into(),
            ClassifierConfig::SvcRbf { .. } => "svc_rbf".into(),
            ClassifierConfig::Qke { map, .. } => format!("qke_{map}"),
            ClassifierConfig::Vqc { map, .. } => format!("vqc_{map}"),
        }
    }

    /// Kernel for SVM-based classifiers, with the given shot setting.
    pub fn kernel(&self, shots: ShotConfig) -> Option<(KernelKind, SvmConfig)> {
        match *self {
            ClassifierConfig::SvcLinear { svm } => Some((KernelKind::Linear, svm)),
            ClassifierConfig::SvcRbf { gamma, svm } => Some((KernelKind::Rbf { gamma }, svm)),
            ClassifierConfig::Qke { map, svm } => Some((KernelKind::Quantum { map, shots }, svm)),
            _ => None,
        }
    }

    /// Parses the short names used on the command line.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "majority" => Ok(ClassifierConfig::Majority),
            "svc_linear" => Ok(ClassifierConfig::SvcLinear { svm: SvmConfig::default() }),
            "svc_rbf" => Ok(ClassifierConfig::SvcRbf {
                gamma: None,
                svm: SvmConfig::default(),
            }),
            _ => {
                if let Some(map) = name.strip_prefix("qke_") {
                    Ok(ClassifierConfig::Qke {
                        map: map.parse()?,
                        svm: SvmConfig::default(),
                    })
                } else if let Some(map) = name.strip_prefix("vqc_") {
                    Ok(ClassifierConfig::Vqc {
                        map: map.parse()?,
                        layers: 1,
                        optimizer: OptimizerConfig::default(),
                    })
                } else {
                    Err(Error::config(format!("unknown classifier {name:?}")))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GramCacheConfig {
    pub enabled: bool,
    /// On-disk location; `None` keeps matrices in memory for one session.
    pub dir: Option<PathBuf>,
    pub format: CacheFormat,
}

impl Default for GramCacheConfig {
    fn default() -> Self {
        GramCacheConfig {
            enabled: true,
            dir: None,
            format: CacheFormat::Binary,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub preprocessing: Preprocessing,
    pub encoding: IntraEncoding,
    pub static_attributes: Vec<String>,
    pub inter_case: InterCaseConfig,
    pub classifier: ClassifierConfig,
    pub folds: usize,
    /// Fraction of each training fold kept by stratified sampling.
    pub sampling_fraction: f64,
    pub seed: u64,
    /// Measurement shots for quantum models; `None` means exact.
    pub shots: Option<u32>,
    /// Interval the features are scaled into.
    pub scale_range: (f64, f64),
    pub gram_cache: GramCacheConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetConfig::default(),
            preprocessing: Preprocessing::default(),
            encoding: IntraEncoding::IndexBased { k: 4 },
            static_attributes: Vec::new(),
            inter_case: InterCaseConfig::default(),
            classifier: ClassifierConfig::SvcRbf {
                gamma: None,
                svm: SvmConfig::default(),
            },
            folds: 3,
            sampling_fraction: 1.0,
            seed: 0,
            shots: None,
            scale_range: (0.0, std::f64::consts::PI),
            gram_cache: GramCacheConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::config(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.inter_case.features.len() > MAX_INTER_FEATURES {
            return Err(Error::config(format!(
                "at most {MAX_INTER_FEATURES} inter-case features, got {}",
                self.inter_case.features.len()
            )));
        }
        check_fraction("sampling fraction", self.sampling_fraction)?;
        if !(self.inter_case.window_fraction > 0.0 && self.inter_case.window_fraction.is_finite()) {
            return Err(Error::config("window fraction must be positive"));
        }
        if let WindowBase::Seconds(s) = self.inter_case.window_base {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("window base must be positive"));
            }
        }
        if self.shots == Some(0) {
            return Err(Error::config("shot count must be at least 1"));
        }
        if self.preprocessing.min_prefix == 0 {
            return Err(Error::config("min_prefix must be at least 1"));
        }
        if self.preprocessing.max_samples == Some(0) {
            return Err(Error::config("max_samples must be at least 1"));
        }
        let (lo, hi) = self.scale_range;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::config("scale range must be an increasing finite interval"));
        }
        if self.dataset.path.is_none() && self.dataset.synthetic.is_none() {
            return Err(Error::config("dataset needs a path or a synthetic source"));
        }
        if let Some(range) = &self.preprocessing.date_range {
            range.to_slice()?;
        }
        Ok(())
    }

    /// Column label: the inter-case features joined with `+`, or the
    /// intra-case encoding name when there are none.
    pub fn feature_label(&self) -> String {
        if self.inter_case.features.is_empty() {
            self.encoding.to_string()
        } else {
            self.inter_case
                .features
                .iter()
                .map(|f| f.name())
                .collect::<Vec<_>>()
                .join("+")
        }
    }

    pub fn shot_config(&self) -> ShotConfig {
        ShotConfig {
            shots: self.shots,
            seed: self.seed,
        }
    }
}

pub(crate) fn check_fraction(what: &str, f: f64) -> Result<()> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{what} {f} is not in (0, 1]")))
    }
}

/// A full benchmark: classifiers × feature sets, each averaged over window
/// fractions, plus optional sampling and prefix-length sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub experiment: ExperimentConfig,
    /// Empty means the experiment's own classifier.
    pub classifiers: Vec<ClassifierConfig>,
    /// Empty means the experiment's own feature set.
    pub feature_sets: Vec<Vec<InterFeature>>,
    /// Empty means the experiment's own window fraction.
    pub window_fractions: Vec<f64>,
    pub sampling_fractions: Vec<f64>,
    pub prefix_ks: Vec<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            experiment: ExperimentConfig::default(),
            classifiers: Vec::new(),
            feature_sets: Vec::new(),
            window_fractions: Vec::new(),
            sampling_fractions: Vec::new(),
            prefix_ks: Vec::new(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        for set in &self.feature_sets {
            let mut cfg = self.experiment.clone();
            cfg.inter_case.features = set.clone();
            cfg.validate()?;
        }
        for &f in &self.sampling_fractions {
            check_fraction("sampling fraction", f)?;
        }
        if self.window_fractions.iter().any(|&f| !(f > 0.0 && f.is_finite())) {
            return Err(Error::config("window fractions must be positive"));
        }
        if self.prefix_ks.contains(&0) {
            return Err(Error::config("prefix lengths must be at least 1"));
        }
        Ok(())
    }
}
