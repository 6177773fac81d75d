//! Intra-case encodings: prefixes to fixed-length numeric vectors, plus the
//! min-max scaler that maps features into rotation-angle range.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::{PrefixSample, Trace};

/// Ordinal code reserved for padding and out-of-vocabulary values.
pub const PAD: usize = 0;

pub type Schema = Arc<[String]>;

/// Ordered categorical vocabulary. Index 0 is PAD; known values follow in
/// sorted order starting at 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub const PAD_NAME: &'static str = "<PAD>";

    pub fn new<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let sorted: BTreeSet<String> = values
            .into_iter()
            .map(|s| s.as_ref().to_owned())
            .filter(|s| !s.is_empty())
            .collect();
        Self::from(sorted.into_iter().collect::<Vec<_>>())
    }

    /// Code of `value`, or [`PAD`] when unknown.
    pub fn code(&self, value: &str) -> usize {
        self.index.get(value).copied().unwrap_or(PAD)
    }

    pub fn code_opt(&self, value: Option<&str>) -> usize {
        value.map_or(PAD, |v| self.code(v))
    }

    pub fn name(&self, code: usize) -> &str {
        if code == PAD {
            Self::PAD_NAME
        } else {
            &self.entries[code - 1]
        }
    }

    /// Known values in code order (PAD excluded).
    pub fn values(&self) -> &[String] {
        &self.entries
    }

    /// Number of codes including PAD.
    pub fn len(&self) -> usize {
        self.entries.len() + 1
    }

    /// True when only PAD is present.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(entries: Vec<String>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i + 1))
            .collect();
        Vocabulary { entries, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.entries
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema: Schema,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, schema: Schema) -> Result<Self> {
        if values.len() != schema.len() {
            return Err(Error::Dimension {
                expected: schema.len(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!("feature {:?} is not finite", schema[i])));
        }
        Ok(FeatureVector { values, schema })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

pub fn schema<I: IntoIterator<Item = String>>(names: I) -> Schema {
    names.into_iter().collect::<Vec<_>>().into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMode {
    Count,
    Boolean,
}

/// An intra-case encoding. Textual names: `static`, `last_state`,
/// `agg_count`, `agg_bool`, `index_bsd_<k>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntraEncoding {
    Static,
    LastState,
    Aggregation(AggregationMode),
    IndexBased { k: usize },
}

impl fmt::Display for IntraEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntraEncoding::Static => f.write_str("static"),
            IntraEncoding::LastState => f.write_str("last_state"),
            IntraEncoding::Aggregation(AggregationMode::Count) => f.write_str("agg_count"),
            IntraEncoding::Aggregation(AggregationMode::Boolean) => f.write_str("agg_bool"),
            IntraEncoding::IndexBased { k } => write!(f, "index_bsd_{k}"),
        }
    }
}

impl FromStr for IntraEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(IntraEncoding::Static),
            "last_state" => Ok(IntraEncoding::LastState),
            "agg_count" => Ok(IntraEncoding::Aggregation(AggregationMode::Count)),
            "agg_bool" => Ok(IntraEncoding::Aggregation(AggregationMode::Boolean)),
            _ => match s.strip_prefix("index_bsd_").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Ok(IntraEncoding::IndexBased { k }),
                _ => Err(Error::config(format!("unknown intra-case encoder {s:?}"))),
            },
        }
    }
}

impl Serialize for IntraEncoding {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IntraEncoding {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Vocabularies learned from training traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingContext {
    pub activities: Vocabulary,
    pub resources: Vocabulary,
    /// Selected static case attributes, in schema order.
    pub static_attrs: Vec<(String, Vocabulary)>,
}

impl EncodingContext {
    pub fn fit<'a, I>(traces: I, static_attrs: &[String]) -> Self
    where
        I: IntoIterator<Item = &'a Trace>,
    {
        let traces: Vec<&Trace> = traces.into_iter().collect();
        let events = || traces.iter().flat_map(|t| t.events().iter());
        let activities = Vocabulary::new(events().map(|e| e.activity.as_str()));
        let resources = Vocabulary::new(events().filter_map(|e| e.resource.as_deref()));
        let static_attrs = static_attrs
            .iter()
            .map(|name| {
                let vocab = Vocabulary::new(
                    traces
                        .iter()
                        .filter_map(|t| t.attributes().get(name).map(String::as_str)),
                );
                (name.clone(), vocab)
            })
            .collect();
        EncodingContext {
            activities,
            resources,
            static_attrs,
        }
    }

    pub fn has_resources(&self) -> bool {
        !self.resources.is_empty()
    }

    pub fn schema(&self, encoding: &IntraEncoding) -> Schema {
        let names: Vec<String> = match encoding {
            IntraEncoding::Static => self
                .static_attrs
                .iter()
                .map(|(n, _)| format!("static:{n}"))
                .collect(),
            IntraEncoding::LastState => {
                let mut v = vec!["last_activity".to_owned()];
                if self.has_resources() {
                    v.push("last_resource".into());
                }
                v
            }
            IntraEncoding::Aggregation(mode) => {
                let tag = match mode {
                    AggregationMode::Count => "count",
                    AggregationMode::Boolean => "seen",
                };
                self.activities
                    .values()
                    .iter()
                    .map(|a| format!("{tag}:{a}"))
                    .collect()
            }
            IntraEncoding::IndexBased { k } => {
                let mut v: Vec<String> = (0..*k).map(|i| format!("activity_{}", i as isize - *k as isize)).collect();
                if self.has_resources() {
                    v.extend((0..*k).map(|i| format!("resource_{}", i as isize - *k as isize)));
                }
                v
            }
        };
        schema(names)
    }

    fn static_values(&self, prefix: &PrefixSample) -> Vec<f64> {
        let attrs = prefix.trace().attributes();
        self.static_attrs
            .iter()
            .map(|(name, vocab)| vocab.code_opt(attrs.get(name).map(String::as_str)) as f64)
            .collect()
    }

    fn last_state_values(&self, prefix: &PrefixSample) -> Vec<f64> {
        let last = prefix.last_event();
        let mut v = vec![self.activities.code(&last.activity) as f64];
        if self.has_resources() {
            v.push(self.resources.code_opt(last.resource.as_deref()) as f64);
        }
        v
    }

    fn aggregation_values(&self, prefix: &PrefixSample, mode: AggregationMode) -> Vec<f64> {
        let mut slots = vec![0.0; self.activities.values().len()];
        for event in prefix.events() {
            let code = self.activities.code(&event.activity);
            if code != PAD {
                slots[code - 1] += 1.0;
            }
        }
        if mode == AggregationMode::Boolean {
            for s in &mut slots {
                *s = if *s > 0.0 { 1.0 } else { 0.0 };
            }
        }
        slots
    }

    fn index_values(&self, prefix: &PrefixSample, k: usize) -> Vec<f64> {
        let events = prefix.events();
        let tail = &events[events.len().saturating_sub(k)..];
        let pad = k - tail.len();
        let mut v = vec![PAD as f64; pad];
        v.extend(tail.iter().map(|e| self.activities.code(&e.activity) as f64));
        if self.has_resources() {
            v.extend(std::iter::repeat(PAD as f64).take(pad));
            v.extend(tail.iter().map(|e| self.resources.code_opt(e.resource.as_deref()) as f64));
        }
        v
    }

    fn values(&self, encoding: &IntraEncoding, prefix: &PrefixSample) -> Vec<f64> {
        match encoding {
            IntraEncoding::Static => self.static_values(prefix),
            IntraEncoding::LastState => self.last_state_values(prefix),
            IntraEncoding::Aggregation(mode) => self.aggregation_values(prefix, *mode),
            IntraEncoding::IndexBased { k } => self.index_values(prefix, *k),
        }
    }

    fn encode_with(&self, encoding: &IntraEncoding, prefix: &PrefixSample) -> FeatureVector {
        FeatureVector {
            values: self.values(encoding, prefix),
            schema: self.schema(encoding),
        }
    }

    /// One ordinal feature per selected case attribute; missing values are PAD.
    pub fn encode_static(&self, prefix: &PrefixSample) -> FeatureVector {
        self.encode_with(&IntraEncoding::Static, prefix)
    }

    /// Code of the last activity (and last resource when resources exist).
    pub fn encode_last_state(&self, prefix: &PrefixSample) -> FeatureVector {
        self.encode_with(&IntraEncoding::LastState, prefix)
    }

    pub fn encode_aggregation(&self, prefix: &PrefixSample, mode: AggregationMode) -> FeatureVector {
        self.encode_with(&IntraEncoding::Aggregation(mode), prefix)
    }

    /// Codes of the last `k` activities, oldest first, left-padded with PAD.
    /// With resources, a parallel block of `k` resource codes follows.
    pub fn encode_index_based(&self, prefix: &PrefixSample, k: usize) -> Result<FeatureVector> {
        if k == 0 {
            return Err(Error::config("index-based encoding needs k >= 1"));
        }
        Ok(self.encode_with(&IntraEncoding::IndexBased { k }, prefix))
    }
}

/// An encoding bound to a fitted context, with its schema computed once.
#[derive(Clone, Debug)]
pub struct IntraEncoder {
    encoding: IntraEncoding,
    context: EncodingContext,
    schema: Schema,
}

impl IntraEncoder {
    pub fn new(encoding: IntraEncoding, context: EncodingContext) -> Result<Self> {
        if let IntraEncoding::IndexBased { k: 0 } = encoding {
            return Err(Error::config("index-based encoding needs k >= 1"));
        }
        let schema = context.schema(&encoding);
        Ok(IntraEncoder {
            encoding,
            context,
            schema,
        })
    }

    pub fn context(&self) -> &EncodingContext {
        &self.context
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn encode(&self, prefix: &PrefixSample) -> FeatureVector {
        FeatureVector {
            values: self.context.values(&self.encoding, prefix),
            schema: Arc::clone(&self.schema),
        }
    }
}

/// Per-feature min/max learned on training data, plus the target interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub schema: Vec<String>,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

pub fn fit_scaler(train: &[FeatureVector], target: (f64, f64)) -> Result<ScalingParams> {
    let first = train
        .first()
        .ok_or_else(|| Error::config("cannot fit a scaler on zero samples"))?;
    let (lo, hi) = target;
    if !(lo < hi) {
        return Err(Error::config(format!("invalid scaling interval [{lo}, {hi}]")));
    }
    let d = first.len();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for x in train {
        if x.len() != d {
            return Err(Error::Dimension {
                expected: d,
                actual: x.len(),
            });
        }
        for (j, &v) in x.values.iter().enumerate() {
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    Ok(ScalingParams {
        schema: first.schema.to_vec(),
        mins,
        maxs,
        lo,
        hi,
    })
}

/// Affine map into `[lo, hi]`; values outside the training range are clamped
/// and constant features map to the interval midpoint.
pub fn apply_scaler(x: &FeatureVector, params: &ScalingParams) -> Result<FeatureVector> {
    if x.len() != params.schema.len() || x.schema.iter().zip(&params.schema).any(|(a, b)| a != b) {
        return Err(Error::config(format!(
            "feature schema does not match scaler ({} vs {} features)",
            x.len(),
            params.schema.len()
        )));
    }
    let span = params.hi - params.lo;
    let values = x
        .values
        .iter()
        .zip(params.mins.iter().zip(&params.maxs))
        .map(|(&v, (&min, &max))| {
            if max > min {
                (params.lo + span * (v - min) / (max - min)).clamp(params.lo, params.hi)
            } else {
                params.lo + 0.5 * span
            }
        })
        .collect();
    Ok(FeatureVector {
        values,
        schema: Arc::clone(&x.schema),
    })
}

/// Writes a feature matrix as CSV: header = schema, label in the last column.
pub fn write_feature_csv<W: Write, L: fmt::Display>(
    rows: &[FeatureVector],
    labels: &[L],
    out: W,
) -> Result<()> {
    if rows.len() != labels.len() {
        return Err(Error::Dimension {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    let mut writer = csv::Writer::from_writer(out);
    if let Some(first) = rows.first() {
        let mut header: Vec<&str> = first.schema.iter().map(String::as_str).collect();
        header.push("label");
        writer.write_record(&header)?;
    }
    for (row, label) in rows.iter().zip(labels) {
        let mut record: Vec<String> = row.values.iter().map(|v| v.to_string()).collect();
        record.push(label.to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
