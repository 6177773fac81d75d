//! Event logs: parsing (XES, CSV), variant filtering, date slicing,
//! prefix extraction and cross-validation folds.

mod csv_io;
mod prefix;
pub(crate) mod stats;
pub mod synthetic;
mod xes;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, TimeZone, Utc};
use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{parse_csv, write_csv, ColumnMap};
pub use prefix::{
    build_prefix_log, make_cv_folds, stratified_indices, stratified_subsample, FoldSplit, Label,
    PrefixSample,
};
pub use stats::{log_statistics, LogStatistics};
pub use xes::parse_xes;

pub type Timestamp = DateTime<Utc>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub case_id: String,
    pub activity: String,
    pub timestamp: Timestamp,
    pub resource: Option<String>,
}

/// The events of one case, ascending by timestamp. Ties keep source order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    case_id: String,
    attributes: BTreeMap<String, String>,
    events: Vec<Event>,
}

impl Trace {
    pub fn new(
        case_id: impl Into<String>,
        attributes: BTreeMap<String, String>,
        mut events: Vec<Event>,
    ) -> Result<Self> {
        let case_id = case_id.into();
        for (i, event) in events.iter().enumerate() {
            if event.case_id != case_id {
                return Err(Error::record(
                    format!("trace {case_id:?}"),
                    format!("event {i} belongs to case {:?}", event.case_id),
                ));
            }
            if event.activity.is_empty() {
                return Err(Error::record(
                    format!("trace {case_id:?}"),
                    format!("event {i} has an empty activity name"),
                ));
            }
        }
        // `sort_by_key` is stable.
        events.sort_by_key(|e| e.timestamp);
        Ok(Trace {
            case_id,
            attributes,
            events,
        })
    }

    pub fn case_id(&self) -> &str {
        &self.case_id
    }

    /// Case-level (static) attributes.
    pub fn attributes(&self) -> &BTreeMap<String, String> {
        &self.attributes
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn variant(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.activity.as_str()).collect()
    }

    pub fn first_timestamp(&self) -> Option<Timestamp> {
        self.events.first().map(|e| e.timestamp)
    }

    pub fn last_timestamp(&self) -> Option<Timestamp> {
        self.events.last().map(|e| e.timestamp)
    }

    /// Last minus first timestamp; zero for empty or single-event traces.
    pub fn duration(&self) -> chrono::Duration {
        match (self.first_timestamp(), self.last_timestamp()) {
            (Some(a), Some(b)) => b - a,
            _ => chrono::Duration::zero(),
        }
    }
}

/// Which cases a date slice keeps. Cases are always kept whole.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseInclusion {
    /// The first event of the case lies in the range.
    #[default]
    FirstEvent,
    /// Every event of the case lies in the range.
    AllEvents,
    /// At least one event of the case lies in the range.
    AnyEvent,
}

/// An inclusive range of calendar days. Day boundaries are taken at `offset`
/// (UTC unless stated otherwise).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DateSlice {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub rule: CaseInclusion,
    pub offset: FixedOffset,
}

impl DateSlice {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::config(format!(
                "date range start {start} is after end {end}"
            )));
        }
        Ok(DateSlice {
            start,
            end,
            rule: CaseInclusion::FirstEvent,
            offset: FixedOffset::east_opt(0).expect("zero offset"),
        })
    }

    pub fn with_rule(mut self, rule: CaseInclusion) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_offset(mut self, offset: FixedOffset) -> Self {
        self.offset = offset;
        self
    }

    /// Half-open instant interval `[start 00:00, end+1 00:00)` at the slice offset.
    fn bounds(&self) -> (Timestamp, Timestamp) {
        let at_midnight = |d: NaiveDate| {
            self.offset
                .from_local_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight"))
                .single()
                .expect("fixed offsets are unambiguous")
                .with_timezone(&Utc)
        };
        let end_excl = self.end.succ_opt().unwrap_or(self.end);
        (at_midnight(self.start), at_midnight(end_excl))
    }

    fn contains(&self, ts: Timestamp) -> bool {
        let (lo, hi) = self.bounds();
        lo <= ts && ts < hi
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EventLog {
    traces: Vec<Arc<Trace>>,
    activity_vocab: Vec<String>,
    resource_vocab: Vec<String>,
}

impl EventLog {
    pub fn from_traces(traces: Vec<Trace>) -> Result<Self> {
        Self::from_shared(traces.into_iter().map(Arc::new).collect())
    }

    fn from_shared(traces: Vec<Arc<Trace>>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(traces.len());
        for trace in &traces {
            if !seen.insert(trace.case_id.as_str()) {
                return Err(Error::record(
                    format!("trace {:?}", trace.case_id),
                    "duplicate case id",
                ));
            }
        }
        let mut activities = BTreeSet::new();
        let mut resources = BTreeSet::new();
        for event in traces.iter().flat_map(|t| t.events.iter()) {
            activities.insert(event.activity.as_str());
            if let Some(r) = event.resource.as_deref().filter(|r| !r.is_empty()) {
                resources.insert(r);
            }
        }
        let activity_vocab = activities.into_iter().map(str::to_owned).collect();
        let resource_vocab = resources.into_iter().map(str::to_owned).collect();
        Ok(EventLog {
            traces,
            activity_vocab,
            resource_vocab,
        })
    }

    /// Subset of this log's traces; vocabularies are recomputed.
    fn retain(&self, mut keep: impl FnMut(&Trace) -> bool) -> EventLog {
        let traces = self
            .traces
            .iter()
            .filter(|t| keep(t))
            .cloned()
            .collect();
        // Case ids are unique in `self`, so any subset is valid.
        Self::from_shared(traces).expect("subset of a valid log")
    }

    /// Keeps the traces whose case id is in `case_ids`.
    pub fn select_cases(&self, case_ids: &HashSet<&str>) -> EventLog {
        self.retain(|t| case_ids.contains(t.case_id()))
    }

    pub fn traces(&self) -> &[Arc<Trace>] {
        &self.traces
    }

    pub fn activity_vocab(&self) -> &[String] {
        &self.activity_vocab
    }

    pub fn resource_vocab(&self) -> &[String] {
        &self.resource_vocab
    }

    pub fn num_cases(&self) -> usize {
        self.traces.len()
    }

    pub fn num_events(&self) -> usize {
        self.traces.iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn num_variants(&self) -> usize {
        self.traces
            .iter()
            .map(|t| t.variant())
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn filter_singleton_variants(&self) -> EventLog {
        let mut counts: HashMap<Vec<&str>, usize> = HashMap::new();
        for trace in &self.traces {
            *counts.entry(trace.variant()).or_default() += 1;
        }
        self.retain(|t| counts[&t.variant()] >= 2)
    }

    pub fn slice_date_range(&self, start: NaiveDate, end: NaiveDate) -> Result<EventLog> {
        Ok(self.slice(&DateSlice::new(start, end)?))
    }

    pub fn slice(&self, range: &DateSlice) -> EventLog {
        self.retain(|t| match range.rule {
            CaseInclusion::FirstEvent => t.first_timestamp().is_some_and(|ts| range.contains(ts)),
            CaseInclusion::AllEvents => {
                !t.is_empty() && t.events.iter().all(|e| range.contains(e.timestamp))
            }
            CaseInclusion::AnyEvent => t.events.iter().any(|e| range.contains(e.timestamp)),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    Xes,
    Csv,
}

impl LogFormat {
    /// Guesses the format from the file name (`.xes`, `.xes.gz`, `.csv`).
    pub fn from_path(path: &Path) -> Option<Self> {
        let name = path.file_name()?.to_str()?.to_ascii_lowercase();
        let name = name.strip_suffix(".gz").unwrap_or(&name);
        if name.ends_with(".xes") || name.ends_with(".xml") {
            Some(LogFormat::Xes)
        } else if name.ends_with(".csv") {
            Some(LogFormat::Csv)
        } else {
            None
        }
    }
}

/// Reads a log file, transparently decompressing gzip input.
pub fn read_log(path: &Path, format: Option<LogFormat>, columns: &ColumnMap) -> Result<EventLog> {
    let format = format.or_else(|| LogFormat::from_path(path)).ok_or_else(|| {
        Error::config(format!(
            "cannot infer log format of {}; pass it explicitly",
            path.display()
        ))
    })?;
    let raw = fs::read(path)?;
    let bytes = if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::with_capacity(raw.len() * 8);
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        out
    } else {
        raw
    };
    match format {
        LogFormat::Xes => parse_xes(&bytes),
        LogFormat::Csv => parse_csv(&bytes, columns),
    }
}

/// Parses an ISO-8601 / RFC 3339 timestamp. Values without zone information
/// are taken as UTC.
pub fn parse_timestamp(raw: &str) -> Option<Timestamp> {
    let raw = raw.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%:z", "%Y-%m-%d %H:%M:%S%.f%:z", "%Y-%m-%dT%H:%M:%S%.f%z"] {
        if let Ok(dt) = DateTime::parse_from_str(raw, fmt) {
            return Some(dt.with_timezone(&Utc));
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(naive.and_utc());
        }
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
}

/// Parses `YYYY-MM-DD` or `YYYYMMDD`.
pub fn parse_date(raw: &str) -> Result<NaiveDate> {
    let raw = raw.trim();
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(raw, "%Y%m%d"))
        .map_err(|_| Error::config(format!("invalid date {raw:?}; expected YYYY-MM-DD")))
}
