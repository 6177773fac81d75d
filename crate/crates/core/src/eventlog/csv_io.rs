use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use chrono::SecondsFormat;
use serde::{Deserialize, Serialize};

use super::{parse_timestamp, Event, EventLog, Trace};
use crate::error::{Error, Result};

/// Maps CSV header names onto event fields.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub case_id: String,
    pub activity: String,
    pub timestamp: String,
    pub resource: Option<String>,
    /// Columns whose header starts with this prefix are read as case
    /// attributes (name without the prefix; the first row of a case wins).
    pub case_attribute_prefix: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            case_id: "case_id".into(),
            activity: "activity".into(),
            timestamp: "timestamp".into(),
            resource: Some("resource".into()),
            case_attribute_prefix: Some("case:".into()),
        }
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

/// Parses a CSV event log with a header row. A mapped resource column that
/// is absent from the header is treated as "no resources".
pub fn parse_csv(bytes: &[u8], columns: &ColumnMap) -> Result<EventLog> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers = reader.headers()?.clone();
    let require = |name: &str| {
        column(&headers, name)
            .ok_or_else(|| Error::config(format!("CSV header lacks mapped column {name:?}")))
    };
    let case_col = require(&columns.case_id)?;
    let act_col = require(&columns.activity)?;
    let ts_col = require(&columns.timestamp)?;
    let res_col = columns.resource.as_deref().and_then(|r| column(&headers, r));
    let attr_cols: Vec<(usize, String)> = match columns.case_attribute_prefix.as_deref() {
        Some(prefix) if !prefix.is_empty() => headers
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.strip_prefix(prefix).map(|name| (i, name.to_owned())))
            .collect(),
        _ => Vec::new(),
    };

    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, (BTreeMap<String, String>, Vec<Event>)> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        // Row 1 is the header.
        let row = i + 2;
        let record = record?;
        let field = |idx: usize| record.get(idx).unwrap_or("").trim();
        let case_id = field(case_col).to_owned();
        let activity = field(act_col).to_owned();
        if case_id.is_empty() || activity.is_empty() {
            return Err(Error::record(format!("row {row}"), "empty case id or activity"));
        }
        let raw_ts = field(ts_col);
        let timestamp = parse_timestamp(raw_ts).ok_or_else(|| {
            Error::record(format!("row {row}"), format!("unparseable timestamp {raw_ts:?}"))
        })?;
        let resource = res_col
            .map(field)
            .filter(|r| !r.is_empty())
            .map(str::to_owned);
        let entry = grouped.entry(case_id.clone()).or_insert_with(|| {
            order.push(case_id.clone());
            let attrs = attr_cols
                .iter()
                .filter(|(idx, _)| !field(*idx).is_empty())
                .map(|(idx, name)| (name.clone(), field(*idx).to_owned()))
                .collect();
            (attrs, Vec::new())
        });
        entry.1.push(Event {
            case_id,
            activity,
            timestamp,
            resource,
        });
    }

    let traces = order
        .into_iter()
        .map(|case| {
            let (attrs, events) = grouped.remove(&case).expect("grouped case");
            Trace::new(case, attrs, events)
        })
        .collect::<Result<Vec<_>>>()?;
    EventLog::from_traces(traces)
}

/// Writes the log in the default column layout: `case_id, activity,
/// timestamp, resource` plus one `case:<name>` column per case attribute.
/// Timestamps are RFC 3339 in UTC.
pub fn write_csv<W: Write>(log: &EventLog, out: W) -> Result<()> {
    let attr_names: BTreeSet<&str> = log
        .traces()
        .iter()
        .flat_map(|t| t.attributes().keys().map(String::as_str))
        .collect();
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["case_id".to_owned(), "activity".into(), "timestamp".into(), "resource".into()];
    header.extend(attr_names.iter().map(|n| format!("case:{n}")));
    writer.write_record(&header)?;
    for trace in log.traces() {
        for event in trace.events() {
            let mut row = vec![
                event.case_id.clone(),
                event.activity.clone(),
                event.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
                event.resource.clone().unwrap_or_default(),
            ];
            row.extend(
                attr_names
                    .iter()
                    .map(|n| trace.attributes().get(*n).cloned().unwrap_or_default()),
            );
            writer.write_record(&row)?;
        }
    }
    writer.flush()?;
    Ok(())
}
