use std::collections::BTreeMap;

use quick_xml::events::{BytesStart, Event as XmlEvent};
use quick_xml::Reader;

use super::{parse_timestamp, Event, EventLog, Trace};
use crate::error::{Error, Result};

const CONCEPT_NAME: &str = "concept:name";
const TIMESTAMP: &str = "time:timestamp";
const RESOURCE: &str = "org:resource";

#[derive(Default)]
struct PendingEvent {
    activity: Option<String>,
    timestamp: Option<String>,
    resource: Option<String>,
}

#[derive(Default)]
struct PendingTrace {
    case_id: Option<String>,
    attributes: BTreeMap<String, String>,
    events: Vec<PendingEvent>,
}

fn line_of(bytes: &[u8], pos: usize) -> usize {
    bytes[..pos.min(bytes.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

/// Returns `(key, value)` of an XES attribute element.
fn key_value(e: &BytesStart<'_>, bytes: &[u8], pos: usize) -> Result<(Option<String>, Option<String>)> {
    let mut key = None;
    let mut value = None;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| Error::Xml {
            line: line_of(bytes, pos),
            message: err.to_string(),
        })?;
        let text = attr
            .unescape_value()
            .map_err(|err| Error::Xml {
                line: line_of(bytes, pos),
                message: err.to_string(),
            })?
            .into_owned();
        match attr.key.as_ref() {
            b"key" => key = Some(text),
            b"value" => value = Some(text),
            _ => {}
        }
    }
    Ok((key, value))
}

/// Parses an XES document. Only `concept:name`, `time:timestamp` and
/// `org:resource` are read from events; string attributes directly on a
/// trace (other than its `concept:name`, the case id) become case attributes.
pub fn parse_xes(bytes: &[u8]) -> Result<EventLog> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);

    // Names of the currently open elements.
    let mut stack: Vec<Vec<u8>> = Vec::new();
    let mut current_trace: Option<PendingTrace> = None;
    let mut current_event: Option<PendingEvent> = None;
    let mut traces = Vec::new();

    loop {
        let pos = reader.buffer_position() as usize;
        let event = reader.read_event().map_err(|err| Error::Xml {
            line: line_of(bytes, reader.buffer_position() as usize),
            message: err.to_string(),
        })?;
        match event {
            XmlEvent::Start(ref e) | XmlEvent::Empty(ref e) => {
                let is_empty = matches!(event, XmlEvent::Empty(_));
                let name = e.name().as_ref().to_vec();
                let parent = stack.last().map(Vec::as_slice);
                match name.as_slice() {
                    b"trace" if parent == Some(b"log") => {
                        current_trace = Some(PendingTrace::default());
                    }
                    b"event" if parent == Some(b"trace") => {
                        current_event = Some(PendingEvent::default());
                    }
                    _ if parent == Some(b"event") => {
                        if let Some(ev) = current_event.as_mut() {
                            let (key, value) = key_value(e, bytes, pos)?;
                            match key.as_deref() {
                                Some(CONCEPT_NAME) => ev.activity = value,
                                Some(TIMESTAMP) => ev.timestamp = value,
                                Some(RESOURCE) => ev.resource = value,
                                _ => {}
                            }
                        }
                    }
                    _ if parent == Some(b"trace") => {
                        if let Some(tr) = current_trace.as_mut() {
                            let (key, value) = key_value(e, bytes, pos)?;
                            match (key, value) {
                                (Some(k), Some(v)) if k == CONCEPT_NAME => tr.case_id = Some(v),
                                (Some(k), Some(v)) if name == b"string" => {
                                    tr.attributes.insert(k, v);
                                }
                                _ => {}
                            }
                        }
                    }
                    _ => {}
                }
                if is_empty {
                    close_element(&name, &mut current_trace, &mut current_event, &mut traces, &stack)?;
                } else {
                    stack.push(name);
                }
            }
            XmlEvent::End(ref e) => {
                let name = e.name().as_ref().to_vec();
                match stack.pop() {
                    Some(open) if open == name => {}
                    _ => {
                        return Err(Error::Xml {
                            line: line_of(bytes, pos),
                            message: format!(
                                "unexpected closing tag </{}>",
                                String::from_utf8_lossy(&name)
                            ),
                        })
                    }
                }
                close_element(&name, &mut current_trace, &mut current_event, &mut traces, &stack)?;
            }
            XmlEvent::Eof => break,
            _ => {}
        }
    }
    if let Some(open) = stack.last() {
        return Err(Error::Xml {
            line: line_of(bytes, bytes.len()),
            message: format!(
                "unexpected end of document inside <{}>",
                String::from_utf8_lossy(open)
            ),
        });
    }
    EventLog::from_traces(traces)
}

/// Finalizes a `trace` or `event` element. `stack` no longer contains it.
fn close_element(
    name: &[u8],
    current_trace: &mut Option<PendingTrace>,
    current_event: &mut Option<PendingEvent>,
    traces: &mut Vec<Trace>,
    stack: &[Vec<u8>],
) -> Result<()> {
    let parent = stack.last().map(Vec::as_slice);
    match name {
        b"event" if parent == Some(b"trace") => {
            if let (Some(ev), Some(tr)) = (current_event.take(), current_trace.as_mut()) {
                tr.events.push(ev);
            }
        }
        b"trace" if parent == Some(b"log") => {
            if let Some(tr) = current_trace.take() {
                let index = traces.len();
                traces.push(finish_trace(tr, index)?);
            }
        }
        _ => {}
    }
    Ok(())
}

fn finish_trace(pending: PendingTrace, index: usize) -> Result<Trace> {
    let case_id = pending
        .case_id
        .unwrap_or_else(|| format!("trace-{index}"));
    let location = format!("trace {case_id:?} (#{index})");
    let mut events = Vec::with_capacity(pending.events.len());
    for (i, ev) in pending.events.into_iter().enumerate() {
        let activity = ev
            .activity
            .filter(|a| !a.is_empty())
            .ok_or_else(|| Error::record(&location, format!("event {i} lacks {CONCEPT_NAME}")))?;
        let raw_ts = ev
            .timestamp
            .ok_or_else(|| Error::record(&location, format!("event {i} lacks {TIMESTAMP}")))?;
        let timestamp = parse_timestamp(&raw_ts).ok_or_else(|| {
            Error::record(&location, format!("event {i} has unparseable timestamp {raw_ts:?}"))
        })?;
        events.push(Event {
            case_id: case_id.clone(),
            activity,
            timestamp,
            resource: ev.resource.filter(|r| !r.is_empty()),
        });
    }
    Trace::new(case_id, pending.attributes, events)
}
