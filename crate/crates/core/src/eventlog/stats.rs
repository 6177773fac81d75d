use serde::{Deserialize, Serialize};

use super::EventLog;

const DAY: f64 = 86_400.0;
const WEEK: f64 = 7.0 * DAY;

/// Flat statistics record; JSON keys follow the usual dataset-table columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogStatistics {
    #[serde(rename = "no. cases")]
    pub cases: usize,
    #[serde(rename = "no. events")]
    pub events: usize,
    #[serde(rename = "no. activities")]
    pub activities: usize,
    #[serde(rename = "no. variants")]
    pub variants: usize,
    #[serde(rename = "median case time")]
    pub median_case_time: String,
    pub median_case_seconds: f64,
}

impl LogStatistics {
    pub fn median_case_days(&self) -> f64 {
        self.median_case_seconds / DAY
    }

    pub fn median_case_weeks(&self) -> f64 {
        self.median_case_seconds / WEEK
    }
}

/// Median of `values`; averages the two middle elements for even lengths.
pub(crate) fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Median over cases of (last - first timestamp), in seconds.
pub fn median_case_seconds(log: &EventLog) -> f64 {
    let mut durations: Vec<f64> = log
        .traces()
        .iter()
        .map(|t| t.duration().num_milliseconds() as f64 / 1000.0)
        .collect();
    median(&mut durations)
}

fn format_duration(seconds: f64) -> String {
    // Durations under four weeks read better in days.
    if seconds < 4.0 * WEEK {
        format!("{:.1}d", seconds / DAY)
    } else {
        format!("{:.1}w", seconds / WEEK)
    }
}

pub fn log_statistics(log: &EventLog) -> LogStatistics {
    let median_case_seconds = median_case_seconds(log);
    LogStatistics {
        cases: log.num_cases(),
        events: log.num_events(),
        activities: log.activity_vocab().len(),
        variants: log.num_variants(),
        median_case_time: format_duration(median_case_seconds),
        median_case_seconds,
    }
}
