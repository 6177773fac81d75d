//! Inter-case features over a backward-looking peer window, and their
//! composition with intra-case vectors.
//!
//! The window of an anchor event at time `t` covers `[t - width, t]`
//! (both ends inclusive) over all cases. Events of the anchor's own case
//! that come after the anchor are never visible, even when they share its
//! timestamp.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::encoding::{schema, FeatureVector, Vocabulary, PAD};
use crate::error::{Error, Result};
use crate::eventlog::{EventLog, PrefixSample, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterFeature {
    PeerCases,
    PeerAct,
    ResCount,
    AvgDelay,
    FreqAct,
    TopRes,
    Batch,
}

impl InterFeature {
    pub const ALL: [InterFeature; 7] = [
        InterFeature::PeerCases,
        InterFeature::PeerAct,
        InterFeature::ResCount,
        InterFeature::AvgDelay,
        InterFeature::FreqAct,
        InterFeature::TopRes,
        InterFeature::Batch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InterFeature::PeerCases => "peer_cases",
            InterFeature::PeerAct => "peer_act",
            InterFeature::ResCount => "res_count",
            InterFeature::AvgDelay => "avg_delay",
            InterFeature::FreqAct => "freq_act",
            InterFeature::TopRes => "top_res",
            InterFeature::Batch => "batch",
        }
    }
}

impl fmt::Display for InterFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InterFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InterFeature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown inter-case feature {s:?}")))
    }
}

/// Maximum number of inter-case features in one composition.
pub const MAX_INTER_FEATURES: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeerWindow {
    width_ms: i64,
}

impl PeerWindow {
    pub fn new(width: Duration) -> Result<Self> {
        let width_ms = width.num_milliseconds();
        if width_ms <= 0 {
            return Err(Error::config(format!("peer window width must be positive, got {width}")));
        }
        Ok(PeerWindow { width_ms })
    }

    pub fn from_seconds(seconds: f64) -> Result<Self> {
        if !seconds.is_finite() {
            return Err(Error::config("peer window width must be finite"));
        }
        Self::new(Duration::milliseconds((seconds * 1000.0).round() as i64))
    }

    pub fn width_ms(&self) -> i64 {
        self.width_ms
    }
}

fn millis(trace: &Trace, pos: usize) -> i64 {
    trace.events()[pos].timestamp.timestamp_millis()
}

fn seconds_between(from_ms: i64, to_ms: i64) -> f64 {
    (to_ms - from_ms) as f64 / 1000.0
}

/// Mean inter-event duration (seconds) per directly-follows pair.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionStats {
    means: HashMap<String, HashMap<String, f64>>,
}

impl TransitionStats {
    pub fn fit<'a>(traces: impl IntoIterator<Item = &'a Trace>) -> Self {
        let mut sums: HashMap<(&str, &str), (f64, usize)> = HashMap::new();
        for trace in traces {
            for pos in 1..trace.len() {
                let key = (
                    trace.events()[pos - 1].activity.as_str(),
                    trace.events()[pos].activity.as_str(),
                );
                let entry = sums.entry(key).or_default();
                entry.0 += seconds_between(millis(trace, pos - 1), millis(trace, pos));
                entry.1 += 1;
            }
        }
        let mut means: HashMap<String, HashMap<String, f64>> = HashMap::new();
        for ((a, b), (sum, n)) in sums {
            means
                .entry(a.to_owned())
                .or_default()
                .insert(b.to_owned(), sum / n as f64);
        }
        TransitionStats { means }
    }

    pub fn mean(&self, from: &str, to: &str) -> Option<f64> {
        self.means.get(from)?.get(to).copied()
    }

    pub fn insert(&mut self, from: &str, to: &str, mean_seconds: f64) {
        self.means
            .entry(from.to_owned())
            .or_default()
            .insert(to.to_owned(), mean_seconds);
    }
}

/// Per-activity fraction of occurrences that fall into a burst.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    scores: HashMap<String, f64>,
}

impl BatchStats {
    pub fn score(&self, activity: &str) -> f64 {
        self.scores.get(activity).copied().unwrap_or(0.0)
    }

    pub fn insert(&mut self, activity: &str, score: f64) {
        self.scores.insert(activity.to_owned(), score.clamp(0.0, 1.0));
    }
}

/// An occurrence of an activity is in a burst when some `epsilon`-wide
/// closed interval contains it together with occurrences of the same
/// activity from at least `min_burst` distinct cases.
pub fn fit_batch_stats<'a>(
    traces: impl IntoIterator<Item = &'a Trace>,
    epsilon: Duration,
    min_burst: usize,
) -> Result<BatchStats> {
    let eps = epsilon.num_milliseconds();
    if eps <= 0 {
        return Err(Error::config("batch epsilon must be positive"));
    }
    if min_burst < 2 {
        return Err(Error::config("min_burst must be at least 2"));
    }
    let mut by_activity: HashMap<&str, Vec<(i64, usize)>> = HashMap::new();
    for (case, trace) in traces.into_iter().enumerate() {
        for event in trace.events() {
            by_activity
                .entry(event.activity.as_str())
                .or_default()
                .push((event.timestamp.timestamp_millis(), case));
        }
    }
    let mut scores = HashMap::with_capacity(by_activity.len());
    for (activity, mut occ) in by_activity {
        occ.sort_unstable();
        let n = occ.len();
        // Any qualifying interval can be shifted right until it starts at an
        // occurrence, so it suffices to test intervals [ts_i, ts_i + eps].
        let mut cover = vec![0i64; n + 1];
        let mut cases: HashMap<usize, usize> = HashMap::new();
        let mut end = 0;
        for start in 0..n {
            while end < n && occ[end].0 <= occ[start].0 + eps {
                *cases.entry(occ[end].1).or_default() += 1;
                end += 1;
            }
            if cases.len() >= min_burst {
                cover[start] += 1;
                cover[end] -= 1;
            }
            let c = cases.get_mut(&occ[start].1).expect("case counted");
            *c -= 1;
            if *c == 0 {
                cases.remove(&occ[start].1);
            }
        }
        let mut running = 0;
        let mut in_burst = 0usize;
        for delta in &cover[..n] {
            running += delta;
            if running > 0 {
                in_burst += 1;
            }
        }
        scores.insert(activity.to_owned(), in_burst as f64 / n as f64);
    }
    Ok(BatchStats { scores })
}

/// Directly-follows successors observed in training traces.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuccessorMap {
    successors: HashMap<String, BTreeSet<String>>,
}

impl SuccessorMap {
    pub fn fit<'a>(traces: impl IntoIterator<Item = &'a Trace>) -> Self {
        let mut successors: HashMap<String, BTreeSet<String>> = HashMap::new();
        for trace in traces {
            for pair in trace.events().windows(2) {
                successors
                    .entry(pair[0].activity.clone())
                    .or_default()
                    .insert(pair[1].activity.clone());
            }
        }
        SuccessorMap { successors }
    }

    pub fn insert(&mut self, from: &str, to: &str) {
        self.successors
            .entry(from.to_owned())
            .or_default()
            .insert(to.to_owned());
    }

    pub fn successors(&self, activity: &str) -> impl Iterator<Item = &str> {
        self.successors
            .get(activity)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }
}

/// Largest burst score among the training successors of `last_activity`;
/// 0 when it has none.
pub fn batch_indicator(last_activity: &str, stats: &BatchStats, successors: &SuccessorMap) -> f64 {
    successors
        .successors(last_activity)
        .map(|b| stats.score(b))
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug)]
struct IndexedEvent {
    ts: i64,
    case: u32,
    pos: u32,
    activity: u32,
    /// `u32::MAX` when the event has no resource.
    resource: u32,
}

const NO_RESOURCE: u32 = u32::MAX;

/// The event being encoded: position `pos` of case `case`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Anchor {
    case: u32,
    pos: u32,
    ts: i64,
}

/// All events of a log sorted by time, for window lookups by binary search.
#[derive(Debug)]
pub struct EventIndex {
    log: EventLog,
    events: Vec<IndexedEvent>,
    case_lookup: HashMap<String, u32>,
    activity_names: Vec<String>,
    resource_names: Vec<String>,
}

impl EventIndex {
    pub fn new(log: &EventLog) -> Self {
        let activity_names = log.activity_vocab().to_vec();
        let resource_names = log.resource_vocab().to_vec();
        let act_id: HashMap<&str, u32> = activity_names
            .iter()
            .enumerate()
            .map(|(i, a)| (a.as_str(), i as u32))
            .collect();
        let res_id: HashMap<&str, u32> = resource_names
            .iter()
            .enumerate()
            .map(|(i, r)| (r.as_str(), i as u32))
            .collect();
        let mut events = Vec::with_capacity(log.num_events());
        let mut case_lookup = HashMap::with_capacity(log.num_cases());
        for (case, trace) in log.traces().iter().enumerate() {
            case_lookup.insert(trace.case_id().to_owned(), case as u32);
            for (pos, e) in trace.events().iter().enumerate() {
                events.push(IndexedEvent {
                    ts: e.timestamp.timestamp_millis(),
                    case: case as u32,
                    pos: pos as u32,
                    activity: act_id[e.activity.as_str()],
                    resource: e
                        .resource
                        .as_deref()
                        .and_then(|r| res_id.get(r).copied())
                        .unwrap_or(NO_RESOURCE),
                });
            }
        }
        events.sort_unstable_by_key(|e| (e.ts, e.case, e.pos));
        EventIndex {
            log: log.clone(),
            events,
            case_lookup,
            activity_names,
            resource_names,
        }
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Anchor at the last event of `prefix`, which must belong to the indexed log.
    pub fn anchor(&self, prefix: &PrefixSample) -> Result<Anchor> {
        self.anchor_at(prefix.case_id(), prefix.len() - 1)
    }

    pub fn anchor_at(&self, case_id: &str, pos: usize) -> Result<Anchor> {
        let case = *self
            .case_lookup
            .get(case_id)
            .ok_or_else(|| Error::config(format!("case {case_id:?} is not in the indexed log")))?;
        let trace = &self.log.traces()[case as usize];
        if pos >= trace.len() {
            return Err(Error::config(format!("case {case_id:?} has no event {pos}")));
        }
        Ok(Anchor {
            case,
            pos: pos as u32,
            ts: millis(trace, pos),
        })
    }

    fn window(&self, anchor: Anchor, window: PeerWindow) -> impl Iterator<Item = &IndexedEvent> {
        let lo = self.events.partition_point(|e| e.ts < anchor.ts - window.width_ms);
        let hi = self.events.partition_point(|e| e.ts <= anchor.ts);
        self.events[lo..hi]
            .iter()
            .filter(move |e| !(e.case == anchor.case && e.pos > anchor.pos))
    }

    /// Distinct cases with an event in the window, anchor case included.
    pub fn peer_cases(&self, anchor: Anchor, window: PeerWindow) -> usize {
        let mut cases: Vec<u32> = self.window(anchor, window).map(|e| e.case).collect();
        cases.sort_unstable();
        cases.dedup();
        cases.len()
    }

    /// Events of all cases in the window.
    pub fn peer_act(&self, anchor: Anchor, window: PeerWindow) -> usize {
        self.window(anchor, window).count()
    }

    /// Distinct resources active in the window.
    pub fn res_count(&self, anchor: Anchor, window: PeerWindow) -> usize {
        self.window(anchor, window)
            .filter(|e| e.resource != NO_RESOURCE)
            .map(|e| e.resource)
            .collect::<HashSet<_>>()
            .len()
    }

    /// Mean of observed/expected duration over same-case transitions that
    /// end inside the window and have a positive training mean; 1.0 when
    /// there are none.
    pub fn avg_delay(&self, anchor: Anchor, window: PeerWindow, stats: &TransitionStats) -> f64 {
        let mut ratios: Vec<(u32, u32, f64)> = Vec::new();
        for e in self.window(anchor, window).filter(|e| e.pos > 0) {
            let trace = &self.log.traces()[e.case as usize];
            let prev = &trace.events()[e.pos as usize - 1];
            let Some(mean) = stats.mean(&prev.activity, &self.activity_names[e.activity as usize]) else {
                continue;
            };
            if mean > 0.0 {
                let observed = seconds_between(prev.timestamp.timestamp_millis(), e.ts);
                ratios.push((e.case, e.pos, observed / mean));
            }
        }
        if ratios.is_empty() {
            return 1.0;
        }
        // Summation in log order keeps results independent of the time index.
        ratios.sort_unstable_by_key(|&(c, p, _)| (c, p));
        ratios.iter().map(|r| r.2).sum::<f64>() / ratios.len() as f64
    }

    /// Vocabulary code of the most frequent activity in the window; ties go
    /// to the smaller code.
    pub fn freq_act(&self, anchor: Anchor, window: PeerWindow, vocab: &Vocabulary) -> usize {
        let codes: Vec<usize> = self
            .activity_names
            .iter()
            .map(|a| vocab.code(a))
            .collect();
        most_frequent(self.window(anchor, window).map(|e| codes[e.activity as usize]), vocab.len())
    }

    /// Vocabulary code of the most used resource in the window; 0 when none.
    pub fn top_res(&self, anchor: Anchor, window: PeerWindow, vocab: &Vocabulary) -> usize {
        let codes: Vec<usize> = self
            .resource_names
            .iter()
            .map(|r| vocab.code(r))
            .collect();
        most_frequent(
            self.window(anchor, window)
                .filter(|e| e.resource != NO_RESOURCE)
                .map(|e| codes[e.resource as usize]),
            vocab.len(),
        )
    }

    pub fn activity_at(&self, anchor: Anchor) -> &str {
        &self.log.traces()[anchor.case as usize].events()[anchor.pos as usize].activity
    }
}

fn most_frequent(codes: impl Iterator<Item = usize>, n_codes: usize) -> usize {
    let mut counts = vec![0usize; n_codes.max(1)];
    let mut any = false;
    for c in codes {
        counts[c] += 1;
        any = true;
    }
    if !any {
        return PAD;
    }
    let mut best = 0;
    for (code, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = code;
        }
    }
    best
}

/// Everything fitted on training folds that inter-case features depend on.
#[derive(Clone, Debug, Default)]
pub struct InterCaseStats {
    pub transitions: TransitionStats,
    pub batch: BatchStats,
    pub successors: SuccessorMap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub epsilon_seconds: f64,
    pub min_burst: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            epsilon_seconds: 86_400.0,
            min_burst: 3,
        }
    }
}

impl InterCaseStats {
    pub fn fit<'a>(traces: &[&'a Trace], batch: BatchConfig) -> Result<Self> {
        let epsilon = Duration::milliseconds((batch.epsilon_seconds * 1000.0).round() as i64);
        Ok(InterCaseStats {
            transitions: TransitionStats::fit(traces.iter().copied()),
            batch: fit_batch_stats(traces.iter().copied(), epsilon, batch.min_burst)?,
            successors: SuccessorMap::fit(traces.iter().copied()),
        })
    }
}

/// Intra-case features (first block) followed by inter-case features.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposedFeatureVector {
    pub intra: FeatureVector,
    pub inter: FeatureVector,
}

impl ComposedFeatureVector {
    pub fn len(&self) -> usize {
        self.intra.len() + self.inter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn combined(&self) -> FeatureVector {
        let mut values = self.intra.values.clone();
        values.extend_from_slice(&self.inter.values);
        let names = self
            .intra
            .schema
            .iter()
            .chain(self.inter.schema.iter())
            .cloned();
        FeatureVector {
            values,
            schema: schema(names),
        }
    }
}

/// Computes a fixed selection of inter-case features for prefixes of the
/// indexed log.
#[derive(Debug, Clone)]
pub struct InterCaseEncoder {
    index: Arc<EventIndex>,
    stats: Arc<InterCaseStats>,
    activities: Vocabulary,
    resources: Vocabulary,
    features: Vec<InterFeature>,
    window: PeerWindow,
    schema: crate::encoding::Schema,
}

impl InterCaseEncoder {
    pub fn new(
        index: Arc<EventIndex>,
        stats: Arc<InterCaseStats>,
        activities: Vocabulary,
        resources: Vocabulary,
        features: &[InterFeature],
        window: PeerWindow,
    ) -> Result<Self> {
        if features.len() > MAX_INTER_FEATURES {
            return Err(Error::config(format!(
                "at most {MAX_INTER_FEATURES} inter-case features per composition, got {}",
                features.len()
            )));
        }
        let unique: HashSet<_> = features.iter().collect();
        if unique.len() != features.len() {
            return Err(Error::config("duplicate inter-case feature"));
        }
        let schema = schema(features.iter().map(|f| f.name().to_owned()));
        Ok(InterCaseEncoder {
            index,
            stats,
            activities,
            resources,
            features: features.to_vec(),
            window,
            schema,
        })
    }

    pub fn features(&self) -> &[InterFeature] {
        &self.features
    }

    pub fn feature(&self, feature: InterFeature, anchor: Anchor) -> f64 {
        let (index, w) = (&self.index, self.window);
        match feature {
            InterFeature::PeerCases => index.peer_cases(anchor, w) as f64,
            InterFeature::PeerAct => index.peer_act(anchor, w) as f64,
            InterFeature::ResCount => index.res_count(anchor, w) as f64,
            InterFeature::AvgDelay => index.avg_delay(anchor, w, &self.stats.transitions),
            InterFeature::FreqAct => index.freq_act(anchor, w, &self.activities) as f64,
            InterFeature::TopRes => index.top_res(anchor, w, &self.resources) as f64,
            InterFeature::Batch => batch_indicator(
                index.activity_at(anchor),
                &self.stats.batch,
                &self.stats.successors,
            ),
        }
    }

    pub fn encode(&self, prefix: &PrefixSample) -> Result<FeatureVector> {
        let anchor = self.index.anchor(prefix)?;
        Ok(FeatureVector {
            values: self.features.iter().map(|&f| self.feature(f, anchor)).collect(),
            schema: Arc::clone(&self.schema),
        })
    }

    pub fn compose(&self, intra: FeatureVector, prefix: &PrefixSample) -> Result<ComposedFeatureVector> {
        Ok(ComposedFeatureVector {
            intra,
            inter: self.encode(prefix)?,
        })
    }
}
