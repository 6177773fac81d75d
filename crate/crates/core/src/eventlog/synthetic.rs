//! Seeded generator for a small fine-collection style process with an
//! inter-case dependency: whether a notified fine is paid or penalised
//! depends on how many cases were opened recently. Used for demos, tests and
//! the desk-scale benchmarks.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration};
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Event, EventLog, Timestamp, Trace};

const DAY: i64 = 86_400;

#[derive(Clone, Debug)]
pub struct FineProcess {
    pub cases: usize,
    pub seed: u64,
    /// Arrivals within this many days count towards the load.
    pub load_window_days: i64,
    /// Load above which notified fines are mostly penalised.
    pub load_threshold: usize,
    /// Credit collection is batched on multiples of this many days.
    pub collection_cycle_days: i64,
}

impl Default for FineProcess {
    fn default() -> Self {
        FineProcess {
            cases: 300,
            seed: 1,
            load_window_days: 30,
            load_threshold: 45,
            collection_cycle_days: 90,
        }
    }
}

impl FineProcess {
    pub fn new(cases: usize, seed: u64) -> Self {
        FineProcess {
            cases,
            seed,
            ..Default::default()
        }
    }

    pub fn generate(&self) -> EventLog {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let origin = DateTime::from_timestamp(1_041_379_200, 0).expect("2003-01-01"); // 2003-01-01
        let day = |d: i64| -> Timestamp { origin + Duration::seconds(d * DAY) };

        // Alternating busy and quiet 30-day regimes.
        let mut arrivals = Vec::with_capacity(self.cases);
        let mut t = 0.0f64;
        for _ in 0..self.cases {
            let busy = ((t / 30.0) as i64) % 2 == 0;
            let mean_gap = if busy { 0.35 } else { 2.0 };
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            t += -mean_gap * u.ln();
            arrivals.push(t.floor() as i64);
        }
        let load_at = |d: i64| {
            let lo = arrivals.partition_point(|&a| a < d - self.load_window_days);
            let hi = arrivals.partition_point(|&a| a <= d);
            hi - lo
        };

        let officers = ["R1", "R2", "R3", "R4"];
        let short = Uniform::new_inclusive(1i64, 20);
        let mid = Uniform::new_inclusive(5i64, 40);
        let mut traces = Vec::with_capacity(self.cases);
        for (i, &start) in arrivals.iter().enumerate() {
            let case = format!("F{i:05}");
            let mut events = Vec::new();
            let mut push = |act: &str, d: i64, res: Option<&str>| {
                events.push(Event {
                    case_id: case.clone(),
                    activity: act.to_owned(),
                    timestamp: day(d),
                    resource: res.map(str::to_owned),
                });
            };
            let officer = officers[rng.gen_range(0..officers.len())];
            push("Create Fine", start, Some(officer));
            if rng.gen_bool(0.3) {
                push("Payment", start + short.sample(&mut rng), None);
            } else {
                let sent = start + mid.sample(&mut rng);
                push("Send Fine", sent, None);
                let notified = sent + short.sample(&mut rng);
                push("Insert Fine Notification", notified, None);
                let busy = load_at(notified) > self.load_threshold;
                let penalise = rng.gen_bool(if busy { 0.85 } else { 0.15 });
                if !penalise {
                    push("Payment", notified + short.sample(&mut rng), None);
                } else {
                    let penalty = notified + 60;
                    push("Add penalty", penalty, None);
                    if rng.gen_bool(0.4) {
                        push("Payment", penalty + short.sample(&mut rng), None);
                    } else {
                        let cycle = self.collection_cycle_days;
                        let collect = (penalty / cycle + 1) * cycle;
                        push("Send for Credit Collection", collect, None);
                    }
                }
            }
            traces.push(Trace::new(case, BTreeMap::new(), events).expect("well-formed trace"));
        }
        EventLog::from_traces(traces).expect("unique case ids")
    }
}
