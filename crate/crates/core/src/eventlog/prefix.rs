use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Event, EventLog, Trace};
use crate::error::{Error, Result};

/// Next-activity label. `End` marks the final prefix of a completed case.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Activity(String),
    End,
}

impl Label {
    pub const END: &'static str = "END";

    pub fn from_name(name: &str) -> Label {
        if name == Self::END {
            Label::End
        } else {
            Label::Activity(name.to_owned())
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Label::Activity(a) => a,
            Label::End => Self::END,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The first `len` events of a case together with the activity that follows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixSample {
    trace: Arc<Trace>,
    len: usize,
    label: Label,
}

impl PrefixSample {
    pub fn case_id(&self) -> &str {
        self.trace.case_id()
    }

    pub fn trace(&self) -> &Arc<Trace> {
        &self.trace
    }

    pub fn events(&self) -> &[Event] {
        &self.trace.events()[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn last_event(&self) -> &Event {
        &self.trace.events()[self.len - 1]
    }

    pub fn label(&self) -> &Label {
        &self.label
    }
}

/// Emits prefixes of length `min_prefix..=min(n, max_prefix)` for every trace.
pub fn build_prefix_log(
    log: &EventLog,
    min_prefix: usize,
    max_prefix: Option<usize>,
) -> Result<Vec<PrefixSample>> {
    if min_prefix == 0 {
        return Err(Error::config("min_prefix must be at least 1"));
    }
    let mut samples = Vec::new();
    for trace in log.traces() {
        let n = trace.len();
        let upper = max_prefix.map_or(n, |m| m.min(n));
        for len in min_prefix..=upper {
            let label = match trace.events().get(len) {
                Some(next) => Label::Activity(next.activity.clone()),
                None => Label::End,
            };
            samples.push(PrefixSample {
                trace: Arc::clone(trace),
                len,
                label,
            });
        }
    }
    Ok(samples)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("sampling fraction {fraction} is not in (0, 1]")))
    }
}

/// Per-class sampling without replacement. Each class keeps the floor or
/// ceiling of `fraction * size` members (at least one), allocated by largest
/// remainder so the total is `round(fraction * n)` unless the one-member floor
/// forces more. Returned indices are ascending.
pub fn stratified_indices<L: Ord>(labels: &[L], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    check_fraction(fraction)?;
    let mut classes: BTreeMap<&L, Vec<usize>> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        classes.entry(label).or_default().push(i);
    }
    let quotas: Vec<f64> = classes.values().map(|m| fraction * m.len() as f64).collect();
    let mut keeps: Vec<usize> = classes
        .values()
        .zip(&quotas)
        .map(|(m, q)| (q.floor() as usize).clamp(1, m.len()))
        .collect();
    let target = (fraction * labels.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..keeps.len()).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())));
    let sizes: Vec<usize> = classes.values().map(Vec::len).collect();
    for c in order {
        if keeps.iter().sum::<usize>() >= target {
            break;
        }
        if (keeps[c] as f64) < quotas[c] && keeps[c] < sizes[c] {
            keeps[c] += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::new();
    for (members, keep) in classes.values_mut().zip(keeps) {
        let (chosen, _) = members.partial_shuffle(&mut rng, keep);
        picked.extend_from_slice(chosen);
    }
    picked.sort_unstable();
    Ok(picked)
}

pub fn stratified_subsample(
    samples: &[PrefixSample],
    fraction: f64,
    seed: u64,
) -> Result<Vec<PrefixSample>> {
    let labels: Vec<&Label> = samples.iter().map(|s| &s.label).collect();
    Ok(stratified_indices(&labels, fraction, seed)?
        .into_iter()
        .map(|i| samples[i].clone())
        .collect())
}

/// Case-level fold assignment: every prefix of a case shares its fold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_assignments: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldSplit {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.indices(|f| f == fold)
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.indices(|f| f != fold)
    }

    fn indices(&self, pred: impl Fn(usize) -> bool) -> Vec<usize> {
        self.fold_assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| pred(f))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Shuffles distinct cases with `seed` and deals them round-robin to `k` folds.
pub fn make_cv_folds(samples: &[PrefixSample], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::config(format!("need at least 2 folds, got {k}")));
    }
    let mut cases: Vec<&str> = Vec::new();
    let mut seen = HashMap::new();
    for s in samples {
        seen.entry(s.case_id()).or_insert_with(|| {
            cases.push(s.case_id());
        });
    }
    if cases.len() < k {
        return Err(Error::config(format!(
            "{} distinct cases cannot fill {k} folds",
            cases.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cases.shuffle(&mut rng);
    let fold_of: HashMap<&str, usize> = cases
        .iter()
        .enumerate()
        .map(|(pos, &c)| (c, pos % k))
        .collect();
    Ok(FoldSplit {
        fold_assignments: samples.iter().map(|s| fold_of[s.case_id()]).collect(),
        k,
        seed,
    })
}
