//! Reference implementations written directly from the mathematical
//! definitions. They share no code with the library paths they check.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use qppm::eventlog::{EventLog, Trace};

// ---- quantum kernels -------------------------------------------------------

fn one_qubit(m: [[C; 2]; 2]) -> DMatrix<C> {
    DMatrix::from_fn(2, 2, |r, c| m[r][c])
}

fn hadamard() -> DMatrix<C> {
    let h = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    one_qubit([[h, h], [h, -h]])
}

/// `exp(-i θ/2 Y)`.
fn ry(theta: f64) -> DMatrix<C> {
    let (s, c) = (theta / 2.0).sin_cos();
    one_qubit([[C::new(c, 0.0), C::new(-s, 0.0)], [C::new(s, 0.0), C::new(c, 0.0)]])
}

/// `ops[q]` acts on qubit `q`; qubit 0 is the least significant bit.
fn tensor(ops: &[DMatrix<C>]) -> DMatrix<C> {
    ops.iter()
        .rev()
        .fold(DMatrix::from_element(1, 1, C::new(1.0, 0.0)), |acc, m| acc.kronecker(m))
}

fn z(bits: usize, q: usize) -> f64 {
    if (bits >> q) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `exp(i Σ_{i<j} (π - x_i)(π - x_j) Z_i Z_j)` plus, when `single` holds, the
/// `exp(i Σ_i x_i Z_i)` term of the z-axis map.
fn zz_diagonal(x: &[f64], single: bool) -> DMatrix<C> {
    let n = x.len();
    let dim = 1 << n;
    DMatrix::from_fn(dim, dim, |r, c| {
        if r != c {
            return C::new(0.0, 0.0);
        }
        let mut phase = 0.0;
        for i in 0..n {
            if single {
                phase += x[i] * z(r, i);
            }
            for j in i + 1..n {
                phase += (PI - x[i]) * (PI - x[j]) * z(r, i) * z(r, j);
            }
        }
        C::from_polar(1.0, phase)
    })
}

#[derive(Clone, Copy, Debug)]
pub enum MapFamily {
    Angle,
    Zz,
    AngleZz,
}

/// Feature-map unitary for one input, `layers` repetitions.
pub fn map_unitary(family: MapFamily, layers: usize, x: &[f64]) -> DMatrix<C> {
    let n = x.len();
    let layer = match family {
        MapFamily::Angle => tensor(&x.iter().map(|&xi| ry(xi)).collect::<Vec<_>>()),
        MapFamily::Zz => zz_diagonal(x, true) * tensor(&vec![hadamard(); n]),
        // The y-axis variant replaces exp(i x_i Z_i) by exp(-i x_i Y_i).
        MapFamily::AngleZz => {
            zz_diagonal(x, false) * tensor(&x.iter().map(|&xi| ry(2.0 * xi)).collect::<Vec<_>>()) * tensor(&vec![hadamard(); n])
        }
    };
    let dim = 1 << n;
    (0..layers).fold(DMatrix::identity(dim, dim), |u, _| &layer * u)
}

/// `|<φ(x2)|φ(x)>|²` with `|φ(x)> = U(x)|0…0>`.
pub fn dense_kernel(family: MapFamily, layers: usize, x: &[f64], x2: &[f64]) -> f64 {
    let dim = 1 << x.len();
    let mut zero = DVector::from_element(dim, C::new(0.0, 0.0));
    zero[0] = C::new(1.0, 0.0);
    let a = map_unitary(family, layers, x) * &zero;
    let b = map_unitary(family, layers, x2) * &zero;
    b.dotc(&a).norm_sqr()
}

/// Product-state overlap of the angle map: `RY(x)^L = RY(Lx)`.
pub fn angle_closed_form(layers: usize, x: &[f64], x2: &[f64]) -> f64 {
    x.iter()
        .zip(x2)
        .map(|(a, b)| (layers as f64 * (a - b) / 2.0).cos().powi(2))
        .product()
}

// ---- SVM dual --------------------------------------------------------------

/// Minimum of `½ αᵀQα - Σα` over `0 ≤ α ≤ C`, `yᵀα = 0` with `Q_ij = y_i y_j K_ij`,
/// by enumerating every assignment of the variables to {at 0, at C, free}
/// and solving the equality-constrained stationarity system on the free set.
pub fn brute_force_dual(k: &DMatrix<f64>, y: &[f64], c: f64) -> (f64, Vec<f64>) {
    let m = y.len();
    let q = DMatrix::from_fn(m, m, |i, j| y[i] * y[j] * k[(i, j)]);
    let objective = |a: &[f64]| {
        let v = DVector::from_column_slice(a);
        0.5 * (v.transpose() * &q * &v)[(0, 0)] - a.iter().sum::<f64>()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(m as u32) {
        let mut state = vec![0u8; m];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            let f = free.len();
            let mut a = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (col, &j) in free.iter().enumerate() {
                    a[(r, col)] = q[(i, j)];
                }
                a[(r, f)] = y[i];
                a[(f, r)] = y[i];
                rhs[r] = 1.0 - (0..m).filter(|&j| state[j] == 1).map(|j| q[(i, j)] * c).sum::<f64>();
            }
            rhs[f] = -(0..m).filter(|&j| state[j] == 1).map(|j| y[j] * c).sum::<f64>();
            let Some(sol) = a.lu().solve(&rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let feasible = alpha.iter().all(|&a| (-1e-10..=c + 1e-10).contains(&a))
            && alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-9;
        if !feasible {
            continue;
        }
        let obj = objective(&alpha);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, alpha));
        }
    }
    best.expect("α = 0 is always feasible")
}

/// Largest KKT violation of `f(x_i) = Σ_j α_j y_j K_ij + b`.
pub fn kkt_violation(k: &DMatrix<f64>, y: &[f64], alpha: &[f64], b: f64, c: f64) -> f64 {
    let m = y.len();
    let eps = 1e-9 * c;
    (0..m)
        .map(|i| {
            let f: f64 = (0..m).map(|j| alpha[j] * y[j] * k[(i, j)]).sum::<f64>() + b;
            let margin = y[i] * f;
            if alpha[i] <= eps {
                (1.0 - margin).max(0.0)
            } else if alpha[i] >= c - eps {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            }
        })
        .fold(0.0, f64::max)
}

// ---- inter-case features -----------------------------------------------------

pub struct FullScan<'a> {
    log: &'a EventLog,
    means: HashMap<(String, String), f64>,
    burst: HashMap<String, f64>,
    successors: HashMap<String, BTreeSet<String>>,
    activity_code: HashMap<String, usize>,
    resource_code: HashMap<String, usize>,
}

#[derive(Debug, PartialEq)]
pub struct InterValues {
    pub peer_cases: f64,
    pub peer_act: f64,
    pub res_count: f64,
    pub avg_delay: f64,
    pub freq_act: f64,
    pub top_res: f64,
    pub batch: f64,
}

fn ms(t: &Trace, pos: usize) -> i64 {
    t.events()[pos].timestamp.timestamp_millis()
}

/// Codes 1.. in sorted order; 0 is left for unknown values.
fn codes(values: impl IntoIterator<Item = String>) -> HashMap<String, usize> {
    values
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, i + 1))
        .collect()
}

impl<'a> FullScan<'a> {
    /// Statistics come from `train`; windows scan all of `log`.
    pub fn new(log: &'a EventLog, train: &[&Trace], epsilon_ms: i64, min_burst: usize) -> Self {
        let mut sums: HashMap<(String, String), (f64, usize)> = HashMap::new();
        let mut successors: HashMap<String, BTreeSet<String>> = HashMap::new();
        for t in train {
            for p in 1..t.len() {
                let key = (t.events()[p - 1].activity.clone(), t.events()[p].activity.clone());
                let e = sums.entry(key.clone()).or_default();
                e.0 += (ms(t, p) - ms(t, p - 1)) as f64 / 1000.0;
                e.1 += 1;
                successors.entry(key.0).or_default().insert(key.1);
            }
        }
        let means = sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();

        // Occurrence o is in a burst when some interval [s, s + ε] holding o
        // also holds occurrences from at least `min_burst` distinct cases.
        let mut occurrences: HashMap<String, Vec<(i64, usize)>> = HashMap::new();
        for (case, t) in train.iter().enumerate() {
            for (p, e) in t.events().iter().enumerate() {
                occurrences.entry(e.activity.clone()).or_default().push((ms(t, p), case));
            }
        }
        let mut burst = HashMap::new();
        for (activity, occ) in &occurrences {
            let in_burst = occ
                .iter()
                .filter(|&&(t_o, _)| {
                    occ.iter().any(|&(s, _)| {
                        s <= t_o && t_o <= s + epsilon_ms && {
                            let cases: HashSet<usize> = occ
                                .iter()
                                .filter(|&&(t, _)| s <= t && t <= s + epsilon_ms)
                                .map(|&(_, c)| c)
                                .collect();
                            cases.len() >= min_burst
                        }
                    })
                })
                .count();
            burst.insert(activity.clone(), in_burst as f64 / occ.len() as f64);
        }

        let activity_code = codes(train.iter().flat_map(|t| t.events().iter().map(|e| e.activity.clone())));
        let resource_code = codes(
            train
                .iter()
                .flat_map(|t| t.events().iter().filter_map(|e| e.resource.clone()))
                .filter(|r| !r.is_empty()),
        );
        FullScan {
            log,
            means,
            burst,
            successors,
            activity_code,
            resource_code,
        }
    }

    fn most_frequent(counts: &HashMap<usize, usize>) -> f64 {
        counts
            .iter()
            .max_by(|(ca, na), (cb, nb)| na.cmp(nb).then(cb.cmp(ca)))
            .map_or(0.0, |(&c, _)| c as f64)
    }

    /// All seven features for the event at `pos` of case number `case`.
    /// Returns the values and whether an event sat exactly on the lower edge.
    pub fn features(&self, case: usize, pos: usize, width_ms: i64) -> (InterValues, bool) {
        let anchor = &self.log.traces()[case];
        let t = ms(anchor, pos);
        let lo = t - width_ms;
        let mut cases = HashSet::new();
        let mut events = 0usize;
        let mut resources = HashSet::new();
        let mut ratios = Vec::new();
        let mut acts: HashMap<usize, usize> = HashMap::new();
        let mut res: HashMap<usize, usize> = HashMap::new();
        let mut on_edge = false;
        for (c, trace) in self.log.traces().iter().enumerate() {
            for (p, e) in trace.events().iter().enumerate() {
                let ts = ms(trace, p);
                if ts < lo || ts > t || (c == case && p > pos) {
                    continue;
                }
                on_edge |= ts == lo;
                cases.insert(c);
                events += 1;
                *acts.entry(self.activity_code.get(&e.activity).copied().unwrap_or(0)).or_default() += 1;
                if let Some(r) = e.resource.as_ref().filter(|r| !r.is_empty()) {
                    resources.insert(r.clone());
                    *res.entry(self.resource_code.get(r).copied().unwrap_or(0)).or_default() += 1;
                }
                if p > 0 {
                    let prev = &trace.events()[p - 1];
                    if let Some(&mean) = self.means.get(&(prev.activity.clone(), e.activity.clone())) {
                        if mean > 0.0 {
                            ratios.push((ts - ms(trace, p - 1)) as f64 / 1000.0 / mean);
                        }
                    }
                }
            }
        }
        let avg_delay = if ratios.is_empty() {
            1.0
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        };
        let last = &anchor.events()[pos].activity;
        let batch = self
            .successors
            .get(last)
            .map_or(0.0, |s| s.iter().map(|b| self.burst.get(b).copied().unwrap_or(0.0)).fold(0.0, f64::max));
        (
            InterValues {
                peer_cases: cases.len() as f64,
                peer_act: events as f64,
                res_count: resources.len() as f64,
                avg_delay,
                freq_act: Self::most_frequent(&acts),
                top_res: Self::most_frequent(&res),
                batch,
            },
            on_edge,
        )
    }
}
