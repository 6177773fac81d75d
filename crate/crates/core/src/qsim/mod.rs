//! Dense statevector simulation.
//!
//! Qubit `q` corresponds to bit `q` of the amplitude index (little endian),
//! so `|q1 q0> = |01>` is index 1.

mod circuit;
mod feature_map;
pub mod oracle;

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use circuit::{CircuitSpec, GateOp};
pub use feature_map::{build_feature_map, weight_layer, FeatureMapKind, FeatureMapVariant};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Circuit(format!(
                "qubit count {n} outside 1..={MAX_QUBITS}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Circuit(format!("{len} amplitudes is not 2^n for n >= 1")));
        }
        Ok(StateVector {
            n: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        gate.validate(self.n)?;
        match *gate {
            GateOp::H(q) => {
                let h = FRAC_1_SQRT_2;
                self.apply_real_2x2(q, [[h, h], [h, -h]]);
            }
            GateOp::Ry(q, theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                self.apply_real_2x2(q, [[c, -s], [s, c]]);
            }
            GateOp::Rz(q, theta) => {
                let half = theta / 2.0;
                self.apply_diagonal(q, Complex64::from_polar(1.0, -half), Complex64::from_polar(1.0, half));
            }
            GateOp::Phase(q, theta) => {
                self.apply_diagonal(q, Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, theta));
            }
            GateOp::Cnot { control, target } => {
                let (cbit, tbit) = (1usize << control, 1usize << target);
                for i in 0..self.amps.len() {
                    if i & cbit != 0 && i & tbit == 0 {
                        self.amps.swap(i, i | tbit);
                    }
                }
            }
            GateOp::Rzz(a, b, theta) => {
                let even = Complex64::from_polar(1.0, -theta / 2.0);
                let odd = Complex64::from_polar(1.0, theta / 2.0);
                let (abit, bbit) = (1usize << a, 1usize << b);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    let parity = ((i & abit != 0) as u8) ^ ((i & bbit != 0) as u8);
                    *amp *= if parity == 0 { even } else { odd };
                }
            }
        }
        Ok(())
    }

    fn apply_real_2x2(&mut self, q: usize, m: [[f64; 2]; 2]) {
        let stride = 1usize << q;
        for block in (0..self.amps.len()).step_by(stride << 1) {
            for i in block..block + stride {
                let (a, b) = (self.amps[i], self.amps[i + stride]);
                self.amps[i] = a * m[0][0] + b * m[0][1];
                self.amps[i + stride] = a * m[1][0] + b * m[1][1];
            }
        }
    }

    fn apply_diagonal(&mut self, q: usize, d0: Complex64, d1: Complex64) {
        let bit = 1usize << q;
        for (i, amp) in self.amps.iter_mut().enumerate() {
            *amp *= if i & bit == 0 { d0 } else { d1 };
        }
    }
}

/// Runs `circuit` on `initial`, or on `|0...0>` when `None`.
pub fn run(circuit: &CircuitSpec, initial: Option<StateVector>) -> Result<StateVector> {
    let mut state = match initial {
        Some(s) if s.n_qubits() != circuit.n_qubits() => {
            return Err(Error::Dimension {
                expected: circuit.n_qubits(),
                actual: s.n_qubits(),
            })
        }
        Some(s) => s,
        None => StateVector::zero(circuit.n_qubits())?,
    };
    for gate in circuit.ops() {
        state.apply(gate)?;
    }
    Ok(state)
}

/// Exact probabilities, or `shots` samples drawn with `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotConfig {
    /// `None` means exact mode.
    pub shots: Option<u32>,
    pub seed: u64,
}

impl ShotConfig {
    pub const EXACT: ShotConfig = ShotConfig { shots: None, seed: 0 };

    pub fn shots(shots: u32, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::config("shot count must be at least 1"));
        }
        Ok(ShotConfig {
            shots: Some(shots),
            seed,
        })
    }

    pub fn is_exact(&self) -> bool {
        self.shots.is_none()
    }

    pub fn with_seed(self, seed: u64) -> Self {
        ShotConfig { seed, ..self }
    }
}

/// Draws `shots` computational-basis outcomes by inverse-CDF lookup and
/// returns a histogram over all `2^n` outcomes.
pub fn sample_counts<R: Rng>(state: &StateVector, shots: u32, rng: &mut R) -> Vec<u32> {
    let mut cumulative = Vec::with_capacity(state.amps.len());
    let mut acc = 0.0;
    for a in &state.amps {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    let total = acc;
    let last = cumulative.len() - 1;
    let mut counts = vec![0u32; cumulative.len()];
    for _ in 0..shots {
        let u = rng.gen::<f64>() * total;
        let outcome = cumulative.partition_point(|&c| c <= u).min(last);
        counts[outcome] += 1;
    }
    counts
}

/// Probability of the all-zeros outcome: exact, or a shot-based estimate.
pub fn zero_probability(state: &StateVector, shots: ShotConfig) -> f64 {
    match shots.shots {
        None => state.amps[0].norm_sqr(),
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(shots.seed);
            sample_counts(state, n, &mut rng)[0] as f64 / n as f64
        }
    }
}

/// Fidelity kernel `|<0|V(x2)^† V(x)|0>|^2`, evaluated by running the
/// embedding of `x` followed by the inverse embedding of `x2`.
pub fn kernel_overlap(x: &[f64], x2: &[f64], kind: FeatureMapKind, shots: ShotConfig) -> Result<f64> {
    if x.len() != x2.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: x2.len(),
        });
    }
    let mut circuit = build_feature_map(kind, x)?;
    circuit.extend(&build_feature_map(kind, x2)?.adjoint())?;
    let state = run(&circuit, None)?;
    Ok(zero_probability(&state, shots))
}

/// `<Z_q>` for each listed qubit.
pub fn measure_expectations(state: &StateVector, qubits: &[usize], shots: ShotConfig) -> Result<Vec<f64>> {
    if let Some(&q) = qubits.iter().find(|&&q| q >= state.n) {
        return Err(Error::Circuit(format!("qubit {q} out of range for {} qubits", state.n)));
    }
    let weights: Vec<f64> = match shots.shots {
        None => state.probabilities(),
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(shots.seed);
            sample_counts(state, n, &mut rng)
                .into_iter()
                .map(|c| c as f64 / n as f64)
                .collect()
        }
    };
    Ok(qubits
        .iter()
        .map(|&q| {
            weights
                .iter()
                .enumerate()
                .map(|(i, p)| if i >> q & 1 == 0 { *p } else { -*p })
                .sum()
        })
        .collect())
}
