use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gate set of the simulator. Angles are in radians.
///
/// * `Ry(θ) = exp(-iθY/2)`, `Rz(θ) = exp(-iθZ/2)`
/// * `Phase(θ) = diag(1, e^{iθ})`
/// * `Rzz(θ) = exp(-iθ Z⊗Z / 2)`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    H(usize),
    Ry(usize, f64),
    Rz(usize, f64),
    Phase(usize, f64),
    Cnot { control: usize, target: usize },
    Rzz(usize, usize, f64),
}

impl GateOp {
    pub fn kind(&self) -> &'static str {
        match self {
            GateOp::H(_) => "H",
            GateOp::Ry(..) => "RY",
            GateOp::Rz(..) => "RZ",
            GateOp::Phase(..) => "P",
            GateOp::Cnot { .. } => "CNOT",
            GateOp::Rzz(..) => "RZZ",
        }
    }

    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            GateOp::H(q) | GateOp::Ry(q, _) | GateOp::Rz(q, _) | GateOp::Phase(q, _) => (q, None),
            GateOp::Cnot { control, target } => (control, Some(target)),
            GateOp::Rzz(a, b, _) => (a, Some(b)),
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            GateOp::Ry(_, t) | GateOp::Rz(_, t) | GateOp::Phase(_, t) | GateOp::Rzz(_, _, t) => Some(t),
            GateOp::H(_) | GateOp::Cnot { .. } => None,
        }
    }

    pub fn with_angle(self, theta: f64) -> GateOp {
        match self {
            GateOp::Ry(q, _) => GateOp::Ry(q, theta),
            GateOp::Rz(q, _) => GateOp::Rz(q, theta),
            GateOp::Phase(q, _) => GateOp::Phase(q, theta),
            GateOp::Rzz(a, b, _) => GateOp::Rzz(a, b, theta),
            other => other,
        }
    }

    pub fn adjoint(&self) -> GateOp {
        match self.angle() {
            Some(t) => self.with_angle(-t),
            None => *self,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let (a, b) = self.qubits();
        if a >= n || b.is_some_and(|b| b >= n) {
            return Err(Error::Circuit(format!("{self} targets a qubit outside 0..{n}")));
        }
        if b == Some(a) {
            return Err(Error::Circuit(format!("{self} needs two distinct qubits")));
        }
        if self.angle().is_some_and(|t| !t.is_finite()) {
            return Err(Error::Circuit(format!("{self} has a non-finite angle")));
        }
        Ok(())
    }

    fn parse(line: &str) -> Result<GateOp> {
        let bad = || Error::Circuit(format!("cannot parse gate line {line:?}"));
        let parts: Vec<&str> = line.split_whitespace().collect();
        let q = |i: usize| parts.get(i).and_then(|s| s.parse::<usize>().ok()).ok_or_else(bad);
        let t = |i: usize| parts.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(bad);
        let (gate, arity) = match parts.first().copied() {
            Some("H") => (GateOp::H(q(1)?), 2),
            Some("RY") => (GateOp::Ry(q(1)?, t(2)?), 3),
            Some("RZ") => (GateOp::Rz(q(1)?, t(2)?), 3),
            Some("P") => (GateOp::Phase(q(1)?, t(2)?), 3),
            Some("CNOT") => (GateOp::Cnot { control: q(1)?, target: q(2)? }, 3),
            Some("RZZ") => (GateOp::Rzz(q(1)?, q(2)?, t(3)?), 4),
            _ => return Err(bad()),
        };
        if parts.len() != arity {
            return Err(bad());
        }
        Ok(gate)
    }
}

/// Dump line: `KIND target [target2] [angle]`.
impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.qubits();
        write!(f, "{} {a}", self.kind())?;
        if let Some(b) = b {
            write!(f, " {b}")?;
        }
        if let Some(t) = self.angle() {
            write!(f, " {t:?}")?;
        }
        Ok(())
    }
}

/// An ordered gate program on a fixed register size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    n_qubits: usize,
    ops: Vec<GateOp>,
}

impl CircuitSpec {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Circuit("a circuit needs at least one qubit".into()));
        }
        Ok(CircuitSpec {
            n_qubits,
            ops: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, gate: GateOp) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.ops.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, other: &CircuitSpec) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                actual: other.n_qubits,
            });
        }
        self.ops.extend_from_slice(&other.ops);
        Ok(())
    }

    /// Reversed gate order with every angle negated.
    pub fn adjoint(&self) -> CircuitSpec {
        CircuitSpec {
            n_qubits: self.n_qubits,
            ops: self.ops.iter().rev().map(GateOp::adjoint).collect(),
        }
    }

    /// Counts gates per kind, e.g. `[("H", 3), ("P", 3), ("RZZ", 3)]`.
    pub fn gate_counts(&self) -> Vec<(&'static str, usize)> {
        let mut counts: Vec<(&'static str, usize)> = Vec::new();
        for op in &self.ops {
            match counts.iter_mut().find(|(k, _)| *k == op.kind()) {
                Some((_, n)) => *n += 1,
                None => counts.push((op.kind(), 1)),
            }
        }
        counts
    }

    /// One gate per line.
    pub fn dump(&self) -> String {
        self.ops.iter().map(|g| format!("{g}\n")).collect()
    }

    pub fn parse_dump(n_qubits: usize, text: &str) -> Result<CircuitSpec> {
        let mut circuit = CircuitSpec::new(n_qubits)?;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            circuit.push(GateOp::parse(line)?)?;
        }
        Ok(circuit)
    }
}
