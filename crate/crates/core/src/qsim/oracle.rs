//! Full-matrix reference simulation. Each gate is materialised as a
//! `2^n × 2^n` unitary built element by element from its single- or
//! two-qubit definition; only meant for small registers in checks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{CircuitSpec, GateOp};

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Local matrix of a gate in the basis `|b1 b0>` (b0 = first qubit).
fn local(gate: &GateOp) -> Vec<Vec<C>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let e = |t: f64| C::from_polar(1.0, t);
    match *gate {
        GateOp::H(_) => vec![vec![c(h, 0.0), c(h, 0.0)], vec![c(h, 0.0), c(-h, 0.0)]],
        GateOp::Ry(_, t) => {
            let (s, co) = (t / 2.0).sin_cos();
            vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]
        }
        GateOp::Rz(_, t) => vec![vec![e(-t / 2.0), c(0.0, 0.0)], vec![c(0.0, 0.0), e(t / 2.0)]],
        GateOp::Phase(_, t) => vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), e(t)]],
        // Basis order |t c>: index = c + 2t with control as b0.
        GateOp::Cnot { .. } => {
            let mut m = vec![vec![c(0.0, 0.0); 4]; 4];
            m[0][0] = c(1.0, 0.0);
            m[2][2] = c(1.0, 0.0);
            m[1][3] = c(1.0, 0.0);
            m[3][1] = c(1.0, 0.0);
            m
        }
        GateOp::Rzz(_, _, t) => {
            let mut m = vec![vec![c(0.0, 0.0); 4]; 4];
            for (k, z) in [1.0, -1.0, -1.0, 1.0].into_iter().enumerate() {
                m[k][k] = e(-t / 2.0 * z);
            }
            m
        }
    }
}

/// Embeds a gate into the full register.
pub fn gate_unitary(gate: &GateOp, n: usize) -> DMatrix<C> {
    let dim = 1usize << n;
    let m = local(gate);
    let (a, b) = gate.qubits();
    let acted: Vec<usize> = std::iter::once(a).chain(b).collect();
    let mask: usize = acted.iter().map(|q| 1usize << q).sum();
    let sub = |i: usize| -> usize {
        acted
            .iter()
            .enumerate()
            .map(|(k, &q)| ((i >> q) & 1) << k)
            .sum()
    };
    DMatrix::from_fn(dim, dim, |r, col| {
        if r & !mask != col & !mask {
            c(0.0, 0.0)
        } else {
            m[sub(r)][sub(col)]
        }
    })
}

pub fn circuit_unitary(circuit: &CircuitSpec) -> DMatrix<C> {
    let dim = 1usize << circuit.n_qubits();
    circuit
        .ops()
        .iter()
        .fold(DMatrix::identity(dim, dim), |u, g| gate_unitary(g, circuit.n_qubits()) * u)
}

/// `U |0...0>` as a plain amplitude vector. Gate matrices are applied one at
/// a time, which keeps the cost at 4^n per gate.
pub fn run_dense(circuit: &CircuitSpec) -> Vec<C> {
    let n = circuit.n_qubits();
    let mut state = DVector::from_element(1usize << n, c(0.0, 0.0));
    state[0] = c(1.0, 0.0);
    for g in circuit.ops() {
        state = gate_unitary(g, n) * state;
    }
    state.iter().copied().collect()
}
