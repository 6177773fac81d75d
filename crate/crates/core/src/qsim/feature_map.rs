use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CircuitSpec, GateOp};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMapVariant {
    /// One `RY(x_i)` per qubit.
    Angle,
    /// `H`, `P(2 x_i)`, then `RZZ(2 (π - x_i)(π - x_j))` over ascending pairs.
    Zz,
    /// As `Zz` with `RY(2 x_i)` in place of the phase rotations.
    #[serde(alias = "zz_a")]
    AngleZz,
}

impl FeatureMapVariant {
    pub const ALL: [FeatureMapVariant; 3] = [Self::Angle, Self::Zz, Self::AngleZz];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Angle => "angle",
            Self::Zz => "zz",
            Self::AngleZz => "angle_zz",
        }
    }

    /// Short tag used in classifier names, e.g. `qke_zz_a_2`.
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Angle => "angle",
            Self::Zz => "zz",
            Self::AngleZz => "zz_a",
        }
    }
}

impl fmt::Display for FeatureMapVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureMapVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "angle" => Ok(Self::Angle),
            "zz" => Ok(Self::Zz),
            "angle_zz" | "zz_a" => Ok(Self::AngleZz),
            other => Err(Error::config(format!("unknown feature map {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawKind")]
pub struct FeatureMapKind {
    pub variant: FeatureMapVariant,
    pub layers: usize,
}

/// Either `{"variant": "zz", "layers": 2}` or the short form `"zz_2"`.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawKind {
    Full { variant: FeatureMapVariant, layers: usize },
    Short(String),
}

impl TryFrom<RawKind> for FeatureMapKind {
    type Error = Error;

    fn try_from(raw: RawKind) -> Result<Self> {
        match raw {
            RawKind::Full { variant, layers } => FeatureMapKind::new(variant, layers),
            RawKind::Short(s) => s.parse(),
        }
    }
}

impl FeatureMapKind {
    pub fn new(variant: FeatureMapVariant, layers: usize) -> Result<Self> {
        if layers == 0 {
            return Err(Error::config("a feature map needs at least one layer"));
        }
        Ok(FeatureMapKind { variant, layers })
    }
}

impl fmt::Display for FeatureMapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.variant.tag(), self.layers)
    }
}

/// Parses `angle_1`, `zz_2`, `zz_a_1` or `angle_zz_2`.
impl FromStr for FeatureMapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (variant, layers) = s
            .rsplit_once('_')
            .ok_or_else(|| Error::config(format!("feature map {s:?} lacks a layer count")))?;
        let layers = layers
            .parse()
            .map_err(|_| Error::config(format!("bad layer count in {s:?}")))?;
        FeatureMapKind::new(variant.parse()?, layers)
    }
}

/// Embedding circuit for one input, on `x.len()` qubits.
pub fn build_feature_map(kind: FeatureMapKind, x: &[f64]) -> Result<CircuitSpec> {
    let n = x.len();
    let mut c = CircuitSpec::new(n)?;
    for _ in 0..kind.layers {
        if kind.variant == FeatureMapVariant::Angle {
            for (q, &xi) in x.iter().enumerate() {
                c.push(GateOp::Ry(q, xi))?;
            }
            continue;
        }
        for q in 0..n {
            c.push(GateOp::H(q))?;
        }
        for (q, &xi) in x.iter().enumerate() {
            c.push(match kind.variant {
                FeatureMapVariant::AngleZz => GateOp::Ry(q, 2.0 * xi),
                _ => GateOp::Phase(q, 2.0 * xi),
            })?;
        }
        for i in 0..n {
            for j in i + 1..n {
                c.push(GateOp::Rzz(i, j, 2.0 * (PI - x[i]) * (PI - x[j])))?;
            }
        }
    }
    Ok(c)
}

/// `theta.len() / n` trainable blocks, each `RY(θ)` on every qubit followed
/// by a CNOT ring `i -> i+1 mod n` (no CNOTs for a single qubit).
pub fn weight_layer(theta: &[f64], n: usize) -> Result<CircuitSpec> {
    let mut c = CircuitSpec::new(n)?;
    if theta.len() % n != 0 {
        return Err(Error::Dimension {
            expected: n * (theta.len() / n + 1),
            actual: theta.len(),
        });
    }
    for block in theta.chunks(n) {
        for (q, &t) in block.iter().enumerate() {
            c.push(GateOp::Ry(q, t))?;
        }
        if n >= 2 {
            for q in 0..n {
                c.push(GateOp::Cnot {
                    control: q,
                    target: (q + 1) % n,
                })?;
            }
        }
    }
    Ok(c)
}
