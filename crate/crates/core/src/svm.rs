//! Soft-margin SVM on precomputed kernels, trained with SMO, plus a
//! one-vs-rest wrapper for multiclass labels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qkernel::KernelMatrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

impl SvmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// `α_i y_i` per support vector.
    pub dual_coefs: Vec<f64>,
    /// Indices into the training set.
    pub support_indices: Vec<usize>,
    pub bias: f64,
    pub c: f64,
    pub iterations: usize,
}

impl SvmModel {
    /// `Σ α_i y_i κ(x, x_i) + b`, where `row[j] = κ(x, x_j)` over the training set.
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.support_indices
            .iter()
            .zip(&self.dual_coefs)
            .map(|(&i, &a)| a * row[i])
            .sum::<f64>()
            + self.bias
    }

    /// Dense `α` over `m` training samples.
    pub fn alphas(&self, m: usize) -> Vec<f64> {
        let mut alpha = vec![0.0; m];
        for (&i, &a) in self.support_indices.iter().zip(&self.dual_coefs) {
            alpha[i] = a.abs();
        }
        alpha
    }

    /// `½ αᵀQα - Σα` with `Q_ij = y_i y_j K_ij`.
    pub fn dual_objective(&self, gram: &KernelMatrix) -> f64 {
        let mut quad = 0.0;
        for (&i, &ai) in self.support_indices.iter().zip(&self.dual_coefs) {
            for (&j, &aj) in self.support_indices.iter().zip(&self.dual_coefs) {
                quad += ai * aj * gram.get(i, j);
            }
        }
        0.5 * quad - self.dual_coefs.iter().map(|a| a.abs()).sum::<f64>()
    }

    /// Largest violation of the KKT conditions on the training set.
    pub fn kkt_violation(&self, gram: &KernelMatrix, labels: &[f64]) -> f64 {
        let alpha = self.alphas(labels.len());
        let bound = 1e-12 * self.c.max(1.0);
        (0..labels.len())
            .map(|i| {
                let margin = labels[i] * self.decision(gram.row(i));
                if alpha[i] <= bound {
                    (1.0 - margin).max(0.0)
                } else if alpha[i] >= self.c - bound {
                    (margin - 1.0).max(0.0)
                } else {
                    (margin - 1.0).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn dual_feasibility(&self) -> f64 {
        self.dual_coefs.iter().sum::<f64>().abs()
    }
}

/// Trains a binary model on a square Gram matrix with `±1` labels.
pub fn fit(gram: &KernelMatrix, labels: &[f64], cfg: &SvmConfig) -> Result<SvmModel> {
    cfg.validate()?;
    let m = labels.len();
    if !gram.is_square() || gram.rows() != m {
        return Err(Error::Dimension {
            expected: m,
            actual: gram.rows(),
        });
    }
    if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(Error::config(format!("binary labels must be +1 or -1, got {bad}")));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(Error::Degenerate("training labels contain a single class".into()));
    }

    let c = cfg.c;
    let y = labels;
    let q = |i: usize, j: usize| y[i] * y[j] * gram.get(i, j);
    let mut alpha = vec![0.0f64; m];
    let mut grad = vec![-1.0f64; m];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    loop {
        // Maximal violating pair.
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..m {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                (i, gmax) = (t, v);
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                (j, gmin) = (t, v);
            }
        }
        let gap = gmax - gmin;
        if i == usize::MAX || j == usize::MAX || gap < cfg.tol {
            break;
        }
        if iterations >= cfg.max_iter {
            return Err(Error::Convergence {
                iterations,
                violation: gap,
            });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let tau = 1e-12;
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(tau);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(tau);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    // b from free vectors, else the midpoint of the feasible interval.
    let (mut sum, mut free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..m {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += yg;
            free += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };

    let support_indices: Vec<usize> = (0..m).filter(|&t| alpha[t] > 0.0).collect();
    Ok(SvmModel {
        dual_coefs: support_indices.iter().map(|&t| alpha[t] * y[t]).collect(),
        support_indices,
        bias: -rho,
        c,
        iterations,
    })
}

/// One-vs-rest over the classes present in training. Two classes reduce to
/// a single binary model whose score is mirrored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel<L> {
    pub version: u32,
    pub classes: Vec<L>,
    pub models: Vec<SvmModel>,
}

pub fn fit_multiclass<L>(gram: &KernelMatrix, labels: &[L], cfg: &SvmConfig) -> Result<MulticlassModel<L>>
where
    L: Ord + Clone + Send + Sync,
{
    let mut classes: Vec<L> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Degenerate("training labels contain a single class".into()));
    }
    let targets: Vec<&L> = if classes.len() == 2 { vec![&classes[0]] } else { classes.iter().collect() };
    let models = targets
        .par_iter()
        .map(|&class| {
            let y: Vec<f64> = labels.iter().map(|l| if l == class { 1.0 } else { -1.0 }).collect();
            fit(gram, &y, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MulticlassModel {
        version: MODEL_FORMAT_VERSION,
        classes,
        models,
    })
}

impl<L> MulticlassModel<L> {
    /// Per-class scores for one kernel row against the training set.
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        if self.classes.len() == 2 && self.models.len() == 1 {
            let f = self.models[0].decision(row);
            return vec![f, -f];
        }
        self.models.iter().map(|m| m.decision(row)).collect()
    }

    /// Argmax of the scores; ties go to the smaller class index.
    pub fn predict_index(&self, row: &[f64]) -> usize {
        argmax(&self.scores(row))
    }

    pub fn predict(&self, row: &[f64]) -> &L {
        &self.classes[self.predict_index(row)]
    }

    pub fn predict_all(&self, cross: &KernelMatrix) -> Vec<&L> {
        (0..cross.rows()).map(|i| self.predict(cross.row(i))).collect()
    }
}

impl<L: Serialize> MulticlassModel<L> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl<L: serde::de::DeserializeOwned> MulticlassModel<L> {
    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::config(format!("unsupported model version {}", model.version)));
        }
        Ok(model)
    }
}

/// Index of the first maximum.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
