//! Variational quantum classifier: feature map, trainable RY/CNOT layers and
//! a bitstring-group readout over the first `ceil(log2 C)` qubits.

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{
    build_feature_map, run, sample_counts, weight_layer, FeatureMapKind, ShotConfig, StateVector,
};
use crate::svm::argmax;

pub const CHECKPOINT_VERSION: u32 = 1;

const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    ParameterShift,
    Spsa,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// `None` trains full batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub gradient: GradientMethod,
    /// Perturbation size for SPSA.
    pub spsa_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 0.05,
            epochs: 30,
            batch_size: None,
            seed: 0,
            gradient: GradientMethod::ParameterShift,
            spsa_step: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqcModel {
    pub version: u32,
    pub feature_map: FeatureMapKind,
    pub n_qubits: usize,
    pub layers: usize,
    /// `layers × n_qubits`, row-major.
    pub theta: Vec<f64>,
    pub classes: Vec<String>,
}

/// Number of qubits read out for `c` classes.
pub fn readout_qubits(c: usize) -> usize {
    (usize::BITS - (c.max(2) - 1).leading_zeros()) as usize
}

impl VqcModel {
    /// Parameters drawn from `U(-0.1, 0.1)`.
    pub fn init(
        feature_map: FeatureMapKind,
        n_qubits: usize,
        layers: usize,
        classes: Vec<String>,
        seed: u64,
    ) -> Result<Self> {
        if layers == 0 {
            return Err(Error::config("a classifier needs at least one weight layer"));
        }
        if classes.len() < 2 {
            return Err(Error::Degenerate("a classifier needs at least two classes".into()));
        }
        if readout_qubits(classes.len()) > n_qubits {
            return Err(Error::config(format!(
                "{} classes need {} readout qubits but the register has {n_qubits}",
                classes.len(),
                readout_qubits(classes.len())
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new(-0.1, 0.1);
        Ok(VqcModel {
            version: CHECKPOINT_VERSION,
            feature_map,
            n_qubits,
            layers,
            theta: (0..layers * n_qubits).map(|_| dist.sample(&mut rng)).collect(),
            classes,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    fn embed(&self, x: &[f64]) -> Result<StateVector> {
        if x.len() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                actual: x.len(),
            });
        }
        run(&build_feature_map(self.feature_map, x)?, None)
    }

    fn scores_from(&self, embedded: &StateVector, theta: &[f64], shots: ShotConfig) -> Result<Vec<f64>> {
        let state = run(&weight_layer(theta, self.n_qubits)?, Some(embedded.clone()))?;
        let weights: Vec<f64> = match shots.shots {
            None => state.probabilities(),
            Some(n) => sample_counts(&state, n, &mut ChaCha8Rng::seed_from_u64(shots.seed))
                .into_iter()
                .map(f64::from)
                .collect(),
        };
        let c = self.n_classes();
        let mask = (1usize << readout_qubits(c)) - 1;
        let mut scores = vec![0.0; c];
        for (i, w) in weights.iter().enumerate() {
            scores[(i & mask) % c] += w;
        }
        let total: f64 = scores.iter().sum();
        if total > 0.0 {
            for s in &mut scores {
                *s /= total;
            }
        }
        Ok(scores)
    }

    /// Class scores: renormalised probability mass of each bitstring group.
    pub fn forward(&self, x: &[f64], shots: ShotConfig) -> Result<Vec<f64>> {
        self.scores_from(&self.embed(x)?, &self.theta, shots)
    }

    /// Argmax of the scores; ties go to the smaller class index.
    pub fn predict(&self, x: &[f64], shots: ShotConfig) -> Result<usize> {
        Ok(argmax(&self.forward(x, shots)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: VqcModel = serde_json::from_str(text)?;
        if model.version != CHECKPOINT_VERSION {
            return Err(Error::config(format!("unsupported checkpoint version {}", model.version)));
        }
        if model.theta.len() != model.layers * model.n_qubits {
            return Err(Error::Dimension {
                expected: model.layers * model.n_qubits,
                actual: model.theta.len(),
            });
        }
        Ok(model)
    }
}

/// Samples with their embedded states, prepared once per training run.
pub struct Batch<'a> {
    model: &'a VqcModel,
    states: Vec<StateVector>,
    labels: Vec<usize>,
}

impl<'a> Batch<'a> {
    pub fn new<V: AsRef<[f64]> + Sync>(model: &'a VqcModel, samples: &[V], labels: &[usize]) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::Dimension {
                expected: samples.len(),
                actual: labels.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= model.n_classes()) {
            return Err(Error::config(format!("label {l} outside {} classes", model.n_classes())));
        }
        let states = samples
            .par_iter()
            .map(|x| model.embed(x.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Batch {
            model,
            states,
            labels: labels.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Mean cross-entropy over `idx` (all samples when `None`).
    pub fn loss(&self, theta: &[f64], idx: Option<&[usize]>) -> Result<f64> {
        let all: Vec<usize>;
        let idx = match idx {
            Some(i) => i,
            None => {
                all = (0..self.len()).collect();
                &all
            }
        };
        let total = idx
            .par_iter()
            .map(|&s| {
                let p = self.model.scores_from(&self.states[s], theta, ShotConfig::EXACT)?;
                Ok(-p[self.labels[s]].max(PROB_FLOOR).ln())
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .sum::<f64>();
        Ok(total / idx.len().max(1) as f64)
    }

    /// Class scores of sample `s` under `theta`.
    pub fn scores(&self, theta: &[f64], s: usize) -> Result<Vec<f64>> {
        self.model.scores_from(&self.states[s], theta, ShotConfig::EXACT)
    }

    /// `∂ score_c / ∂ θ_k` for sample `s` by the parameter-shift rule
    /// (`±π/2` per RY angle); row `k`, column `c`.
    pub fn score_jacobian(&self, theta: &[f64], s: usize) -> Result<Vec<Vec<f64>>> {
        let shift = std::f64::consts::FRAC_PI_2;
        let mut shifted = theta.to_vec();
        (0..theta.len())
            .map(|k| {
                shifted[k] = theta[k] + shift;
                let plus = self.scores(&shifted, s)?;
                shifted[k] = theta[k] - shift;
                let minus = self.scores(&shifted, s)?;
                shifted[k] = theta[k];
                Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / 2.0).collect())
            })
            .collect()
    }

    /// Exact gradient of the mean cross-entropy over `idx`, from
    /// [`Batch::score_jacobian`] and the chain rule.
    pub fn parameter_shift_gradient(&self, theta: &[f64], idx: &[usize]) -> Result<Vec<f64>> {
        let per_sample = idx
            .par_iter()
            .map(|&s| {
                let label = self.labels[s];
                let base = self.scores(theta, s)?[label];
                let jac = self.score_jacobian(theta, s)?;
                Ok(jac
                    .iter()
                    .map(|row| if base > PROB_FLOOR { -row[label] / base } else { 0.0 })
                    .collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let n = idx.len().max(1) as f64;
        let mut grad = vec![0.0; theta.len()];
        for g in per_sample {
            for (acc, v) in grad.iter_mut().zip(g) {
                *acc += v / n;
            }
        }
        Ok(grad)
    }

    fn spsa_gradient(&self, theta: &[f64], idx: &[usize], step: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let delta: Vec<f64> = (0..theta.len())
            .map(|_| if rand::Rng::gen_bool(rng, 0.5) { 1.0 } else { -1.0 })
            .collect();
        let plus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + step * d).collect();
        let minus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - step * d).collect();
        let diff = (self.loss(&plus, Some(idx))? - self.loss(&minus, Some(idx))?) / (2.0 * step);
        Ok(delta.iter().map(|d| diff * d).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Training loss before the first epoch and after each epoch.
    pub loss_history: Vec<f64>,
}

/// Gradient descent on the mean cross-entropy, starting from `model`.
pub fn train<V: AsRef<[f64]> + Sync>(
    mut model: VqcModel,
    samples: &[V],
    labels: &[usize],
    opt: &OptimizerConfig,
) -> Result<(VqcModel, TrainReport)> {
    if !(opt.learning_rate > 0.0 && opt.learning_rate.is_finite()) {
        return Err(Error::config(format!("learning rate must be positive, got {}", opt.learning_rate)));
    }
    if opt.batch_size == Some(0) {
        return Err(Error::config("batch size must be at least 1"));
    }
    if samples.is_empty() {
        return Err(Error::Degenerate("no training samples".into()));
    }
    let mut theta = model.theta.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    let (history, theta) = {
        let batch = Batch::new(&model, samples, labels)?;
        let initial = batch.loss(&theta, None)?;
        if !initial.is_finite() {
            return Err(Error::Divergence { epoch: 0, loss: initial });
        }
        let mut history = vec![initial];
        let mut order: Vec<usize> = (0..batch.len()).collect();
        for epoch in 1..=opt.epochs {
            let size = opt.batch_size.unwrap_or(order.len()).min(order.len());
            if size < order.len() {
                order.shuffle(&mut rng);
            }
            for chunk in order.chunks(size) {
                let grad = match opt.gradient {
                    GradientMethod::ParameterShift => batch.parameter_shift_gradient(&theta, chunk)?,
                    GradientMethod::Spsa => batch.spsa_gradient(&theta, chunk, opt.spsa_step, &mut rng)?,
                };
                for (t, g) in theta.iter_mut().zip(grad) {
                    *t -= opt.learning_rate * g;
                }
            }
            let loss = batch.loss(&theta, None)?;
            if !loss.is_finite() || theta.iter().any(|t| !t.is_finite()) {
                return Err(Error::Divergence { epoch, loss });
            }
            log::debug!("vqc epoch {epoch}: loss {loss:.6}");
            history.push(loss);
        }
        (history, theta)
    };
    model.theta = theta;
    Ok((model, TrainReport { loss_history: history }))
}
