//! Binary SVM: feature standardization, kernel evaluation, a primal
//! subgradient solver for the linear case and a kernelized SMO dual solver.

mod kernel;
mod linear;
mod smo;

pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use linear::train_linear;
pub use smo::{kkt_residuals, train_smo};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-dimension z-score parameters. Zero-variance dimensions divide by 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl ScalerParams {
    pub fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], stddev: vec![1.0; dim] }
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimMismatch { expected: self.mean.len(), got: x.len() });
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.stddev))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect())
    }
}

/// Per-dimension mean and population standard deviation.
pub fn fit_scaler(samples: &[Vec<f64>]) -> Result<ScalerParams> {
    let first = samples.first().ok_or_else(|| Error::Empty("scaler input".into()))?;
    let dim = first.len();
    let n = samples.len() as f64;
    let mut mean = vec![0.0; dim];
    for s in samples {
        if s.len() != dim {
            return Err(Error::DimMismatch { expected: dim, got: s.len() });
        }
        for (acc, &v) in mean.iter_mut().zip(s) {
            *acc += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for s in samples {
        for ((acc, &v), &m) in var.iter_mut().zip(s).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let stddev = var
        .into_iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s == 0.0 { 1.0 } else { s }
        })
        .collect();
    Ok(ScalerParams { mean, stddev })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    pub vector: Vec<f64>,
    pub label: i8,
    pub alpha: f64,
}

/// Solver artifacts: a primal weight vector or the SMO support set.
/// Serializes as a `weights` or `support_vectors` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SolverWeights {
    #[serde(rename = "weights")]
    Linear(Vec<f64>),
    #[serde(rename = "support_vectors")]
    Support(Vec<SupportVector>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    pub scaler: ScalerParams,
    pub bias: f64,
    #[serde(flatten)]
    pub weights: SolverWeights,
    pub c: f64,
    pub seed: u64,
}

impl SvmModel {
    pub fn feature_dim(&self) -> usize {
        self.scaler.mean.len()
    }

    /// Signed distance to the decision boundary of the scaled input.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        let scaled = self.scaler.transform(x)?;
        match &self.weights {
            SolverWeights::Linear(w) => {
                Ok(w.iter().zip(&scaled).map(|(a, b)| a * b).sum::<f64>() + self.bias)
            }
            SolverWeights::Support(svs) => {
                let mut sum = self.bias;
                for sv in svs {
                    sum += sv.alpha
                        * sv.label as f64
                        * kernel_eval(&self.kernel, &sv.vector, &scaled)?;
                }
                Ok(sum)
            }
        }
    }

    /// +1 / -1 prediction; a decision value of exactly 0 predicts +1.
    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.decision_value(x)? >= 0.0 { 1 } else { -1 })
    }
}

/// Solver selection plus hyperparameters for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kernel: KernelSpec,
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
    /// Subgradient steps for the primal solver; `None` means 50 * n.
    pub epochs: Option<usize>,
    /// Use the primal subgradient solver (linear kernel only).
    pub use_primal: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(kernel: KernelSpec, seed: u64) -> Self {
        Self {
            kernel,
            c: 1.0,
            tol: 1e-3,
            max_passes: 10,
            epochs: None,
            use_primal: kernel.kind == KernelKind::Linear,
            seed,
        }
    }
}

/// Trains with the configured solver: the primal subgradient solver when
/// `use_primal` is set (linear kernel only), otherwise SMO.
pub fn train_model(features: &[Vec<f64>], labels: &[i8], cfg: &TrainConfig) -> Result<SvmModel> {
    if cfg.use_primal {
        if cfg.kernel.kind != KernelKind::Linear {
            return Err(Error::Model(
                "the primal solver only supports the linear kernel".into(),
            ));
        }
        let epochs = cfg.epochs.unwrap_or(50 * features.len());
        train_linear(features, labels, cfg.c, epochs, cfg.seed)
    } else {
        train_smo(
            features,
            labels,
            cfg.kernel,
            cfg.c,
            cfg.tol,
            cfg.max_passes,
            cfg.seed,
        )
    }
}

pub(crate) fn validate_training_set(features: &[Vec<f64>], labels: &[i8]) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::DimMismatch { expected: features.len(), got: labels.len() });
    }
    let dim = features[0].len();
    for f in features {
        if f.len() != dim {
            return Err(Error::DimMismatch { expected: dim, got: f.len() });
        }
    }
    let has_pos = labels.iter().any(|&y| y > 0);
    let has_neg = labels.iter().any(|&y| y <= 0);
    if !has_pos || !has_neg {
        return Err(Error::SingleClass);
    }
    Ok(dim)
}
