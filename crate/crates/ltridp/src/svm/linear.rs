//! Primal subgradient solver for the linear-kernel SVM (Pegasos-style).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::{fit_scaler, validate_training_set, KernelSpec, SolverWeights, SvmModel};

/// Regularized hinge objective: (lambda/2)||w||^2 + mean hinge loss.
fn objective(w: &[f64], b: f64, lambda: f64, x: &[Vec<f64>], y: &[i8]) -> f64 {
    let reg = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| {
            let margin = yi as f64 * (dot(w, xi) + b);
            (1.0 - margin).max(0.0)
        })
        .sum::<f64>()
        / x.len() as f64;
    reg + hinge
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains a linear SVM by seeded stochastic subgradient descent on the
/// regularized hinge objective with lambda = 1/(c*n). `epochs` counts
/// single-sample update steps; the objective is measured every n steps and
/// the best iterate seen is returned, so checkpoint objectives are
/// non-increasing. Standardization is fitted on the given samples.
pub fn train_linear(
    features: &[Vec<f64>],
    labels: &[i8],
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<SvmModel> {
    let dim = validate_training_set(features, labels)?;
    assert!(c > 0.0, "regularization c must be positive");

    let scaler = fit_scaler(features)?;
    let scaled: Vec<Vec<f64>> = features
        .iter()
        .map(|f| scaler.transform(f))
        .collect::<Result<_>>()?;

    // bias rides along as an appended constant feature
    let augmented: Vec<Vec<f64>> = scaled
        .iter()
        .map(|v| {
            let mut a = v.clone();
            a.push(1.0);
            a
        })
        .collect();

    let n = augmented.len();
    let lambda = 1.0 / (c * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut w = vec![0.0; dim + 1];
    let mut best_w = w.clone();
    let mut best_obj = objective(&w, 0.0, lambda, &augmented, labels);

    for t in 1..=epochs.max(1) {
        let i = rng.random_range(0..n);
        let eta = 1.0 / (lambda * t as f64);
        let yi = labels[i] as f64;
        let margin = yi * dot(&w, &augmented[i]);
        let shrink = 1.0 - eta * lambda;
        for wv in &mut w {
            *wv *= shrink;
        }
        if margin < 1.0 {
            let step = eta * yi;
            for (wv, &xv) in w.iter_mut().zip(&augmented[i]) {
                *wv += step * xv;
            }
        }
        if t % n == 0 || t == epochs {
            let obj = objective(&w, 0.0, lambda, &augmented, labels);
            if obj < best_obj {
                best_obj = obj;
                best_w.copy_from_slice(&w);
            }
        }
    }

    let bias = best_w.pop().expect("augmented weight vector is non-empty");
    Ok(SvmModel {
        kernel: KernelSpec::linear(),
        scaler,
        bias,
        weights: SolverWeights::Linear(best_w),
        c,
        seed,
    })
}
