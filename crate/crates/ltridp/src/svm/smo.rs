//! Two-variable SMO solver for the kernelized dual.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::{
    fit_scaler, kernel_eval, validate_training_set, KernelSpec, SolverWeights, SupportVector,
    SvmModel,
};

const ALPHA_CHANGE_EPS: f64 = 1e-8;

struct Solver<'a> {
    gram: Vec<f64>,
    n: usize,
    y: &'a [i8],
    alpha: Vec<f64>,
    b: f64,
    c: f64,
    tol: f64,
}

impl Solver<'_> {
    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    /// Decision value of training point i under the current alphas.
    fn f(&self, i: usize) -> f64 {
        let mut sum = self.b;
        for j in 0..self.n {
            if self.alpha[j] != 0.0 {
                sum += self.alpha[j] * self.y[j] as f64 * self.k(j, i);
            }
        }
        sum
    }

    fn violates_kkt(&self, i: usize) -> bool {
        let r = self.y[i] as f64 * self.f(i) - 1.0;
        (r < -self.tol && self.alpha[i] < self.c) || (r > self.tol && self.alpha[i] > 0.0)
    }

    /// Joint optimization of the pair (i, j). Returns true if the alphas moved.
    fn step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (yi, yj) = (self.y[i] as f64, self.y[j] as f64);
        let ei = self.f(i) - yi;
        let ej = self.f(j) - yj;
        let (ai_old, aj_old) = (self.alpha[i], self.alpha[j]);

        let (low, high) = if yi != yj {
            let d = aj_old - ai_old;
            ((0.0f64).max(d), self.c.min(self.c + d))
        } else {
            let s = ai_old + aj_old;
            ((0.0f64).max(s - self.c), self.c.min(s))
        };
        if low >= high {
            return false;
        }

        let eta = 2.0 * self.k(i, j) - self.k(i, i) - self.k(j, j);
        if eta >= 0.0 {
            return false;
        }

        let mut aj = aj_old - yj * (ei - ej) / eta;
        aj = aj.clamp(low, high);
        if (aj - aj_old).abs() < ALPHA_CHANGE_EPS {
            return false;
        }
        let ai = ai_old + yi * yj * (aj_old - aj);

        let b1 = self.b
            - ei
            - yi * (ai - ai_old) * self.k(i, i)
            - yj * (aj - aj_old) * self.k(i, j);
        let b2 = self.b
            - ej
            - yi * (ai - ai_old) * self.k(i, j)
            - yj * (aj - aj_old) * self.k(j, j);
        self.b = if ai > 0.0 && ai < self.c {
            b1
        } else if aj > 0.0 && aj < self.c {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        true
    }
}

/// Trains a kernel SVM by sequential minimal optimization. Terminates once
/// `max_passes` consecutive full sweeps change nothing and no training point
/// violates the KKT conditions by more than `tol`; a hard sweep cap guards
/// against degenerate inputs. Standardization is fitted on the given samples.
pub fn train_smo(
    features: &[Vec<f64>],
    labels: &[i8],
    kernel: KernelSpec,
    c: f64,
    tol: f64,
    max_passes: usize,
    seed: u64,
) -> Result<SvmModel> {
    validate_training_set(features, labels)?;
    assert!(c > 0.0, "regularization c must be positive");
    assert!(tol > 0.0, "tolerance must be positive");

    let scaler = fit_scaler(features)?;
    let scaled: Vec<Vec<f64>> = features
        .iter()
        .map(|f| scaler.transform(f))
        .collect::<Result<_>>()?;

    let n = scaled.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel_eval(&kernel, &scaled[i], &scaled[j])?;
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }

    let mut solver = Solver {
        gram,
        n,
        y: labels,
        alpha: vec![0.0; n],
        b: 0.0,
        c,
        tol,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quiet_passes = 0usize;
    let sweep_cap = 200 * max_passes.max(1) + 1000;
    let mut sweeps = 0usize;
    while quiet_passes < max_passes.max(1) && sweeps < sweep_cap {
        sweeps += 1;
        let mut changed = 0usize;
        for i in 0..n {
            if !solver.violates_kkt(i) {
                continue;
            }
            // second choice: random partner, retried a few times
            for _ in 0..n.min(16) {
                let j = rng.random_range(0..n);
                if solver.step(i, j) {
                    changed += 1;
                    break;
                }
            }
        }
        if changed == 0 {
            quiet_passes += 1;
            // a quiet sweep with outstanding violations must not terminate
            if quiet_passes >= max_passes && (0..n).any(|i| solver.violates_kkt(i)) {
                quiet_passes = 0;
            }
        } else {
            quiet_passes = 0;
        }
    }

    let support = scaled
        .iter()
        .zip(labels)
        .zip(&solver.alpha)
        .filter(|(_, &a)| a > 0.0)
        .map(|((v, &label), &alpha)| SupportVector { vector: v.clone(), label, alpha })
        .collect();

    Ok(SvmModel {
        kernel,
        scaler,
        bias: solver.b,
        weights: SolverWeights::Support(support),
        c,
        seed,
    })
}

/// Per-point KKT residuals of a trained SMO model against its training set:
/// max(0, 1 - y f(x)) for alpha = 0, |y f(x) - 1| for interior alphas, and
/// max(0, y f(x) - 1) for alpha = C. All residuals are <= tol at convergence.
pub fn kkt_residuals(model: &SvmModel, features: &[Vec<f64>], labels: &[i8]) -> Result<Vec<f64>> {
    let support = match &model.weights {
        SolverWeights::Support(s) => s,
        SolverWeights::Linear(_) => return Err(crate::error::Error::Model(
            "KKT residuals require an SMO support-set model".into(),
        )),
    };
    let mut out = Vec::with_capacity(features.len());
    for (x, &y) in features.iter().zip(labels) {
        let yf = y as f64 * model.decision_value(x)?;
        let scaled = model.scaler.transform(x)?;
        let alpha = support
            .iter()
            .find(|sv| sv.vector == scaled && sv.label == y)
            .map(|sv| sv.alpha)
            .unwrap_or(0.0);
        let r = if alpha <= 0.0 {
            (1.0 - yf).max(0.0)
        } else if alpha >= model.c {
            (yf - 1.0).max(0.0)
        } else {
            (yf - 1.0).abs()
        };
        out.push(r);
    }
    Ok(out)
}
