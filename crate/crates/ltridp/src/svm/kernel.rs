use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Quadratic,
    Cubic,
    Gaussian,
}

/// Kernel function selector. `gamma` applies to the gaussian kernel,
/// `coef0` to the polynomial (quadratic/cubic) kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    pub coef0: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self { kind: KernelKind::Linear, gamma: 0.0, coef0: 0.0 }
    }

    pub fn quadratic(coef0: f64) -> Self {
        Self { kind: KernelKind::Quadratic, gamma: 0.0, coef0 }
    }

    pub fn cubic(coef0: f64) -> Self {
        Self { kind: KernelKind::Cubic, gamma: 0.0, coef0 }
    }

    pub fn gaussian(gamma: f64) -> Self {
        assert!(gamma > 0.0, "gaussian gamma must be positive");
        Self { kind: KernelKind::Gaussian, gamma, coef0: 0.0 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn kernel_eval(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch { expected: a.len(), got: b.len() });
    }
    Ok(match spec.kind {
        KernelKind::Linear => dot(a, b),
        KernelKind::Quadratic => (dot(a, b) + spec.coef0).powi(2),
        KernelKind::Cubic => (dot(a, b) + spec.coef0).powi(3),
        KernelKind::Gaussian => {
            let dist_sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (-spec.gamma * dist_sq).exp()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_is_dot_product() {
        let k = KernelSpec::linear();
        assert_eq!(kernel_eval(&k, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
    }

    #[test]
    fn quadratic_with_coef0() {
        let k = KernelSpec::quadratic(1.0);
        assert_eq!(kernel_eval(&k, &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 4.0);
    }

    #[test]
    fn cubic_with_coef0() {
        let k = KernelSpec::cubic(1.0);
        assert_eq!(kernel_eval(&k, &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 8.0);
    }

    #[test]
    fn gaussian_at_zero_distance() {
        let k = KernelSpec::gaussian(0.5);
        let v = vec![1.5, -2.0, 3.0];
        assert_eq!(kernel_eval(&k, &v, &v).unwrap(), 1.0);
    }

    #[test]
    fn dim_mismatch_rejected() {
        let k = KernelSpec::linear();
        assert!(kernel_eval(&k, &[1.0], &[1.0, 2.0]).is_err());
    }
}
