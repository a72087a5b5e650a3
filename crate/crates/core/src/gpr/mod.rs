//! Gaussian-process surrogate of the behavior function: isotropic RBF
//! kernel on unit-cube inputs, zero prior mean.

mod acquisition;
mod cholesky;
mod fit;

pub use acquisition::{expected_improvement, normal_cdf, normal_pdf};
pub use cholesky::Cholesky;
pub use fit::{fit, FitResult, SearchBox};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ParameterBox, ParameterVector};
use crate::error::{Error, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub sigma_n: f64,
    pub length_scale: f64,
    pub sigma_l: f64,
}

impl Hyperparameters {
    pub fn new(sigma_n: f64, length_scale: f64, sigma_l: f64) -> Result<Self> {
        let h = Hyperparameters {
            sigma_n,
            length_scale,
            sigma_l,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_n", self.sigma_n),
            ("length_scale", self.length_scale),
            ("sigma_l", self.sigma_l),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn to_log(&self) -> [f64; 3] {
        [self.sigma_n.ln(), self.length_scale.ln(), self.sigma_l.ln()]
    }

    pub fn from_log(v: [f64; 3]) -> Self {
        Hyperparameters {
            sigma_n: v[0].exp(),
            length_scale: v[1].exp(),
            sigma_l: v[2].exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mean: f64,
    pub std: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn kernel(x: &[f64], y: &[f64], hyper: &Hyperparameters) -> f64 {
    kernel_sq(squared_distance(x, y), hyper)
}

fn kernel_sq(d2: f64, hyper: &Hyperparameters) -> f64 {
    hyper.sigma_l * hyper.sigma_l * (-d2 / (2.0 * hyper.length_scale * hyper.length_scale)).exp()
}

/// Row-major pairwise squared distances.
pub(crate) fn squared_distances(inputs: &[Vec<f64>]) -> Vec<f64> {
    let n = inputs.len();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let v = squared_distance(&inputs[i], &inputs[j]);
            d2[i * n + j] = v;
            d2[j * n + i] = v;
        }
    }
    d2
}

/// Factor `K + σ_n² I + jitter I`, escalating the jitter on failure.
pub(crate) fn factor_covariance(d2: &[f64], n: usize, hyper: &Hyperparameters) -> Result<(Cholesky, f64)> {
    let signal = hyper.sigma_l * hyper.sigma_l;
    let noise = hyper.sigma_n * hyper.sigma_n;
    let scale = -0.5 / (hyper.length_scale * hyper.length_scale);
    // the factorization reads the lower triangle only
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            k[i * n + j] = signal * (d2[i * n + j] * scale).exp();
        }
        k[i * n + i] = signal;
    }
    let mut jitter = JITTER_START * signal;
    loop {
        let mut m = k.clone();
        for i in 0..n {
            m[i * n + i] += noise + jitter;
        }
        if let Some(c) = Cholesky::factor(m, n) {
            return Ok((c, jitter));
        }
        jitter *= 10.0;
        if jitter > JITTER_LIMIT * signal * (1.0 + 1e-9) {
            return Err(Error::NotPositiveDefinite);
        }
    }
}

pub(crate) fn nlml_from_factor(chol: &Cholesky, targets: &[f64]) -> f64 {
    let n = targets.len() as f64;
    let mut y = targets.to_vec();
    chol.solve_lower(&mut y);
    0.5 * y.iter().map(|v| v * v).sum::<f64>() + 0.5 * chol.log_det() + 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

fn check_training(inputs: &[Vec<f64>], targets: &[f64]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::InvalidInput("at least one training point required".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            found: targets.len(),
        });
    }
    let d = inputs[0].len();
    if let Some(bad) = inputs.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    Ok(())
}

/// Negative log marginal likelihood of `targets` under the prior with
/// `hyper`; lower is better.
pub fn nlml(hyper: &Hyperparameters, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    hyper.validate()?;
    check_training(inputs, targets)?;
    let (chol, _) = factor_covariance(&squared_distances(inputs), inputs.len(), hyper)?;
    Ok(nlml_from_factor(&chol, targets))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    space: ParameterBox,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    hyper: Hyperparameters,
    chol: Cholesky,
    alpha: Vec<f64>,
    jitter: f64,
}

impl GpModel {
    /// Condition on `thetas` (in parameter units) and `targets`.
    pub fn new(
        space: ParameterBox,
        thetas: &[ParameterVector],
        targets: Vec<f64>,
        hyper: Hyperparameters,
    ) -> Result<Self> {
        let inputs = thetas.iter().map(|t| space.to_unit(t)).collect();
        Self::from_unit(space, inputs, targets, hyper)
    }

    /// Condition on inputs already mapped to the unit cube of `space`.
    pub fn from_unit(
        space: ParameterBox,
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        hyper: Hyperparameters,
    ) -> Result<Self> {
        hyper.validate()?;
        check_training(&inputs, &targets)?;
        if inputs[0].len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: inputs[0].len(),
            });
        }
        let (chol, jitter) = factor_covariance(&squared_distances(&inputs), inputs.len(), &hyper)?;
        let alpha = chol.solve(&targets);
        Ok(GpModel {
            space,
            inputs,
            targets,
            hyper,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn space(&self) -> &ParameterBox {
        &self.space
    }

    pub fn hyper(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn nlml(&self) -> f64 {
        nlml_from_factor(&self.chol, &self.targets)
    }

    pub fn predict(&self, theta: &[f64]) -> Posterior {
        self.predict_unit(&self.space.to_unit(theta))
    }

    pub fn predict_unit(&self, u: &[f64]) -> Posterior {
        let mut k: Vec<f64> = self.inputs.iter().map(|x| kernel(x, u, &self.hyper)).collect();
        let mean = k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        self.chol.solve_lower(&mut k);
        let prior = self.hyper.sigma_l * self.hyper.sigma_l;
        let var = prior - k.iter().map(|v| v * v).sum::<f64>();
        Posterior {
            mean,
            std: var.max(0.0).sqrt(),
        }
    }
}
