//! Hyperparameter search: coordinate-wise golden-section refinement in log
//! space from quasi-random starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training, factor_covariance, nlml_from_factor, squared_distances, Hyperparameters};
use crate::error::{Error, Result};

const GOLDEN_TOL: f64 = 1e-2;
const MAX_CYCLES: usize = 8;
const PRIMES: [u64; 3] = [2, 3, 5];

/// Bounds on σ_n, l and σ_l (inclusive, positive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub sigma_n: (f64, f64),
    pub length_scale: (f64, f64),
    pub sigma_l: (f64, f64),
}

impl SearchBox {
    /// Default bounds; the σ_l range scales with the spread of `targets`.
    pub fn default_for(targets: &[f64]) -> Self {
        SearchBox {
            sigma_n: (1e-4, 0.5),
            length_scale: (0.01, 2.0),
            sigma_l: (0.05, 3.0 * target_range(targets) + 0.05),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("sigma_n", self.sigma_n),
            ("length_scale", self.length_scale),
            ("sigma_l", self.sigma_l),
        ] {
            if !(lo > 0.0 && lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParameter(format!(
                    "{name} bounds must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, h: &Hyperparameters) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12);
        inside(h.sigma_n, self.sigma_n) && inside(h.length_scale, self.length_scale) && inside(h.sigma_l, self.sigma_l)
    }

    fn log_bounds(&self) -> [(f64, f64); 3] {
        [self.sigma_n, self.length_scale, self.sigma_l].map(|(lo, hi)| (lo.ln(), hi.ln()))
    }

    /// Geometric centre of the box.
    pub fn centre(&self) -> Hyperparameters {
        Hyperparameters::from_log(self.log_bounds().map(|(lo, hi)| 0.5 * (lo + hi)))
    }
}

pub(crate) fn target_range(targets: &[f64]) -> f64 {
    let max = targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = targets.iter().cloned().fold(f64::INFINITY, f64::min);
    if targets.is_empty() {
        0.0
    } else {
        max - min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub hyper: Hyperparameters,
    pub nlml: f64,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// Halton points with a seeded random shift (mod 1).
fn starts(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 3] = [rng.random(), rng.random(), rng.random()];
    (1..=n as u64)
        .map(|i| {
            let mut p = [0.0; 3];
            for d in 0..3 {
                p[d] = (radical_inverse(i, PRIMES[d]) + shift[d]).fract();
            }
            p
        })
        .collect()
}

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn local_search<F: Fn([f64; 3]) -> f64>(f: &F, mut x: [f64; 3], bounds: &[(f64, f64); 3]) -> ([f64; 3], f64) {
    let mut fx = f(x);
    let mut radius = bounds.map(|(lo, hi)| 0.25 * (hi - lo));
    for _ in 0..MAX_CYCLES {
        let before = fx;
        for d in 0..3 {
            let (lo, hi) = bounds[d];
            if hi - lo <= GOLDEN_TOL {
                continue;
            }
            let a = (x[d] - radius[d]).max(lo);
            let b = (x[d] + radius[d]).min(hi);
            let (t, ft) = golden(
                |t| {
                    let mut y = x;
                    y[d] = t;
                    f(y)
                },
                a,
                b,
            );
            let at_edge = (t - a < 2.0 * GOLDEN_TOL && a > lo) || (b - t < 2.0 * GOLDEN_TOL && b < hi);
            if ft < fx {
                x[d] = t;
                fx = ft;
            }
            if !at_edge {
                radius[d] = (0.5 * radius[d]).max(4.0 * GOLDEN_TOL);
            }
        }
        if before - fx <= 1e-6 * (1.0 + fx.abs()) {
            break;
        }
    }
    (x, fx)
}

/// Minimise the negative log marginal likelihood over `search_box`.
/// Deterministic for a given `seed`; ties go to the earliest start.
pub fn fit(
    inputs: &[Vec<f64>],
    targets: &[f64],
    search_box: &SearchBox,
    n_starts: usize,
    seed: u64,
) -> Result<FitResult> {
    check_training(inputs, targets)?;
    if inputs.len() < 2 {
        return Err(Error::InvalidInput("fitting needs at least two training points".into()));
    }
    if n_starts == 0 {
        return Err(Error::InvalidInput("n_starts must be at least 1".into()));
    }
    search_box.validate()?;
    let n = inputs.len();
    let d2 = squared_distances(inputs);
    let objective = |v: [f64; 3]| -> f64 {
        match factor_covariance(&d2, n, &Hyperparameters::from_log(v)) {
            Ok((chol, _)) => nlml_from_factor(&chol, targets),
            Err(_) => f64::INFINITY,
        }
    };
    let bounds = search_box.log_bounds();
    let results: Vec<([f64; 3], f64)> = starts(n_starts, seed)
        .par_iter()
        .map(|u| {
            let x0 = [0, 1, 2].map(|d| bounds[d].0 + u[d] * (bounds[d].1 - bounds[d].0));
            local_search(&objective, x0, &bounds)
        })
        .collect();
    let mut best: Option<([f64; 3], f64)> = None;
    for (x, fx) in results {
        if fx.is_finite() && best.is_none_or(|(_, fb)| fx < fb) {
            best = Some((x, fx));
        }
    }
    let (x, fx) = best.ok_or(Error::NotPositiveDefinite)?;
    Ok(FitResult {
        hyper: Hyperparameters::from_log(x),
        nlml: fx,
    })
}
