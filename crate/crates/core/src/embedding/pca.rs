use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of [`pca_project`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    /// One `k`-vector per input, in input order.
    pub coordinates: Vec<Vec<f64>>,
    /// Fraction of total variance carried by each component.
    pub explained_variance: Vec<f64>,
    /// Set when every input vector is identical; coordinates are then zero.
    pub degenerate: bool,
}

/// Project vectors onto their top-`k` principal axes.
///
/// Axes are eigenvectors of the sample covariance, ordered by decreasing
/// eigenvalue, with the sign fixed so the first nonzero component of each
/// axis is positive. When the dimension exceeds the number of vectors the
/// eigenproblem is solved on the (smaller) Gram matrix and mapped back.
pub fn pca_project<V: AsRef<[f64]>>(vectors: &[V], k: usize) -> Result<PcaProjection> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("PCA needs at least 2 vectors, got {n}")));
    }
    let m = vectors[0].as_ref().len();
    for v in vectors {
        if v.as_ref().len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: v.as_ref().len(),
            });
        }
    }
    if k == 0 || k > n.min(m) {
        return Err(Error::InvalidInput(format!(
            "k = {k} must lie in 1..={} for {n} vectors of dimension {m}",
            n.min(m)
        )));
    }

    let mut mean = vec![0.0; m];
    for v in vectors {
        for (acc, x) in mean.iter_mut().zip(v.as_ref()) {
            *acc += x;
        }
    }
    mean.iter_mut().for_each(|x| *x /= n as f64);
    let centered = DMatrix::from_fn(n, m, |i, j| vectors[i].as_ref()[j] - mean[j]);
    let scale = 1.0 / (n - 1) as f64;

    let (values, axes): (Vec<f64>, Vec<Vec<f64>>) = if m <= n {
        let cov = centered.transpose() * &centered * scale;
        let eig = SymmetricEigen::new(cov);
        let order = descending(eig.eigenvalues.as_slice());
        let values = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let axes = order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (values, axes)
    } else {
        let gram = &centered * centered.transpose() * scale;
        let eig = SymmetricEigen::new(gram);
        let order = descending(eig.eigenvalues.as_slice());
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let axes = order
            .iter()
            .map(|&i| {
                let u = centered.transpose() * eig.eigenvectors.column(i);
                let norm = u.norm();
                if norm > 0.0 {
                    u.iter().map(|x| x / norm).collect()
                } else {
                    vec![0.0; m]
                }
            })
            .collect();
        (values, axes)
    };

    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Ok(PcaProjection {
            coordinates: vec![vec![0.0; k]; n],
            explained_variance: vec![0.0; k],
            degenerate: true,
        });
    }

    let floor = values[0] * 1e-12;
    let axes: Vec<Vec<f64>> = axes
        .into_iter()
        .zip(&values)
        .take(k)
        .map(|(axis, &value)| {
            if value <= floor {
                vec![0.0; m]
            } else {
                fix_sign(axis)
            }
        })
        .collect();

    let coordinates = (0..n)
        .map(|i| {
            axes.iter()
                .map(|axis| centered.row(i).iter().zip(axis).map(|(x, u)| x * u).sum())
                .collect()
        })
        .collect();

    Ok(PcaProjection {
        coordinates,
        explained_variance: values.iter().take(k).map(|v| v / total).collect(),
        degenerate: false,
    })
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

fn fix_sign(mut axis: Vec<f64>) -> Vec<f64> {
    let biggest = axis.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = axis.iter().find(|x| x.abs() > 1e-9 * biggest) {
        if *first < 0.0 {
            axis.iter_mut().for_each(|x| *x = -*x);
        }
    }
    axis
}
