//! Frequency-magnitude embedding of responses and the 2-D PCA projection
//! used to look at the embedding space.
//!
//! Each channel is trimmed of its leading transient, decimated to exactly
//! `n_f` samples, transformed, and reduced to bin magnitudes; channels are
//! concatenated in order. Magnitudes are left unnormalized: response
//! amplitude is a feature, not a nuisance.

mod fft;
mod pca;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};

pub use fft::fft_in_place;
pub use pca::{pca_project, PcaProjection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    /// Number of frequency bins per channel; a power of two.
    pub n_f: usize,
    /// Fraction of leading samples discarded before the transform.
    pub transient_fraction: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            n_f: 1024,
            transient_fraction: 0.0,
        }
    }
}

impl EmbeddingConfig {
    pub fn new(n_f: usize, transient_fraction: f64) -> Result<Self> {
        let cfg = EmbeddingConfig {
            n_f,
            transient_fraction,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_f == 0 || !self.n_f.is_power_of_two() {
            return Err(Error::InvalidEmbedding(format!(
                "n_f must be a power of two, got {}",
                self.n_f
            )));
        }
        if !(0.0..1.0).contains(&self.transient_fraction) {
            return Err(Error::InvalidEmbedding(format!(
                "transient_fraction must lie in [0, 1), got {}",
                self.transient_fraction
            )));
        }
        Ok(())
    }

    /// Samples kept after trimming a record of `len` samples.
    pub fn retained(&self, len: usize) -> usize {
        len - (self.transient_fraction * len as f64).floor() as usize
    }
}

/// Concatenated per-channel FFT magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for EmbeddingVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Magnitudes of the `n_f`-point DFT of one channel.
///
/// The leading `transient_fraction` of the record is dropped; if more than
/// `n_f` samples remain they are decimated with stride
/// `floor(remaining / n_f)` so the window spans the retained record.
pub fn fft_magnitude(samples: &[f64], cfg: &EmbeddingConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let start = samples.len() - cfg.retained(samples.len());
    let kept = &samples[start..];
    if kept.len() < cfg.n_f {
        return Err(Error::TooShort {
            needed: cfg.n_f,
            available: kept.len(),
        });
    }
    let stride = kept.len() / cfg.n_f;
    let mut buf: Vec<Complex64> = kept
        .iter()
        .step_by(stride)
        .take(cfg.n_f)
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    fft_in_place(&mut buf);
    Ok(buf.iter().map(|c| c.norm()).collect())
}

/// Project a response into the embedding space: per-channel magnitudes,
/// concatenated in channel order.
pub fn embed(ts: &TimeSeries, cfg: &EmbeddingConfig) -> Result<EmbeddingVector> {
    let mut out = Vec::with_capacity(ts.n_channels() * cfg.n_f);
    for channel in &ts.values {
        out.extend(fft_magnitude(channel, cfg)?);
    }
    Ok(EmbeddingVector(out))
}
