//! Automatic discovery of qualitatively distinct response regimes in
//! parametrised dynamical systems.
//!
//! Each parameter vector is simulated, its response reduced to an FFT
//! magnitude embedding, and the embeddings grouped by DBSCAN. The cluster
//! labels are regressed by a Gaussian process whose expected improvement
//! drives where to simulate next. Boundaries between regimes are the
//! half-integer level sets of the surrogate mean.

pub mod clustering;
pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod explorer;
pub mod gpr;

pub use clustering::{ClusterParams, Label, Labeling};
pub use dynamics::{Axis, Horizon, ParameterBox, ParameterVector, SystemKind, SystemSpec, TimeSeries};
pub use embedding::{EmbeddingConfig, EmbeddingVector};
pub use error::{Error, Result};
pub use explorer::{ExplorationConfig, Explorer, GpSettings, RunReport, Sampling, StopReason, StopRule};
pub use gpr::{GpModel, Hyperparameters, Posterior};
