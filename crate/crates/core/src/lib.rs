//! Parking availability forecasting toolkit.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`ingest`]: parse and clean raw parking stays and multi-modal trip records
//! - [`preprocess`]: availability series on a fixed grid, Fourier low-pass, windowing, zone split
//! - [`pcz`]: parking cluster zones (k-means + Minkowski buffers) and per-zone demand fusion
//! - [`model`]: dense tensors with reverse-mode differentiation and the Transformer encoder forecaster
//! - [`baselines`]: historical average, AR with differencing, NLinear
//! - [`eval`]: MSE/MAE/MAPE, parameter and MAC accounting, ablation and horizon sweeps
//! - [`synth`]: a synthetic city with known ground truth
//! - [`experiment`]: config-driven orchestration used by the `parkcast` binary
//!
//! See `examples/` for one runnable program per capability.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod ingest;
pub mod model;
pub mod pcz;
pub mod preprocess;
pub mod synth;
pub mod time;

pub use error::{Error, Result};
pub use time::Timestamp;
