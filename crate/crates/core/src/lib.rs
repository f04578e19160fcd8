//! Panel econometrics engine for regional knowledge production functions.
//!
//! The crate covers the whole estimation pipeline:
//!
//! - [`panel`]: balanced region x year datasets, CSV ingestion and the
//!   variable transforms (deflation, logs, trailing averages, lead shifts).
//! - [`indicators`]: publication-level records aggregated into region-year
//!   FWCI and journal-quartile shares by full counting, plus thematic profiles.
//! - [`weights`]: thematic-proximity spatial weights and spatial-lag operators.
//! - [`estimator`]: design matrices, within (fixed-effects) transform, QR least
//!   squares, classical and cluster-robust covariance.
//! - [`suite`]: the dotted specification notation (`fe.tw.q.sl`, ...), model
//!   comparison tables and their renderers.
//! - [`simulator`]: a synthetic data-generating process and Monte Carlo
//!   harness for bias and coverage checks.

pub mod estimator;
pub mod indicators;
pub mod panel;
pub mod simulator;
pub mod suite;
pub mod weights;

mod error;
mod fmt;

pub use error::{Error, Result};
pub use fmt::format_f64;
