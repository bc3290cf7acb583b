//! Statistical toolkit for threaded-conversation corpora whose messages
//! carry precomputed classifier probability scores.
//!
//! Three levels of analysis share one regression core:
//!
//! * micro: matched causal inference on reply triples (treatment
//!   thresholds, Mahalanobis nearest-neighbor matching, double-adjusted
//!   outcome models, a bootstrap that propagates classifier error);
//! * meso: per-tree distributed-lag models pooled with random-effects
//!   meta-analysis and moderated by tree covariates;
//! * macro: daily-aggregate distributed-lag models with regime dummies,
//!   cointegration bounds tests, and regression diagnostics.
//!
//! Everything is deterministic given explicit seeds, and every estimator
//! is validated against synthetic corpora with known ground truth (see
//! the `synth` module and the integration tests).

pub mod ardl;
pub mod corpus;
pub mod error;
pub mod estimate;
pub mod matching;
pub mod meta;
pub mod synth;

pub use error::{CoreError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
