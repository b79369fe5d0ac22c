//! Uncertainty-aware conformalized quantile regression.
//!
//! The crate is organised bottom-up:
//!
//! - [`data`]: CSV loading, seeded train/calibration/test splits and response transforms.
//! - [`qrf`]: a quantile regression forest whose leaves keep their training indices.
//! - [`ensemble`]: aggregation, dispersion and order statistics of per-member quantiles.
//! - [`conformal`]: nested split-conformal scores, calibration (deterministic and
//!   randomized) and interval construction for every supported method.
//! - [`metrics`]: coverage, width, interval score loss and conditional coverage.
//! - [`pipeline`]: glue that turns a fitted forest into calibrated bands.
//! - [`sim`]: the Beta/sine synthetic benchmark with closed-form oracle intervals.

pub mod conformal;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod normal;
pub mod pipeline;
pub mod qrf;
pub mod quantile;
pub mod sim;

pub use conformal::{CalibratedModel, IntervalBand, Method, RandomizedCutoff, ScoreIngredients};
pub use data::{DataSplit, Dataset, SplitFractions, TransformKind, TransformSpec};
pub use ensemble::{DispersionKind, EnsembleQuantiles, TargetQuantiles};
pub use error::{Error, Result};
pub use metrics::EvaluationReport;
pub use qrf::{ForestModel, ForestParams};
