//! Issue close-time prediction from creation-time context.
//!
//! The pipeline: [`ingest`] extracts seven leakage-free features per issue,
//! [`targets`] turns close times into five binary targets, [`cfs`] picks a
//! feature subset (using [`discretize`]), [`tree`] learns a small decision
//! tree, and [`eval`] scores models by local cross-validation and
//! cross-project round-robin. [`pipeline`] wires it all to a config file.

pub mod cfs;
pub mod discretize;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod pipeline;
pub mod tabular;
pub mod targets;
pub mod tree;

pub use error::{Error, Result};
pub use tabular::{ConfusionCounts, Dataset, FeatureColumn, Label};
pub use targets::ThresholdSpec;
