//! Stability benchmarking for feature-selection algorithms over random forests.
//!
//! The pipeline is: build a [`data::LabeledDataset`], split it, fit a
//! [`forest::ForestModel`] on the train rows, score features on the
//! validation rows with MDA, LIME or SHAP ([`explain`]), then turn the
//! repeated scores into ranks and an instability index ([`stability`]).
//! Selected features are re-evaluated out of sample in [`select_eval`], and
//! [`metalabel`] applies the selection to trade vetoing.

pub mod cli;
pub mod data;
pub mod error;
pub mod explain;
pub mod forest;
pub mod metalabel;
pub mod rng;
pub mod select_eval;
pub mod stability;

pub use error::{Error, ErrorKind, Result};

pub mod prelude {
    pub use crate::data::{FeatureProvenance, LabeledDataset, Provenance, SplitIndices, Task};
    pub use crate::error::{Error, Result};
    pub use crate::explain::{Algorithm, ExplainerConfig, ImportanceMatrix, Predictor};
    pub use crate::forest::{ForestConfig, ForestModel, MaxFeatures};
    pub use crate::select_eval::{MetricsReport, SelectionResult};
    pub use crate::stability::{RankMatrix, StabilityReport};
}
