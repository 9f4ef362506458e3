//! Learning from sparse crowd annotations.
//!
//! The crate covers the full loop: simulating annotator pools with
//! confusion patterns and Beta-distributed labeling propensities
//! ([`annosim`]), storing and diagnosing crowd datasets ([`crowddata`]),
//! and training softmax classifiers ([`models`]) with majority vote,
//! CrowdLayer, or coupled confusion correction ([`trainers`]).

pub mod annosim;
pub mod crowddata;
mod error;
pub mod mathcore;
pub mod models;
pub mod trainers;

pub use crowddata::{CrowdDataset, MetaSet};
pub use error::{Error, Result};
pub use mathcore::{Matrix, ProbVec, RngStream};
pub use models::{Classifier, ClassifierKind};
pub use trainers::{Algo, RunResult, TrainConfig};
