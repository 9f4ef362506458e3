//! Synthetic crowd annotations: every annotator first labels every
//! instance according to its confusion pattern, then each instance keeps
//! the labels of `k` annotators drawn in proportion to per-annotator
//! Beta-distributed propensities.

mod generate;
mod pattern;
mod preset;

pub use generate::{build_pool, generate, generate_with_dense, AnnotatorPool, DenseLabels};
pub use pattern::{
    expected_error_rate, pattern_matrix, sample_correlated_label, sample_independent_label,
    PatternSpec,
};
pub use preset::{Preset, PRESET_NAMES};
