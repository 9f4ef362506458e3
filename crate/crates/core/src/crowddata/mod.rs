//! Crowd-annotated datasets: the in-memory model, the on-disk directory
//! format, desk-scale feature generation, and diagnostic metrics.
//!
//! Class and annotator indices are 0-based everywhere, including files.

mod blobs;
mod dataset;
mod io;
mod metrics;

pub use blobs::make_blobs;
pub use dataset::{Annotation, CrowdDataset, LabeledSplit, MetaSet};
pub use io::{
    load_dataset, read_labeled_csv, save_dataset, write_labeled_csv, FeaturesFormat, MetaJson,
    FORMAT_VERSION,
};
pub use metrics::{
    annotation_histogram, confusion_distance, dataset_stats, evaluate_accuracy, noise_rate_1,
    noise_rate_2, predict, true_confusion_matrix, DatasetStats,
};
