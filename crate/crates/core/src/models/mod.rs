//! Desk-scale softmax classifiers with hand-derived gradients.

mod classifier;
mod io;

pub use classifier::{
    loss_and_grads, sgd_update, softmax_ce, Classifier, ClassifierKind, Forward, GradSet, LastLayer,
};
pub use io::{read_classifier, write_classifier, MODEL_MAGIC, MODEL_VERSION};
