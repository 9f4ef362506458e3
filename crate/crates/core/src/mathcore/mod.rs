//! Numerical foundation: dense matrices, seeded randomness, softmax and
//! cross-entropy, Beta and weighted sampling, and k-means clustering.

mod kmeans;
mod matrix;
mod ops;
mod rng;
mod sampling;

pub use kmeans::{kmeans, KmeansResult};
pub use matrix::Matrix;
pub use ops::{argmax, cross_entropy, softmax, ProbVec, EPS_FLOOR};
pub use rng::RngStream;
pub use sampling::{sample_beta, weighted_sample_without_replacement};
