use crate::error::{ensure, Result};

/// Probability floor used by [`cross_entropy`] and the confusion-layer loss.
pub const EPS_FLOOR: f64 = 1e-12;

/// A probability vector: non-negative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec(Vec<f64>);

impl ProbVec {
    /// Wraps `values` after checking they form a distribution (tolerance 1e-6).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        ensure!(
            values.iter().all(|v| *v >= 0.0 && v.is_finite()),
            "probabilities must be finite and non-negative"
        );
        let sum: f64 = values.iter().sum();
        ensure!((sum - 1.0).abs() <= 1e-6, "probabilities sum to {sum}, not 1");
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for ProbVec {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> ProbVec {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    ProbVec(out)
}

/// `-ln(max(p[label], EPS_FLOOR))`.
pub fn cross_entropy(p: &[f64], label: usize) -> Result<f64> {
    ensure!(
        label < p.len(),
        "label {label} out of range for {} classes",
        p.len()
    );
    Ok(-p[label].max(EPS_FLOOR).ln())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
