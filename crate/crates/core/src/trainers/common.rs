use crate::crowddata::CrowdDataset;
use crate::error::{contract, Result};
use crate::mathcore::{Matrix, RngStream};

/// Random stream owned by model `k` (0-based) of a run seeded with `seed`.
pub(crate) fn model_stream(seed: u64, k: usize) -> RngStream {
    RngStream::new(seed).split(&format!("model{k}"))
}

/// A shuffled partition of `0..n` into batches (last one may be short).
pub(crate) fn epoch_batches(n: usize, batch_size: usize, rng: &mut RngStream) -> Vec<Vec<usize>> {
    rng.permutation(n)
        .chunks(batch_size)
        .map(<[usize]>::to_vec)
        .collect()
}

/// Held-out split if present, otherwise the training features with truth.
pub fn eval_split(ds: &CrowdDataset) -> Result<(&Matrix, &[usize])> {
    if let Some(test) = &ds.test {
        return Ok((&test.features, &test.labels));
    }
    match ds.truth() {
        Some(t) => Ok((ds.features(), t)),
        None => contract("evaluation needs a test split or ground-truth labels"),
    }
}
