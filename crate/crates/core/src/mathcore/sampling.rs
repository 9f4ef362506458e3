use rand_distr::{Beta, Distribution};

use super::RngStream;
use crate::error::{ensure, Result};

/// One draw from `Beta(alpha, beta)`, strictly inside `(0, 1)`.
pub fn sample_beta(alpha: f64, beta: f64, rng: &mut RngStream) -> Result<f64> {
    ensure!(
        alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite(),
        "beta parameters must be positive, got ({alpha}, {beta})"
    );
    let dist = Beta::new(alpha, beta).expect("validated parameters");
    loop {
        let x: f64 = dist.sample(rng);
        if x > 0.0 && x < 1.0 {
            return Ok(x);
        }
    }
}

/// Draws `k` distinct indices; each draw picks among the remaining indices
/// with probability proportional to their weights.
pub fn weighted_sample_without_replacement(
    weights: &[f64],
    k: usize,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    ensure!(
        weights.iter().all(|w| *w >= 0.0 && w.is_finite()),
        "weights must be finite and non-negative"
    );
    let positive = weights.iter().filter(|w| **w > 0.0).count();
    ensure!(
        k <= positive,
        "cannot draw {k} items from {positive} positive weights"
    );
    let mut remaining: Vec<f64> = weights.to_vec();
    let mut total: f64 = remaining.iter().sum();
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let target = rng.uniform() * total;
        let mut acc = 0.0;
        let mut choice = None;
        for (i, w) in remaining.iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            acc += w;
            choice = Some(i);
            if target < acc {
                break;
            }
        }
        // rounding can leave `target` just past the last cumulative sum;
        // the last positive index is the right pick then
        let i = choice.expect("positive weight remains");
        picked.push(i);
        remaining[i] = 0.0;
        // re-summing avoids drift from repeated subtraction
        total = remaining.iter().sum();
    }
    Ok(picked)
}
