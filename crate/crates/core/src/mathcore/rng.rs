use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

/// Seeded, splittable random stream.
///
/// A child stream's seed depends only on the root seed and the chain of
/// split tags, never on how many values the parent has drawn.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    lineage: Vec<String>,
    rng: ChaCha8Rng,
}

fn derive_key(seed: u64, lineage: &[String]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for tag in lineage {
        h.update((tag.len() as u64).to_le_bytes());
        h.update(tag.as_bytes());
    }
    h.finalize().into()
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            lineage: Vec::new(),
            rng: ChaCha8Rng::from_seed(derive_key(seed, &[])),
        }
    }

    /// Independent child stream named `tag`.
    pub fn split(&self, tag: &str) -> Self {
        let mut lineage = self.lineage.clone();
        lineage.push(tag.to_owned());
        Self {
            seed: self.seed,
            rng: ChaCha8Rng::from_seed(derive_key(self.seed, &lineage)),
            lineage,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lineage(&self) -> &[String] {
        &self.lineage
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `[0, n)`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// A shuffled `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_tags_diverge() {
        let s = RngStream::new(7);
        let mut a = s.split("a");
        let mut b = s.split("b");
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
        assert_eq!(a.lineage(), &["a".to_string()]);
    }

    #[test]
    fn split_ignores_parent_draws() {
        let s = RngStream::new(3);
        let mut drawn = s.clone();
        drawn.uniform();
        let mut x = s.split("k");
        let mut y = drawn.split("k");
        assert_eq!(x.next_u64(), y.next_u64());
    }

    #[test]
    fn golden_uniform_draws_seed_zero() {
        let mut s = RngStream::new(0);
        let got: Vec<f64> = (0..5).map(|_| s.uniform()).collect();
        let want = GOLDEN_SEED0;
        assert_eq!(got, want, "{got:?}");
    }

    // Captured once from ChaCha8 keyed by sha256(seed=0).
    const GOLDEN_SEED0: [f64; 5] = [
        0.2908782594730358,
        0.8788404604372305,
        0.1764257306433208,
        0.7605647669455482,
        0.17901839437552547,
    ];
}
