#![allow(dead_code)]

use ccc_core::annosim::{build_pool, generate, Preset};
use ccc_core::crowddata::{make_blobs, Annotation};
use ccc_core::trainers::ConfusionSet;
use ccc_core::{CrowdDataset, Matrix, RngStream};

/// Random dataset where every instance gets 1..=r labels.
pub fn random_dataset(n: usize, d: usize, c: usize, r: usize, rng: &mut RngStream) -> CrowdDataset {
    let features: Vec<f64> = (0..n * d).map(|_| rng.normal()).collect();
    let mut anns = Vec::new();
    let truth: Vec<usize> = (0..n).map(|_| rng.below(c)).collect();
    for i in 0..n {
        let order = rng.permutation(r);
        let k = 1 + rng.below(r);
        for &a in &order[..k] {
            anns.push(Annotation {
                instance: i,
                annotator: a,
                label: rng.below(c),
            });
        }
    }
    CrowdDataset::new(Matrix::from_vec(n, d, features).unwrap(), c, r, anns, Some(truth)).unwrap()
}

/// Row-stochastic matrices with entries bounded away from zero.
pub fn random_confusions(r: usize, c: usize, rng: &mut RngStream) -> ConfusionSet {
    let t = (0..r)
        .map(|_| {
            let rows: Vec<Vec<f64>> = (0..c)
                .map(|_| {
                    let raw: Vec<f64> = (0..c).map(|_| 0.2 + rng.uniform()).collect();
                    let s: f64 = raw.iter().sum();
                    raw.into_iter().map(|v| v / s).collect()
                })
                .collect();
            Matrix::from_rows(&rows).unwrap()
        })
        .collect();
    ConfusionSet::from_matrices(t)
}

/// Blobs with a preset pool of `5 * per_group` annotators.
pub fn blobs_crowd(n: usize, preset: &str, per_group: usize, k: usize, seed: u64) -> CrowdDataset {
    let root = RngStream::new(seed);
    let (x, y) = make_blobs(n, 10, 16, 0.3, &mut root.split("blobs")).unwrap();
    let (specs, groups) = Preset::by_name(preset).unwrap().expand(per_group);
    let pool = build_pool(specs, Some(groups), 10, k, 2.0, 2.0, &root.split("pool")).unwrap();
    generate(&y, x, &pool, &root.split("labels")).unwrap()
}
