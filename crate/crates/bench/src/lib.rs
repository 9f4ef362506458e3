//! Criterion benchmarks for the hot kernels; see `benches/kernels.rs`.

use ccc_core::annosim::{build_pool, generate, Preset};
use ccc_core::crowddata::make_blobs;
use ccc_core::{CrowdDataset, RngStream};

/// A small simulated dataset shared by the benchmarks.
pub fn bench_dataset(n: usize, per_group: usize) -> CrowdDataset {
    let root = RngStream::new(7);
    let (features, truth) = make_blobs(n, 10, 16, 0.3, &mut root.split("blobs")).expect("blobs");
    let preset = Preset::by_name("IND-I").expect("preset");
    let (specs, groups) = preset.expand(per_group);
    let pool = build_pool(specs, Some(groups), 10, 1, 2.0, 2.0, &root.split("pool")).expect("pool");
    generate(&truth, features, &pool, &root.split("labels")).expect("generate")
}
