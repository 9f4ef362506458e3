use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::pattern::sample_row;
use super::{pattern_matrix, sample_correlated_label, PatternSpec};
use crate::crowddata::{Annotation, CrowdDataset};
use crate::error::{ensure, Error, Result};
use crate::mathcore::{sample_beta, weighted_sample_without_replacement, Matrix, RngStream};

/// Simulated annotators ready to label a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatorPool {
    pub specs: Vec<PatternSpec>,
    /// Independent annotator copied/consulted by each correlated annotator.
    pub targets: Vec<Option<usize>>,
    /// Selection weight of each annotator.
    pub propensities: Vec<f64>,
    /// Generator group of each annotator (which pattern it was built from).
    pub groups: Vec<usize>,
    pub class_count: usize,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl AnnotatorPool {
    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }
}

/// Draws propensities and correlated targets for `specs`.
///
/// `groups` labels each annotator with its generator group; pass `None` to
/// number groups by distinct pattern in order of first appearance.
pub fn build_pool(
    specs: Vec<PatternSpec>,
    groups: Option<Vec<usize>>,
    class_count: usize,
    k: usize,
    alpha: f64,
    beta: f64,
    rng: &RngStream,
) -> Result<AnnotatorPool> {
    let r = specs.len();
    ensure!(r >= 1, "annotator pool is empty");
    ensure!(k >= 1 && k <= r, "k = {k} must lie in [1, {r}]");
    let independent: Vec<usize> = (0..r).filter(|&i| !specs[i].is_correlated()).collect();
    ensure!(
        !independent.is_empty() || specs.iter().all(|s| !s.is_correlated()),
        "correlated annotators need at least one independent annotator to follow"
    );
    for s in specs.iter().filter(|s| !s.is_correlated()) {
        pattern_matrix(s, class_count)?;
    }
    let groups = match groups {
        Some(g) => {
            ensure!(g.len() == r, "{} group labels for {r} annotators", g.len());
            g
        }
        None => {
            let mut seen: Vec<&PatternSpec> = Vec::new();
            specs
                .iter()
                .map(|s| match seen.iter().position(|t| *t == s) {
                    Some(g) => g,
                    None => {
                        seen.push(s);
                        seen.len() - 1
                    }
                })
                .collect()
        }
    };
    let mut prop_rng = rng.split("propensity");
    let propensities = (0..r)
        .map(|_| sample_beta(alpha, beta, &mut prop_rng))
        .collect::<Result<Vec<_>>>()?;
    let mut target_rng = rng.split("targets");
    let targets = specs
        .iter()
        .map(|s| {
            s.is_correlated()
                .then(|| independent[target_rng.below(independent.len())])
        })
        .collect();
    Ok(AnnotatorPool {
        specs,
        targets,
        propensities,
        groups,
        class_count,
        k,
        alpha,
        beta,
    })
}

/// Phase-one labels: `labels[i * r + a]` is annotator `a`'s label for `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLabels {
    pub instances: usize,
    pub annotators: usize,
    pub labels: Vec<u16>,
}

impl DenseLabels {
    pub fn get(&self, instance: usize, annotator: usize) -> usize {
        self.labels[instance * self.annotators + annotator] as usize
    }

    /// Writes `instance,annotator,label` for every dense label.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        (|| {
            writeln!(w, "instance,annotator,label")?;
            for i in 0..self.instances {
                for a in 0..self.annotators {
                    writeln!(w, "{i},{a},{}", self.get(i, a))?;
                }
            }
            w.flush()
        })()
        .map_err(|e| Error::io(path, e))
    }
}

/// Simulates crowd labels for `truth` and keeps `k` per instance.
pub fn generate(
    truth: &[usize],
    features: Matrix,
    pool: &AnnotatorPool,
    rng: &RngStream,
) -> Result<CrowdDataset> {
    generate_inner(truth, features, pool, rng, false).map(|(ds, _)| ds)
}

/// [`generate`], also returning the phase-one labels of every annotator.
pub fn generate_with_dense(
    truth: &[usize],
    features: Matrix,
    pool: &AnnotatorPool,
    rng: &RngStream,
) -> Result<(CrowdDataset, DenseLabels)> {
    generate_inner(truth, features, pool, rng, true)
        .map(|(ds, dense)| (ds, dense.expect("requested")))
}

fn generate_inner(
    truth: &[usize],
    features: Matrix,
    pool: &AnnotatorPool,
    rng: &RngStream,
    keep_dense: bool,
) -> Result<(CrowdDataset, Option<DenseLabels>)> {
    let n = truth.len();
    let r = pool.len();
    let c = pool.class_count;
    ensure!(n >= 1, "truth is empty");
    ensure!(
        features.rows() == n,
        "{} feature rows for {n} labels",
        features.rows()
    );
    ensure!(pool.k <= r, "k = {} exceeds {r} annotators", pool.k);
    ensure!(truth.iter().all(|&y| y < c), "truth label out of range");
    ensure!(c <= u16::MAX as usize, "too many classes");

    let matrices: Vec<Option<Matrix>> = pool
        .specs
        .iter()
        .map(|s| {
            if s.is_correlated() {
                Ok(None)
            } else {
                pattern_matrix(s, c).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    let independent: Vec<usize> = (0..r).filter(|&a| matrices[a].is_some()).collect();
    let correlated: Vec<usize> = (0..r).filter(|&a| matrices[a].is_none()).collect();

    let mut dense_rng = rng.split("dense");
    let mut select_rng = rng.split("select");
    let mut row = vec![0usize; r];
    let mut dense = keep_dense.then(|| Vec::with_capacity(n * r));
    let mut annotations = Vec::with_capacity(n * pool.k);
    for (i, &y) in truth.iter().enumerate() {
        for &a in &independent {
            let m = matrices[a].as_ref().expect("independent");
            row[a] = sample_row(m.row(y), &mut dense_rng);
        }
        for &a in &correlated {
            let target = pool.targets[a].map(|t| row[t]);
            row[a] = sample_correlated_label(&pool.specs[a], c, y, target, &mut dense_rng)?;
        }
        if let Some(d) = dense.as_mut() {
            d.extend(row.iter().map(|&l| l as u16));
        }
        let mut keep = weighted_sample_without_replacement(&pool.propensities, pool.k, &mut select_rng)?;
        keep.sort_unstable();
        annotations.extend(keep.into_iter().map(|a| Annotation {
            instance: i,
            annotator: a,
            label: row[a],
        }));
    }
    let mut ds = CrowdDataset::new(features, c, r, annotations, Some(truth.to_vec()))?;
    ds.seed = Some(rng.seed());
    let dense = dense.map(|labels| DenseLabels {
        instances: n,
        annotators: r,
        labels,
    });
    Ok((ds, dense))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annosim::Preset;
    use crate::crowddata::{annotation_histogram, noise_rate_2, true_confusion_matrix};

    fn balanced(n: usize, c: usize) -> Vec<usize> {
        (0..n).map(|i| i % c).collect()
    }

    #[test]
    fn perfect_annotators_keep_truth() {
        let specs = vec![PatternSpec::symmetric(0.0); 3];
        let pool = build_pool(specs, None, 4, 2, 1.5, 3.0, &RngStream::new(1)).unwrap();
        let truth = balanced(40, 4);
        let ds = generate(&truth, Matrix::zeros(40, 1), &pool, &RngStream::new(2)).unwrap();
        for i in 0..40 {
            assert_eq!(ds.labels_of(i).len(), 2);
            assert!(ds.labels_of(i).iter().all(|&(_, l)| l == truth[i]));
        }
    }

    #[test]
    fn zero_propensity_excluded() {
        let specs = vec![PatternSpec::Dummy; 5];
        let mut pool = build_pool(specs, None, 3, 2, 1.5, 3.0, &RngStream::new(1)).unwrap();
        pool.propensities[2] = 0.0;
        let ds = generate(&balanced(300, 3), Matrix::zeros(300, 1), &pool, &RngStream::new(3))
            .unwrap();
        let h = annotation_histogram(&ds);
        assert_eq!(h[2], 0);
        assert_eq!(h.iter().sum::<usize>(), 600);
    }

    #[test]
    fn pool_construction_rules() {
        assert!(build_pool(vec![PatternSpec::Copy; 3], None, 3, 1, 1.5, 3.0, &RngStream::new(0)).is_err());
        assert!(build_pool(vec![PatternSpec::Dummy; 2], None, 3, 3, 1.5, 3.0, &RngStream::new(0)).is_err());
        let specs = vec![PatternSpec::Dummy, PatternSpec::symmetric(0.1), PatternSpec::Copy, PatternSpec::Opposite];
        let a = build_pool(specs.clone(), None, 3, 2, 1.5, 3.0, &RngStream::new(7)).unwrap();
        let b = build_pool(specs, None, 3, 2, 1.5, 3.0, &RngStream::new(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.groups, vec![0, 1, 2, 3]);
        for t in a.targets.iter().skip(2) {
            assert!(matches!(t, Some(0) | Some(1)));
        }
        assert!(a.propensities.iter().all(|w| *w > 0.0 && *w < 1.0));
    }

    #[test]
    fn copy_annotator_agrees_with_target_in_dense_labels() {
        let (specs, groups) = Preset::by_name("COR-II").unwrap().expand(4);
        let pool = build_pool(specs, Some(groups), 10, 3, 1.5, 3.0, &RngStream::new(4)).unwrap();
        let (ds, dense) =
            generate_with_dense(&balanced(500, 10), Matrix::zeros(500, 1), &pool, &RngStream::new(5))
                .unwrap();
        for a in 0..pool.len() {
            if pool.specs[a] == PatternSpec::Copy {
                let t = pool.targets[a].unwrap();
                assert!((0..500).all(|i| dense.get(i, a) == dense.get(i, t)));
            }
        }
        // retained labels are the dense ones
        for ann in ds.annotations() {
            assert_eq!(dense.get(ann.instance, ann.annotator), ann.label);
        }
    }

    #[test]
    fn symmetric_annotator_confusion_recovered() {
        let pool = build_pool(vec![PatternSpec::symmetric(0.3)], None, 10, 1, 1.5, 3.0, &RngStream::new(1)).unwrap();
        let n = 20_000;
        let ds = generate(&balanced(n, 10), Matrix::zeros(n, 1), &pool, &RngStream::new(2)).unwrap();
        let cm = true_confusion_matrix(&ds, 0).unwrap();
        let want = pattern_matrix(&PatternSpec::symmetric(0.3), 10).unwrap();
        for (a, b) in cm.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() < 0.02);
        }
        assert!((noise_rate_2(&ds).unwrap() - 0.3).abs() < 0.015);
    }

    #[test]
    fn same_seed_same_dataset() {
        let (specs, groups) = Preset::by_name("IND-I").unwrap().expand(3);
        let pool = build_pool(specs, Some(groups), 10, 3, 1.5, 3.0, &RngStream::new(1)).unwrap();
        let a = generate(&balanced(200, 10), Matrix::zeros(200, 1), &pool, &RngStream::new(9)).unwrap();
        let b = generate(&balanced(200, 10), Matrix::zeros(200, 1), &pool, &RngStream::new(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.annotations().len(), 600);
    }
}
