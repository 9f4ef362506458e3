use std::collections::HashSet;

use crate::error::{ensure, Result};
use crate::mathcore::Matrix;

/// One crowd label: annotator `annotator` said `label` for `instance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Annotation {
    pub instance: usize,
    pub annotator: usize,
    pub label: usize,
}

/// Features with ground-truth labels, used for held-out evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSplit {
    pub features: Matrix,
    pub labels: Vec<usize>,
}

/// Instances, sparse crowd labels, and optional truth.
#[derive(Debug, Clone, PartialEq)]
pub struct CrowdDataset {
    class_count: usize,
    annotator_count: usize,
    features: Matrix,
    annotations: Vec<Annotation>,
    truth: Option<Vec<usize>>,
    /// `(annotator, label)` pairs per instance, sorted by annotator.
    by_instance: Vec<Vec<(usize, usize)>>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub test: Option<LabeledSplit>,
}

impl CrowdDataset {
    /// Validates ids, labels and uniqueness of `(instance, annotator)` pairs.
    /// Annotation order is preserved.
    pub fn new(
        features: Matrix,
        class_count: usize,
        annotator_count: usize,
        annotations: Vec<Annotation>,
        truth: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = features.rows();
        ensure!(class_count >= 1, "class count must be positive");
        if let Some(t) = &truth {
            ensure!(t.len() == n, "truth has {} labels for {n} instances", t.len());
            ensure!(
                t.iter().all(|&y| y < class_count),
                "truth label out of range"
            );
        }
        let mut seen = HashSet::with_capacity(annotations.len());
        let mut by_instance = vec![Vec::new(); n];
        for a in &annotations {
            ensure!(a.instance < n, "instance {} out of range (n = {n})", a.instance);
            ensure!(
                a.annotator < annotator_count,
                "annotator {} out of range (r = {annotator_count})",
                a.annotator
            );
            ensure!(
                a.label < class_count,
                "label {} out of range (c = {class_count})",
                a.label
            );
            ensure!(
                seen.insert((a.instance, a.annotator)),
                "duplicate annotation ({}, {})",
                a.instance,
                a.annotator
            );
            by_instance[a.instance].push((a.annotator, a.label));
        }
        by_instance.iter_mut().for_each(|v| v.sort_unstable());
        Ok(Self {
            class_count,
            annotator_count,
            features,
            annotations,
            truth,
            by_instance,
            preset: None,
            seed: None,
            test: None,
        })
    }

    pub fn with_test(mut self, test: LabeledSplit) -> Result<Self> {
        ensure!(
            test.features.cols() == self.dim(),
            "test features have dimension {}, expected {}",
            test.features.cols(),
            self.dim()
        );
        ensure!(
            test.labels.len() == test.features.rows(),
            "test split has {} labels for {} rows",
            test.labels.len(),
            test.features.rows()
        );
        ensure!(
            test.labels.iter().all(|&y| y < self.class_count),
            "test label out of range"
        );
        self.test = Some(test);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn annotator_count(&self) -> usize {
        self.annotator_count
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn truth(&self) -> Option<&[usize]> {
        self.truth.as_deref()
    }

    /// `(annotator, label)` pairs of instance `i`, ordered by annotator.
    pub fn labels_of(&self, i: usize) -> &[(usize, usize)] {
        &self.by_instance[i]
    }

    /// Presence matrix: `presence()[i][r]` is true when `r` labeled `i`.
    pub fn presence(&self) -> Vec<Vec<bool>> {
        let mut a = vec![vec![false; self.annotator_count]; self.len()];
        for ann in &self.annotations {
            a[ann.instance][ann.annotator] = true;
        }
        a
    }

    /// Errors if some instance has no annotation.
    pub fn require_annotated(&self) -> Result<()> {
        if let Some(i) = self.by_instance.iter().position(Vec::is_empty) {
            return crate::error::contract(format!("instance {i} has no annotations"));
        }
        Ok(())
    }

    pub fn require_truth(&self) -> Result<&[usize]> {
        match &self.truth {
            Some(t) => Ok(t),
            None => crate::error::contract("operation requires ground-truth labels"),
        }
    }
}

/// Class-balanced distilled instances with pseudo-labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetaSet {
    /// Training-set row of each selected instance.
    pub indices: Vec<usize>,
    pub labels: Vec<usize>,
}

impl MetaSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn class_counts(&self, class_count: usize) -> Vec<usize> {
        let mut counts = vec![0; class_count];
        self.labels.iter().for_each(|&c| counts[c] += 1);
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(instance: usize, annotator: usize, label: usize) -> Annotation {
        Annotation {
            instance,
            annotator,
            label,
        }
    }

    #[test]
    fn validates_ranges_and_duplicates() {
        let f = Matrix::zeros(2, 1);
        assert!(CrowdDataset::new(f.clone(), 2, 2, vec![ann(2, 0, 0)], None).is_err());
        assert!(CrowdDataset::new(f.clone(), 2, 2, vec![ann(0, 2, 0)], None).is_err());
        assert!(CrowdDataset::new(f.clone(), 2, 2, vec![ann(0, 0, 2)], None).is_err());
        assert!(
            CrowdDataset::new(f.clone(), 2, 2, vec![ann(0, 0, 0), ann(0, 0, 1)], None).is_err()
        );
        assert!(CrowdDataset::new(f, 2, 2, vec![], Some(vec![0])).is_err());
    }

    #[test]
    fn per_instance_view_and_presence() {
        let ds = CrowdDataset::new(
            Matrix::zeros(2, 1),
            3,
            3,
            vec![ann(1, 2, 0), ann(0, 1, 2), ann(1, 0, 1)],
            None,
        )
        .unwrap();
        assert_eq!(ds.labels_of(1), &[(0, 1), (2, 0)]);
        assert_eq!(ds.presence()[0], vec![false, true, false]);
        ds.require_annotated().unwrap();
        assert!(ds.require_truth().is_err());
    }

    #[test]
    fn unannotated_instance_detected() {
        let ds = CrowdDataset::new(Matrix::zeros(2, 1), 2, 1, vec![ann(0, 0, 1)], None).unwrap();
        assert!(ds.require_annotated().is_err());
    }
}
