use serde::Serialize;

use super::CrowdDataset;
use crate::error::{ensure, Result};
use crate::mathcore::{argmax, Matrix};
use crate::models::Classifier;

/// Fraction of instances where no annotator gave the true label.
pub fn noise_rate_1(ds: &CrowdDataset) -> Result<f64> {
    let truth = ds.require_truth()?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let noisy = (0..ds.len())
        .filter(|&i| ds.labels_of(i).iter().all(|&(_, l)| l != truth[i]))
        .count();
    Ok(noisy as f64 / ds.len() as f64)
}

/// Fraction of individual annotations that disagree with the truth.
pub fn noise_rate_2(ds: &CrowdDataset) -> Result<f64> {
    let truth = ds.require_truth()?;
    let total = ds.annotations().len();
    if total == 0 {
        return Ok(0.0);
    }
    let wrong = ds
        .annotations()
        .iter()
        .filter(|a| a.label != truth[a.instance])
        .count();
    Ok(wrong as f64 / total as f64)
}

/// Empirical confusion matrix of annotator `r` (rows: true class, columns:
/// reported label). Rows of classes the annotator never saw are all zero.
pub fn true_confusion_matrix(ds: &CrowdDataset, r: usize) -> Result<Matrix> {
    ensure!(
        r < ds.annotator_count(),
        "annotator {r} out of range (r = {})",
        ds.annotator_count()
    );
    let truth = ds.require_truth()?;
    let c = ds.class_count();
    let mut counts = Matrix::zeros(c, c);
    for a in ds.annotations().iter().filter(|a| a.annotator == r) {
        counts[(truth[a.instance], a.label)] += 1.0;
    }
    for p in 0..c {
        let row = counts.row_mut(p);
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|v| *v /= total);
        }
    }
    Ok(counts)
}

/// Mean squared entrywise difference.
pub fn confusion_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    ensure!(
        a.shape() == b.shape(),
        "shape mismatch {:?} vs {:?}",
        a.shape(),
        b.shape()
    );
    let n = a.as_slice().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / n as f64)
}

/// Number of labels provided by each annotator.
pub fn annotation_histogram(ds: &CrowdDataset) -> Vec<usize> {
    let mut counts = vec![0; ds.annotator_count()];
    ds.annotations()
        .iter()
        .for_each(|a| counts[a.annotator] += 1);
    counts
}

/// Argmax prediction per row, ties to the lowest class.
pub fn predict(clf: &Classifier, features: &Matrix) -> Result<Vec<usize>> {
    ensure!(
        features.cols() == clf.input_dim(),
        "features have dimension {}, classifier expects {}",
        features.cols(),
        clf.input_dim()
    );
    Ok((0..features.rows())
        .map(|i| argmax(&clf.forward_unchecked(features.row(i)).p))
        .collect())
}

/// Fraction of rows whose prediction equals the label.
pub fn evaluate_accuracy(clf: &Classifier, features: &Matrix, labels: &[usize]) -> Result<f64> {
    ensure!(
        labels.len() == features.rows(),
        "{} labels for {} rows",
        labels.len(),
        features.rows()
    );
    if labels.is_empty() {
        return Ok(0.0);
    }
    let hits = predict(clf, features)?
        .iter()
        .zip(labels)
        .filter(|(p, y)| p == y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Summary statistics of a dataset; noise rates need truth.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetStats {
    pub n: usize,
    pub c: usize,
    pub r: usize,
    pub total_annotations: usize,
    pub nr1: Option<f64>,
    pub nr2: Option<f64>,
    pub annotator_counts: Vec<usize>,
    #[serde(skip)]
    pub true_confusions: Option<Vec<Matrix>>,
}

pub fn dataset_stats(ds: &CrowdDataset) -> Result<DatasetStats> {
    let has_truth = ds.truth().is_some();
    let true_confusions = if has_truth {
        Some(
            (0..ds.annotator_count())
                .map(|r| true_confusion_matrix(ds, r))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(DatasetStats {
        n: ds.len(),
        c: ds.class_count(),
        r: ds.annotator_count(),
        total_annotations: ds.annotations().len(),
        nr1: if has_truth { Some(noise_rate_1(ds)?) } else { None },
        nr2: if has_truth { Some(noise_rate_2(ds)?) } else { None },
        annotator_counts: annotation_histogram(ds),
        true_confusions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crowddata::Annotation;
    use crate::models::ClassifierKind;

    fn ds(n: usize, c: usize, r: usize, anns: &[(usize, usize, usize)], truth: Vec<usize>) -> CrowdDataset {
        let anns = anns
            .iter()
            .map(|&(instance, annotator, label)| Annotation {
                instance,
                annotator,
                label,
            })
            .collect();
        CrowdDataset::new(Matrix::zeros(n, 1), c, r, anns, Some(truth)).unwrap()
    }

    #[test]
    fn nr1_hand_cases() {
        let d = ds(2, 2, 2, &[(0, 0, 0), (0, 1, 1), (1, 0, 1)], vec![0, 1]);
        assert_eq!(noise_rate_1(&d).unwrap(), 0.0);
        let d = ds(2, 2, 2, &[(0, 0, 0), (0, 1, 1), (1, 0, 0)], vec![0, 1]);
        assert_eq!(noise_rate_1(&d).unwrap(), 0.5);
        let d = ds(2, 2, 1, &[(0, 0, 1), (1, 0, 0)], vec![0, 1]);
        assert_eq!(noise_rate_1(&d).unwrap(), 1.0);
    }

    #[test]
    fn nr2_hand_cases() {
        let d = ds(3, 2, 1, &[(0, 0, 0), (1, 0, 0), (2, 0, 0)], vec![0, 0, 1]);
        assert!((noise_rate_2(&d).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let d = ds(3, 2, 1, &[(0, 0, 0), (1, 0, 0), (2, 0, 1)], vec![0, 0, 1]);
        assert_eq!(noise_rate_2(&d).unwrap(), 0.0);
    }

    #[test]
    fn noise_rates_need_truth() {
        let d = CrowdDataset::new(Matrix::zeros(1, 1), 2, 1, vec![], None).unwrap();
        assert!(noise_rate_1(&d).is_err());
        assert!(noise_rate_2(&d).is_err());
    }

    #[test]
    fn confusion_matrix_hand_count() {
        let d = ds(
            4,
            2,
            1,
            &[(0, 0, 0), (1, 0, 0), (2, 0, 1), (3, 0, 0)],
            vec![0, 0, 0, 0],
        );
        let cm = true_confusion_matrix(&d, 0).unwrap();
        assert_eq!(cm.row(0), &[0.75, 0.25]);
        assert_eq!(cm.row(1), &[0.0, 0.0]);
        assert!(true_confusion_matrix(&d, 1).is_err());
    }

    #[test]
    fn perfect_annotator_gives_identity() {
        let d = ds(3, 3, 1, &[(0, 0, 0), (1, 0, 1), (2, 0, 2)], vec![0, 1, 2]);
        assert_eq!(true_confusion_matrix(&d, 0).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn distance_cases() {
        let a = Matrix::identity(2);
        let b = Matrix::filled(2, 2, 0.5);
        assert_eq!(confusion_distance(&a, &b).unwrap(), 0.25);
        assert_eq!(confusion_distance(&b, &a).unwrap(), 0.25);
        assert_eq!(confusion_distance(&a, &a).unwrap(), 0.0);
        assert!(confusion_distance(&a, &Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn histogram_counts() {
        let d = ds(3, 2, 3, &[(0, 0, 0), (1, 0, 0), (2, 0, 1), (0, 1, 1), (1, 1, 1)], vec![0, 0, 0]);
        assert_eq!(annotation_histogram(&d), vec![3, 2, 0]);
        let empty = ds(2, 2, 3, &[], vec![0, 1]);
        assert_eq!(annotation_histogram(&empty), vec![0, 0, 0]);
    }

    #[test]
    fn accuracy_tie_break_and_hand_count() {
        let zero = Classifier::from_params(
            ClassifierKind::Linear,
            1,
            0,
            3,
            vec![Matrix::zeros(1, 3), Matrix::zeros(1, 3)],
        )
        .unwrap();
        let f = Matrix::from_vec(4, 1, vec![1.0, -1.0, 2.0, 0.0]).unwrap();
        assert_eq!(evaluate_accuracy(&zero, &f, &[0, 0, 0, 0]).unwrap(), 1.0);
        // predicts class 1 for x > 0, class 0 otherwise
        let sign = Classifier::from_params(
            ClassifierKind::Linear,
            1,
            0,
            2,
            vec![
                Matrix::from_vec(1, 2, vec![-1.0, 1.0]).unwrap(),
                Matrix::zeros(1, 2),
            ],
        )
        .unwrap();
        assert_eq!(evaluate_accuracy(&sign, &f, &[1, 0, 1, 0]).unwrap(), 1.0);
        assert_eq!(evaluate_accuracy(&sign, &f, &[1, 0, 1, 1]).unwrap(), 0.75);
    }
}
