use crate::crowddata::CrowdDataset;
use crate::error::{ensure, Result};
use crate::mathcore::Matrix;

/// Learned per-annotator confusion matrices (rows: true class, columns:
/// reported label) with their momentum buffers. Unconstrained during training.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionSet {
    pub t: Vec<Matrix>,
    pub momentum: Vec<Matrix>,
}

impl ConfusionSet {
    pub fn from_matrices(t: Vec<Matrix>) -> Self {
        let momentum = t.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
        Self { t, momentum }
    }

    pub fn identity(annotators: usize, classes: usize) -> Self {
        Self::from_matrices(vec![Matrix::identity(classes); annotators])
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest entry over all matrices.
    pub fn max_entry(&self) -> f64 {
        self.t.iter().map(Matrix::max).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-group additive corrections and the annotator-to-group map.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionSet {
    pub v: Vec<Matrix>,
    pub group_of: Vec<usize>,
}

impl CorrectionSet {
    pub fn zeros(groups: usize, classes: usize, group_of: Vec<usize>) -> Result<Self> {
        ensure!(
            group_of.iter().all(|&g| g < groups),
            "group index out of range for {groups} groups"
        );
        Ok(Self {
            v: vec![Matrix::zeros(classes, classes); groups],
            group_of,
        })
    }

    pub fn reset(&mut self) {
        self.v.iter_mut().for_each(|m| m.fill(0.0));
    }

    pub fn is_zero(&self) -> bool {
        self.v.iter().all(|m| m.as_slice().iter().all(|x| *x == 0.0))
    }

    /// `T + V[g(r)]` for annotator `r`, or `None` when that correction is zero.
    pub fn corrected(&self, r: usize, t: &Matrix) -> Option<Matrix> {
        let v = &self.v[self.group_of[r]];
        if v.as_slice().iter().all(|x| *x == 0.0) {
            None
        } else {
            Some(t.add(v).expect("shapes agree"))
        }
    }
}

/// Smoothing constant of the vote-based initialization.
pub const VOTE_SMOOTHING: f64 = 1e-6;

/// Log-domain confusion estimates from soft crowd votes.
///
/// `Q_i(p)` is the share of instance `i`'s labels equal to `p`; entry
/// `(p, q)` of annotator `r` is
/// `ln((sum_i Q_i(p) [r said q on i] + e) / (sum_i Q_i(p) [r labeled i] + C e))`.
/// Every row exponentiates to a distribution; an annotator without labels
/// gets `ln(1/C)` everywhere.
pub fn init_confusion_votes(ds: &CrowdDataset) -> ConfusionSet {
    let c = ds.class_count();
    let r = ds.annotator_count();
    let mut num = vec![Matrix::zeros(c, c); r];
    let mut den = vec![vec![0.0; c]; r];
    for i in 0..ds.len() {
        let labels = ds.labels_of(i);
        if labels.is_empty() {
            continue;
        }
        let mut q = vec![0.0; c];
        for &(_, l) in labels {
            q[l] += 1.0 / labels.len() as f64;
        }
        for &(a, l) in labels {
            for p in 0..c {
                num[a][(p, l)] += q[p];
                den[a][p] += q[p];
            }
        }
    }
    let t = num
        .into_iter()
        .zip(den)
        .map(|(mut m, d)| {
            for p in 0..c {
                let denom = d[p] + c as f64 * VOTE_SMOOTHING;
                for v in m.row_mut(p) {
                    *v = ((*v + VOTE_SMOOTHING) / denom).ln();
                }
            }
            m
        })
        .collect();
    ConfusionSet::from_matrices(t)
}

/// Linear-domain version of [`init_confusion_votes`] (entries exponentiated),
/// the form used as a starting transition matrix.
pub fn init_confusion_votes_linear(ds: &CrowdDataset) -> ConfusionSet {
    let mut set = init_confusion_votes(ds);
    for m in set.t.iter_mut() {
        m.as_mut_slice().iter_mut().for_each(|v| *v = v.exp());
    }
    set
}
