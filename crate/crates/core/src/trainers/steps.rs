//! Single optimization steps shared by CrowdLayer and CCC.

use super::crowdloss::{softmax_backward, softmax_jvp, PairTerms};
use super::{ConfusionSet, CorrectionSet};
use crate::crowddata::CrowdDataset;
use crate::error::{ensure, Result};
use crate::mathcore::{softmax, Matrix};
use crate::models::{loss_and_grads, sgd_update, Classifier, GradSet};

/// Mean crowd loss of a batch and its gradients.
#[derive(Debug, Clone)]
pub struct CrowdGrads {
    pub loss: f64,
    pub theta: GradSet,
    /// `d loss / d T[r]` for every annotator.
    pub t: Vec<Matrix>,
    /// Whether annotator `r` labeled any instance of the batch.
    pub present: Vec<bool>,
}

fn transition<'a>(
    confusions: &'a ConfusionSet,
    corrections: Option<&CorrectionSet>,
    r: usize,
) -> std::borrow::Cow<'a, Matrix> {
    match corrections.and_then(|cs| cs.corrected(r, &confusions.t[r])) {
        Some(m) => std::borrow::Cow::Owned(m),
        None => std::borrow::Cow::Borrowed(&confusions.t[r]),
    }
}

/// Batch loss `(1/n) sum_i sum_{r labeled i} loss(p_i, T[r] + V[g(r)], label)`.
///
/// The gradient for `T[r]` equals the gradient for the corrected matrix,
/// since the correction enters additively and is held fixed.
pub fn crowd_loss_and_grads(
    clf: &Classifier,
    confusions: &ConfusionSet,
    corrections: Option<&CorrectionSet>,
    ds: &CrowdDataset,
    batch: &[usize],
) -> Result<CrowdGrads> {
    ensure!(!batch.is_empty(), "empty training batch");
    ensure!(
        confusions.len() == ds.annotator_count(),
        "{} confusion matrices for {} annotators",
        confusions.len(),
        ds.annotator_count()
    );
    let c = ds.class_count();
    let r = ds.annotator_count();
    let scale = 1.0 / batch.len() as f64;
    let mut t_grads = vec![Matrix::zeros(c, c); r];
    let mut present = vec![false; r];
    let rows: Vec<&[f64]> = batch.iter().map(|&i| ds.feature(i)).collect();
    let (loss, theta) = loss_and_grads(clf, &rows, |j, fwd| {
        let p = fwd.p.as_slice();
        let mut loss = 0.0;
        let mut dp = vec![0.0; c];
        for &(a, label) in ds.labels_of(batch[j]) {
            present[a] = true;
            let t = transition(confusions, corrections, a);
            let terms = PairTerms::new(p, &t, label);
            loss += terms.loss;
            terms.add_grad_a(p, scale, &mut t_grads[a]);
            for (d, g) in dp.iter_mut().zip(terms.grad_p(&t)) {
                *d += g;
            }
        }
        Ok((loss, softmax_backward(p, &dp)))
    })?;
    Ok(CrowdGrads {
        loss,
        theta,
        t: t_grads,
        present,
    })
}

/// Optimizer settings of one step.
#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

/// Updates the classifier and every confusion matrix with momentum SGD on
/// the corrected crowd loss. Weight decay applies to the classifier only.
/// Returns the gradients that were applied.
pub fn ccc_actual_step(
    clf: &mut Classifier,
    confusions: &mut ConfusionSet,
    corrections: Option<&CorrectionSet>,
    ds: &CrowdDataset,
    batch: &[usize],
    step: StepParams,
) -> Result<CrowdGrads> {
    let grads = crowd_loss_and_grads(clf, confusions, corrections, ds, batch)?;
    clf.sgd_step(&grads.theta, step.lr, step.momentum, step.weight_decay)?;
    for ((t, buf), g) in confusions
        .t
        .iter_mut()
        .zip(confusions.momentum.iter_mut())
        .zip(&grads.t)
    {
        sgd_update(
            t.as_mut_slice(),
            buf.as_mut_slice(),
            g.as_slice(),
            step.lr,
            step.momentum,
            0.0,
        );
    }
    Ok(grads)
}

/// Meta learning rate `gamma * max(T) / max|g_cor|`, or 0 when the
/// gradients vanish (below 1e-12).
pub fn auto_meta_lr(confusions: &ConfusionSet, g_cor: &[Matrix], gamma: f64) -> f64 {
    let denom = g_cor.iter().map(Matrix::max_abs).fold(0.0, f64::max);
    if denom < 1e-12 || gamma == 0.0 {
        return 0.0;
    }
    gamma * confusions.max_entry() / denom
}

/// Result of one outer (virtual + meta) step.
#[derive(Debug, Clone)]
pub struct OuterStep {
    /// Hypergradient of the meta loss for each group's correction.
    pub g_cor: Vec<Matrix>,
    pub meta_lr: f64,
    pub meta_loss: f64,
}

/// Meta loss of a last layer on `(training row, label)` pairs.
pub(crate) fn meta_loss_and_grad(
    clf: &Classifier,
    weights: &Matrix,
    bias: &[f64],
    ds: &CrowdDataset,
    meta: &[(usize, usize)],
) -> (f64, Matrix, Vec<f64>) {
    let c = bias.len();
    let mut gw = Matrix::zeros(weights.rows(), c);
    let mut gb = vec![0.0; c];
    let mut loss = 0.0;
    let scale = 1.0 / meta.len() as f64;
    for &(i, y) in meta {
        let h = clf.penultimate(ds.feature(i));
        let mut z = weights.vec_mul(&h);
        z.iter_mut().zip(bias).for_each(|(zj, bj)| *zj += bj);
        let p = softmax(&z);
        loss += -p[y].max(crate::mathcore::EPS_FLOOR).ln() * scale;
        let mut e = p.into_vec();
        e[y] -= 1.0;
        for (k, &hk) in h.iter().enumerate() {
            if hk == 0.0 {
                continue;
            }
            for (g, ej) in gw.row_mut(k).iter_mut().zip(&e) {
                *g += scale * hk * ej;
            }
        }
        gb.iter_mut().zip(&e).for_each(|(g, ej)| *g += scale * ej);
    }
    (loss, gw, gb)
}

/// Virtual step on the last layer, hypergradient of the meta loss with
/// respect to every group correction, and the correction update.
///
/// The virtual step is `W' = W - lr_virtual * dL_train/dW` (same for the
/// bias), with all other layers frozen. The hypergradient is exact:
/// `dL_meta/dV = -lr_virtual * d/dV <dL_train/dW, dL_meta/dW'>`.
/// `corrections.v` is updated in place; the classifier and `T` are not touched.
#[allow(clippy::too_many_arguments)]
pub fn ccc_outer_step(
    clf: &Classifier,
    confusions: &ConfusionSet,
    corrections: &mut CorrectionSet,
    ds: &CrowdDataset,
    batch: &[usize],
    meta: &[(usize, usize)],
    lr_virtual: f64,
    gamma: f64,
) -> Result<OuterStep> {
    let c = ds.class_count();
    let groups = corrections.v.len();
    ensure!(!batch.is_empty(), "empty training batch");
    ensure!(
        corrections.group_of.len() == ds.annotator_count(),
        "group map covers {} annotators, dataset has {}",
        corrections.group_of.len(),
        ds.annotator_count()
    );
    if meta.is_empty() {
        log::warn!("empty meta batch: correction step skipped");
        return Ok(OuterStep {
            g_cor: vec![Matrix::zeros(c, c); groups],
            meta_lr: 0.0,
            meta_loss: 0.0,
        });
    }

    // virtual step on the last layer
    let grads = crowd_loss_and_grads(clf, confusions, Some(corrections), ds, batch)?;
    let last = clf.last_layer();
    let l = grads.theta.0.len() - 2;
    let mut w_hat = last.weights.clone();
    w_hat.axpy(-lr_virtual, &grads.theta.0[l]);
    let b_hat: Vec<f64> = last
        .bias
        .iter()
        .zip(grads.theta.0[l + 1].as_slice())
        .map(|(b, g)| b - lr_virtual * g)
        .collect();

    // meta loss through the virtual parameters
    let (meta_loss, a_w, a_b) = meta_loss_and_grad(clf, &w_hat, &b_hat, ds, meta);

    // mixed second derivative contracted with the meta gradient
    let mut g_cor = vec![Matrix::zeros(c, c); groups];
    let scale = -lr_virtual / batch.len() as f64;
    if scale != 0.0 {
        for &i in batch {
            let h = clf.penultimate(ds.feature(i));
            let p = last.probs(&h);
            let mut dz = a_w.vec_mul(&h);
            dz.iter_mut().zip(&a_b).for_each(|(d, b)| *d += b);
            let dp = softmax_jvp(&p, &dz);
            for &(a, label) in ds.labels_of(i) {
                let t = transition(confusions, Some(corrections), a);
                let terms = PairTerms::new(&p, &t, label);
                terms.add_mixed_grad_a(&p, &dp, &t, scale, &mut g_cor[corrections.group_of[a]]);
            }
        }
    }

    let meta_lr = auto_meta_lr(confusions, &g_cor, gamma);
    if meta_lr > 0.0 {
        for (v, g) in corrections.v.iter_mut().zip(&g_cor) {
            v.axpy(-meta_lr, g);
        }
    }
    Ok(OuterStep {
        g_cor,
        meta_lr,
        meta_loss,
    })
}

/// Meta loss after a virtual step taken with the given corrections; the
/// function whose `V`-gradient [`ccc_outer_step`] computes.
pub fn virtual_meta_loss(
    clf: &Classifier,
    confusions: &ConfusionSet,
    corrections: &CorrectionSet,
    ds: &CrowdDataset,
    batch: &[usize],
    meta: &[(usize, usize)],
    lr_virtual: f64,
) -> Result<f64> {
    let grads = crowd_loss_and_grads(clf, confusions, Some(corrections), ds, batch)?;
    let last = clf.last_layer();
    let l = grads.theta.0.len() - 2;
    let mut w_hat = last.weights.clone();
    w_hat.axpy(-lr_virtual, &grads.theta.0[l]);
    let b_hat: Vec<f64> = last
        .bias
        .iter()
        .zip(grads.theta.0[l + 1].as_slice())
        .map(|(b, g)| b - lr_virtual * g)
        .collect();
    Ok(meta_loss_and_grad(clf, &w_hat, &b_hat, ds, meta).0)
}
