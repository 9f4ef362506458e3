//! Confusion-layer loss `ce(normalize(max(p A, eps)), label)` with
//! `A = T + V`, and the derivatives needed by the trainers.

use crate::mathcore::{Matrix, EPS_FLOOR};

/// Loss of one (instance, annotator) pair.
///
/// `q = p (T + V)` is clamped at [`EPS_FLOOR`], renormalized, and scored
/// with cross-entropy; `V` is treated as zero when absent.
pub fn crowdlayer_instance_loss(p: &[f64], t: &Matrix, label: usize, v: Option<&Matrix>) -> f64 {
    match v {
        Some(v) => PairTerms::new(p, &t.add(v).expect("shapes agree"), label).loss,
        None => PairTerms::new(p, t, label).loss,
    }
}

/// Intermediate quantities of one pair loss.
#[derive(Debug, Clone)]
pub(crate) struct PairTerms {
    pub loss: f64,
    label: usize,
    /// Entries of `p A` that sit above the clamp.
    active: Vec<bool>,
    clamped: Vec<f64>,
    sum: f64,
    /// `d loss / d (p A)`.
    pub g_raw: Vec<f64>,
}

impl PairTerms {
    pub fn new(p: &[f64], a: &Matrix, label: usize) -> Self {
        let raw = a.vec_mul(p);
        let active: Vec<bool> = raw.iter().map(|&v| v > EPS_FLOOR).collect();
        let clamped: Vec<f64> = raw.iter().map(|&v| v.max(EPS_FLOOR)).collect();
        let sum: f64 = clamped.iter().sum();
        let q_label = clamped[label] / sum;
        let loss = -q_label.max(EPS_FLOOR).ln();
        let g_raw = if q_label < EPS_FLOOR {
            // loss is pinned at the floor: locally constant
            vec![0.0; raw.len()]
        } else {
            (0..raw.len())
                .map(|l| {
                    if !active[l] {
                        0.0
                    } else if l == label {
                        1.0 / sum - 1.0 / clamped[label]
                    } else {
                        1.0 / sum
                    }
                })
                .collect()
        };
        Self {
            loss,
            label,
            active,
            clamped,
            sum,
            g_raw,
        }
    }

    /// `d loss / d A[c][l] = p[c] g_raw[l]`, accumulated with `scale`.
    pub fn add_grad_a(&self, p: &[f64], scale: f64, out: &mut Matrix) {
        for (c, &pc) in p.iter().enumerate() {
            if pc == 0.0 {
                continue;
            }
            for (o, g) in out.row_mut(c).iter_mut().zip(&self.g_raw) {
                *o += scale * pc * g;
            }
        }
    }

    /// `d loss / d p[c] = sum_l A[c][l] g_raw[l]`.
    pub fn grad_p(&self, a: &Matrix) -> Vec<f64> {
        (0..a.rows())
            .map(|c| a.row(c).iter().zip(&self.g_raw).map(|(x, g)| x * g).sum())
            .collect()
    }

    /// Gradient with respect to `A` of the directional derivative
    /// `<d loss / d p, dp>`, accumulated with `scale`. `dp` is the change
    /// of `p` along a fixed parameter direction, so it does not depend on `A`.
    pub fn add_mixed_grad_a(&self, p: &[f64], dp: &[f64], a: &Matrix, scale: f64, out: &mut Matrix) {
        if self.g_raw.iter().all(|g| *g == 0.0) {
            return;
        }
        let dq = a.vec_mul(dp);
        let active_dq: f64 = dq
            .iter()
            .zip(&self.active)
            .filter(|(_, on)| **on)
            .map(|(d, _)| d)
            .sum();
        let inv_s2 = 1.0 / (self.sum * self.sum);
        let y = self.label;
        let h: Vec<f64> = (0..dq.len())
            .map(|l| {
                if !self.active[l] {
                    return 0.0;
                }
                let mut v = -active_dq * inv_s2;
                if l == y {
                    v += dq[y] / (self.clamped[y] * self.clamped[y]);
                }
                v
            })
            .collect();
        for c in 0..p.len() {
            for (l, o) in out.row_mut(c).iter_mut().enumerate() {
                *o += scale * (dp[c] * self.g_raw[l] + p[c] * h[l]);
            }
        }
    }
}

/// Pulls a probability-space gradient back through softmax.
pub(crate) fn softmax_backward(p: &[f64], dp: &[f64]) -> Vec<f64> {
    let dot: f64 = p.iter().zip(dp).map(|(a, b)| a * b).sum();
    p.iter().zip(dp).map(|(pj, dj)| pj * (dj - dot)).collect()
}

/// Pushes a logit-space direction forward through softmax.
pub(crate) fn softmax_jvp(p: &[f64], dz: &[f64]) -> Vec<f64> {
    // the softmax Jacobian is symmetric
    softmax_backward(p, dz)
}
