mod common;

use ccc_core::models::{loss_and_grads, softmax_ce, ClassifierKind};
use ccc_core::trainers::{crowd_loss_and_grads, ConfusionSet};
use ccc_core::{Classifier, Matrix, RngStream};
use common::{random_confusions, random_dataset};

const H: f64 = 1e-6;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn ce_loss(clf: &Classifier, xs: &[&[f64]], ys: &[usize]) -> (f64, Vec<Matrix>) {
    let (loss, g) = loss_and_grads(clf, xs, |j, fwd| Ok(softmax_ce(&fwd.p, ys[j]))).unwrap();
    (loss, g.0)
}

fn random_net(kind: ClassifierKind, rng: &mut RngStream) -> (Classifier, Vec<Vec<f64>>, Vec<usize>) {
    let d = 2 + rng.below(4);
    let c = 2 + rng.below(4);
    let hidden = if kind == ClassifierKind::Mlp { 2 + rng.below(5) } else { 0 };
    let clf = Classifier::new(kind, d, hidden, c, rng).unwrap();
    let n = 1 + rng.below(6);
    let xs = (0..n).map(|_| (0..d).map(|_| rng.normal()).collect()).collect();
    let ys = (0..n).map(|_| rng.below(c)).collect();
    (clf, xs, ys)
}

fn check_ce(kind: ClassifierKind, seed: u64) {
    let mut rng = RngStream::new(seed);
    for _ in 0..20 {
        let (clf, xs, ys) = random_net(kind, &mut rng);
        let rows: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let (_, grads) = ce_loss(&clf, &rows, &ys);
        for l in 0..grads.len() {
            for e in 0..grads[l].as_slice().len() {
                let mut plus = clf.clone();
                plus.params_mut()[l].as_mut_slice()[e] += H;
                let mut minus = clf.clone();
                minus.params_mut()[l].as_mut_slice()[e] -= H;
                let fd = (ce_loss(&plus, &rows, &ys).0 - ce_loss(&minus, &rows, &ys).0) / (2.0 * H);
                let an = grads[l].as_slice()[e];
                assert!(rel_err(an, fd) < 1e-6, "param {l}[{e}]: {an} vs {fd}");
            }
        }
    }
}

#[test]
fn linear_cross_entropy_gradients() {
    check_ce(ClassifierKind::Linear, 1);
}

#[test]
fn mlp_cross_entropy_gradients() {
    check_ce(ClassifierKind::Mlp, 2);
}

fn crowd_loss(clf: &Classifier, t: &ConfusionSet, ds: &ccc_core::CrowdDataset, batch: &[usize]) -> f64 {
    crowd_loss_and_grads(clf, t, None, ds, batch).unwrap().loss
}

#[test]
fn crowd_loss_gradients_for_theta_and_confusions() {
    for (k, kind) in [ClassifierKind::Linear, ClassifierKind::Mlp].into_iter().enumerate() {
        for seed in 0..5 {
            let mut rng = RngStream::new(50 + 10 * k as u64 + seed);
            let ds = random_dataset(10, 3, 3, 4, &mut rng);
            let hidden = if kind == ClassifierKind::Mlp { 4 } else { 0 };
            let clf = Classifier::new(kind, 3, hidden, 3, &mut rng).unwrap();
            let t = random_confusions(4, 3, &mut rng);
            let batch = [0, 2, 3, 6, 9];
            let g = crowd_loss_and_grads(&clf, &t, None, &ds, &batch).unwrap();
            for l in 0..g.theta.0.len() {
                for e in 0..g.theta.0[l].as_slice().len() {
                    let mut plus = clf.clone();
                    plus.params_mut()[l].as_mut_slice()[e] += H;
                    let mut minus = clf.clone();
                    minus.params_mut()[l].as_mut_slice()[e] -= H;
                    let fd = (crowd_loss(&plus, &t, &ds, &batch) - crowd_loss(&minus, &t, &ds, &batch)) / (2.0 * H);
                    let an = g.theta.0[l].as_slice()[e];
                    assert!(rel_err(an, fd) < 1e-6, "theta {l}[{e}]: {an} vs {fd}");
                }
            }
            for r in 0..4 {
                for e in 0..9 {
                    let mut plus = t.clone();
                    plus.t[r].as_mut_slice()[e] += H;
                    let mut minus = t.clone();
                    minus.t[r].as_mut_slice()[e] -= H;
                    let fd = (crowd_loss(&clf, &plus, &ds, &batch) - crowd_loss(&clf, &minus, &ds, &batch)) / (2.0 * H);
                    let an = g.t[r].as_slice()[e];
                    assert!(rel_err(an, fd) < 1e-6, "T[{r}][{e}]: {an} vs {fd}");
                }
            }
        }
    }
}
