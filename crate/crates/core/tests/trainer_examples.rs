mod common;

use ccc_core::annosim::{build_pool, generate, PatternSpec};
use ccc_core::crowddata::{make_blobs, Annotation};
use ccc_core::mathcore::{cross_entropy, kmeans};
use ccc_core::models::ClassifierKind;
use ccc_core::trainers::{
    aggregate_majority, auto_meta_lr, ccc_actual_step, ccc_outer_step, crowd_loss_and_grads,
    distill_meta_set, group_annotators, train, train_majority, ConfusionSet, CorrectionSet,
    StepParams,
};
use ccc_core::{Algo, Classifier, CrowdDataset, Matrix, RngStream, TrainConfig};
use common::{blobs_crowd, random_confusions, random_dataset};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Blobs labeled by `r` noiseless annotators, each instance labeled `k` times.
fn noiseless(n: usize, c: usize, r: usize, k: usize, seed: u64) -> CrowdDataset {
    let root = RngStream::new(seed);
    let (x, y) = make_blobs(n, c, 4, 0.1, &mut root.split("blobs")).unwrap();
    let pool = build_pool(vec![PatternSpec::symmetric(0.0); r], None, c, k, 1.5, 3.0, &root.split("pool")).unwrap();
    generate(&y, x, &pool, &root.split("labels")).unwrap()
}

#[test]
fn majority_on_noiseless_crowd_equals_training_on_truth() {
    let crowd = noiseless(300, 4, 3, 2, 1);
    let truth = crowd.truth().unwrap().to_vec();
    assert_eq!(aggregate_majority(&crowd).unwrap(), truth);
    let anns = truth
        .iter()
        .enumerate()
        .map(|(i, &l)| Annotation {
            instance: i,
            annotator: 0,
            label: l,
        })
        .collect();
    let single = CrowdDataset::new(crowd.features().clone(), 4, 1, anns, Some(truth)).unwrap();
    let cfg = TrainConfig {
        algo: Algo::Majority,
        epochs: 5,
        ..TrainConfig::default()
    };
    let a = train_majority(&crowd, &cfg).unwrap();
    let b = train_majority(&single, &cfg).unwrap();
    assert_eq!(a.curves, b.curves);
    assert_eq!(a.curves[0].len(), 5);
    assert_eq!(a.classifiers, b.classifiers);
}

#[test]
fn one_step_on_a_hand_two_class_case() {
    // p = [0.5, 0.5] at zero weights; q = p T = [0.55, 0.45], label 1.
    let clf0 = Classifier::from_params(ClassifierKind::Linear, 1, 0, 2, vec![Matrix::zeros(1, 2), Matrix::zeros(1, 2)])
        .unwrap();
    let ds = CrowdDataset::new(
        Matrix::from_rows(&[vec![1.0]]).unwrap(),
        2,
        2,
        vec![Annotation {
            instance: 0,
            annotator: 0,
            label: 1,
        }],
        None,
    )
    .unwrap();
    let t0 = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let mut t = ConfusionSet::from_matrices(vec![t0.clone(), Matrix::identity(2)]);
    let mut clf = clf0.clone();
    let step = StepParams {
        lr: 0.1,
        momentum: 0.9,
        weight_decay: 5e-4,
    };
    let g = ccc_actual_step(&mut clf, &mut t, None, &ds, &[0], step).unwrap();
    assert!(close(g.loss, -(0.45f64).ln(), 1e-12));
    // dL/dq = [1, 1 - 1/0.45]; dL/dT = p^T dL/dq; dL/dz = p * (T dL/dq - mean).
    let dq1 = 1.0 - 1.0 / 0.45;
    let expected_t = [0.5, 0.5 * dq1, 0.5, 0.5 * dq1];
    for (a, b) in g.t[0].as_slice().iter().zip(expected_t) {
        assert!(close(*a, b, 1e-8), "{a} vs {b}");
    }
    assert!(g.t[1].as_slice().iter().all(|v| *v == 0.0));
    let dp = [0.9 + 0.1 * dq1, 0.2 + 0.8 * dq1];
    let dz0 = 0.5 * (dp[0] - 0.5 * (dp[0] + dp[1]));
    let expected_w = [dz0, -dz0];
    for (a, b) in g.theta.0[0].as_slice().iter().zip(expected_w) {
        assert!(close(*a, b, 1e-8), "{a} vs {b}");
    }
    // first momentum step from zero weights: theta -= lr * g
    for (a, b) in clf.params()[0].as_slice().iter().zip(expected_w) {
        assert!(close(*a, -0.1 * b, 1e-8));
    }
    for (k, (a, b)) in t.t[0].as_slice().iter().zip(t0.as_slice()).enumerate() {
        assert!(close(*a, b - 0.1 * expected_t[k], 1e-8));
    }
    assert_eq!(t.t[1], Matrix::identity(2));
}

#[test]
fn noiseless_loss_decreases_monotonically() {
    let ds = noiseless(200, 3, 3, 2, 4);
    let mut rng = RngStream::new(5);
    let mut clf = Classifier::new(ClassifierKind::Linear, ds.dim(), 0, 3, &mut rng).unwrap();
    let mut t = ConfusionSet::identity(3, 3);
    let all: Vec<usize> = (0..ds.len()).collect();
    let step = StepParams {
        lr: 0.02,
        momentum: 0.9,
        weight_decay: 5e-4,
    };
    let mut prev = f64::INFINITY;
    for s in 0..50 {
        let g = ccc_actual_step(&mut clf, &mut t, None, &ds, &all, step).unwrap();
        assert!(g.loss < prev, "step {s}: {} after {prev}", g.loss);
        prev = g.loss;
    }
}

#[test]
fn zero_corrections_step_is_a_crowdlayer_step() {
    let ds = blobs_crowd(200, "IND-I", 2, 1, 3);
    let mut rng = RngStream::new(8);
    let clf = Classifier::new(ClassifierKind::Mlp, ds.dim(), 6, 10, &mut rng).unwrap();
    let t = random_confusions(ds.annotator_count(), 10, &mut rng);
    let zeros = CorrectionSet::zeros(3, 10, (0..ds.annotator_count()).map(|r| r % 3).collect()).unwrap();
    let step = StepParams {
        lr: 0.05,
        momentum: 0.9,
        weight_decay: 5e-4,
    };
    let (mut c1, mut t1, mut c2, mut t2) = (clf.clone(), t.clone(), clf, t);
    let batch: Vec<usize> = (0..32).collect();
    for _ in 0..3 {
        ccc_actual_step(&mut c1, &mut t1, None, &ds, &batch, step).unwrap();
        ccc_actual_step(&mut c2, &mut t2, Some(&zeros), &ds, &batch, step).unwrap();
    }
    assert_eq!(c1, c2);
    assert_eq!(t1.t, t2.t);
}

#[test]
fn meta_lr_formula() {
    let t = ConfusionSet::from_matrices(vec![Matrix::identity(2)]);
    let g = vec![Matrix::from_rows(&[vec![0.5, -0.25], vec![0.0, 0.1]]).unwrap()];
    assert_eq!(auto_meta_lr(&t, &g, 0.5), 1.0);
    assert_eq!(auto_meta_lr(&t, &g, 0.0), 0.0);
    assert_eq!(auto_meta_lr(&t, &[Matrix::zeros(2, 2)], 0.5), 0.0);
}

#[test]
fn outer_step_without_virtual_step_leaves_corrections_zero() {
    let mut rng = RngStream::new(2);
    let ds = random_dataset(12, 4, 3, 2, &mut rng);
    let clf = Classifier::new(ClassifierKind::Linear, 4, 0, 3, &mut rng).unwrap();
    let t = random_confusions(2, 3, &mut rng);
    let mut cs = CorrectionSet::zeros(1, 3, vec![0, 0]).unwrap();
    let out = ccc_outer_step(&clf, &t, &mut cs, &ds, &[0, 1, 2, 3], &[(4, 0), (5, 1)], 0.0, 0.5).unwrap();
    assert!(out.g_cor.iter().all(|m| m.as_slice().iter().all(|v| *v == 0.0)));
    assert!(cs.is_zero());
}

#[test]
fn absent_annotator_group_gets_no_hypergradient() {
    let mut rng = RngStream::new(6);
    let ds = random_dataset(12, 4, 3, 3, &mut rng);
    let clf = Classifier::new(ClassifierKind::Linear, 4, 0, 3, &mut rng).unwrap();
    let t = random_confusions(3, 3, &mut rng);
    // pick a batch that annotator 2 never labeled, and give it its own group
    let batch: Vec<usize> = (0..12).filter(|&i| ds.labels_of(i).iter().all(|&(a, _)| a != 2)).collect();
    assert!(!batch.is_empty());
    let mut cs = CorrectionSet::zeros(2, 3, vec![0, 0, 1]).unwrap();
    let out = ccc_outer_step(&clf, &t, &mut cs, &ds, &batch, &[(0, 0), (1, 1), (2, 2)], 0.5, 0.5).unwrap();
    assert!(out.g_cor[1].as_slice().iter().all(|v| *v == 0.0));
    assert!(out.g_cor[0].max_abs() > 0.0);
}

#[test]
fn distillation_takes_one_candidate_per_class_when_m_equals_c() {
    // one instance per class, labeled correctly
    let ds = CrowdDataset::new(
        Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap(),
        3,
        1,
        (0..3)
            .map(|i| Annotation {
                instance: i,
                annotator: 0,
                label: i,
            })
            .collect(),
        None,
    )
    .unwrap();
    let clf = Classifier::new(ClassifierKind::Linear, 2, 0, 3, &mut RngStream::new(1)).unwrap();
    let meta = distill_meta_set(&ds, &clf, 3).unwrap();
    let mut pairs: Vec<(usize, usize)> = meta.indices.iter().copied().zip(meta.labels.iter().copied()).collect();
    pairs.sort();
    assert_eq!(pairs, vec![(0, 0), (1, 1), (2, 2)]);
}

#[test]
fn distillation_keeps_the_smallest_losses_within_quota() {
    let ds = blobs_crowd(400, "IND-I", 3, 2, 9);
    let votes = aggregate_majority(&ds).unwrap();
    for seed in 0..5 {
        let clf = Classifier::new(ClassifierKind::Linear, ds.dim(), 0, 10, &mut RngStream::new(seed)).unwrap();
        for m in [10, 57, 200, 1000] {
            let meta = distill_meta_set(&ds, &clf, m).unwrap();
            let quota = m / 10;
            for class in 0..10 {
                let mut all: Vec<(f64, usize)> = (0..ds.len())
                    .filter(|&i| votes[i] == class)
                    .map(|i| (cross_entropy(&clf.forward(ds.feature(i)).unwrap().p, class).unwrap(), i))
                    .collect();
                all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut want: Vec<usize> = all.iter().take(quota).map(|p| p.1).collect();
                let mut got: Vec<usize> = meta
                    .indices
                    .iter()
                    .zip(&meta.labels)
                    .filter(|(_, &l)| l == class)
                    .map(|(&i, _)| i)
                    .collect();
                assert!(got.len() <= quota);
                want.sort();
                got.sort();
                assert_eq!(got, want, "m {m} class {class}");
            }
        }
    }
}

#[test]
fn grouping_trivial_cases() {
    let mut rng = RngStream::new(4);
    let base = random_confusions(6, 3, &mut rng);
    let mut first = base.clone();
    first.t[5] = first.t[0].clone();
    let mut second = random_confusions(6, 3, &mut rng);
    second.t[5] = second.t[0].clone();
    for seed in 0..10 {
        let g = group_annotators(&first, &second, 3, 100, &mut RngStream::new(seed)).unwrap();
        assert_eq!(g[0], g[5]);
        let own = group_annotators(&first, &base, 6, 100, &mut RngStream::new(seed)).unwrap();
        let mut sorted = own.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 6, "{own:?}");
    }
}

#[test]
fn ccc_curves_have_length_e_for_both_models() {
    let ds = blobs_crowd(300, "IND-I", 2, 1, 1);
    let cfg = TrainConfig {
        algo: Algo::Ccc,
        epochs: 5,
        warmup: 2,
        groups: 3,
        ..TrainConfig::default()
    };
    let r = train(&ds, &cfg).unwrap();
    assert_eq!(r.curves.len(), 2);
    assert!(r.curves.iter().all(|c| c.len() == 5));
    let g = crowd_loss_and_grads(&r.classifiers[0], &ConfusionSet::from_matrices(r.confusions[0].clone()), None, &ds, &[0, 1])
        .unwrap();
    assert!(g.loss.is_finite());
}

#[test]
fn kmeans_finds_three_clumps() {
    let mut rng = RngStream::new(12);
    let centers = [[0.0, 0.0], [5.0, 5.0], [-5.0, 5.0]];
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..10 {
            points.push(vec![c[0] + 0.3 * rng.normal(), c[1] + 0.3 * rng.normal()]);
            truth.push(k);
        }
    }
    let res = kmeans(&points, 3, 100, &mut RngStream::new(1)).unwrap();
    for i in 0..30 {
        for j in 0..30 {
            assert_eq!(truth[i] == truth[j], res.assignments[i] == res.assignments[j]);
        }
    }
    let best = (0..50)
        .map(|s| kmeans(&points, 3, 100, &mut RngStream::new(100 + s)).unwrap().inertia)
        .fold(f64::INFINITY, f64::min);
    assert!(res.inertia <= best * 1.01, "{} vs {best}", res.inertia);
}
