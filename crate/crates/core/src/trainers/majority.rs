use std::time::Instant;

use super::common::{epoch_batches, eval_split, model_stream};
use super::{Algo, RunResult, TrainConfig};
use crate::crowddata::{evaluate_accuracy, CrowdDataset};
use crate::error::{ensure, Result};
use crate::models::{loss_and_grads, softmax_ce, Classifier};

/// Most frequent label; ties go to the lowest class index.
pub fn majority_vote(labels: &[usize]) -> Result<usize> {
    ensure!(!labels.is_empty(), "majority vote of an empty label set");
    let max = *labels.iter().max().expect("nonempty");
    let mut counts = vec![0usize; max + 1];
    labels.iter().for_each(|&l| counts[l] += 1);
    let mut best = 0;
    for (l, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = l;
        }
    }
    Ok(best)
}

/// Majority-vote label of every instance.
pub fn aggregate_majority(ds: &CrowdDataset) -> Result<Vec<usize>> {
    (0..ds.len())
        .map(|i| {
            let labels: Vec<usize> = ds.labels_of(i).iter().map(|&(_, l)| l).collect();
            majority_vote(&labels)
        })
        .collect()
}

/// Trains on majority-vote labels with plain cross-entropy.
pub fn train_majority(ds: &CrowdDataset, cfg: &TrainConfig) -> Result<RunResult> {
    let cfg = TrainConfig {
        algo: Algo::Majority,
        ..cfg.clone()
    };
    cfg.validate()?;
    ds.require_annotated()?;
    let started = Instant::now();
    let labels = aggregate_majority(ds)?;
    let (eval_x, eval_y) = eval_split(ds)?;
    let stream = model_stream(cfg.seed, 0);
    let mut clf = Classifier::new(
        cfg.model,
        ds.dim(),
        cfg.hidden_dim,
        ds.class_count(),
        &mut stream.split("init"),
    )?;
    let mut batch_rng = stream.split("batches");
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        for batch in epoch_batches(ds.len(), cfg.batch_size, &mut batch_rng) {
            let rows: Vec<&[f64]> = batch.iter().map(|&i| ds.feature(i)).collect();
            let (_, grads) =
                loss_and_grads(&clf, &rows, |j, f| Ok(softmax_ce(&f.p, labels[batch[j]])))?;
            clf.sgd_step(&grads, lr, cfg.momentum, cfg.weight_decay)?;
        }
        curve.push(evaluate_accuracy(&clf, eval_x, eval_y)?);
    }
    Ok(RunResult {
        algo: Algo::Majority,
        config: cfg,
        curves: vec![curve],
        confusions: Vec::new(),
        groups: Vec::new(),
        meta_purity: Vec::new(),
        classifiers: vec![clf],
        warnings: Vec::new(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}
