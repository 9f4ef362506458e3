use std::time::Instant;

use super::common::{epoch_batches, eval_split, model_stream};
use super::crowdlayer::{crowdlayer_epoch, init_model, step_params};
use super::majority::aggregate_majority;
use super::steps::{ccc_actual_step, ccc_outer_step};
use super::{Algo, ConfusionSet, CorrectionSet, GroupRecord, GroupingMode, RunResult, TrainConfig, ZeroReset};
use crate::crowddata::{evaluate_accuracy, CrowdDataset, MetaSet};
use crate::error::{ensure, Result};
use crate::mathcore::{cross_entropy, kmeans, RngStream};
use crate::models::Classifier;

/// Small-loss meta set scored by `scorer`.
///
/// Each instance's candidate label is the majority vote of its crowd
/// labels. For every class the `meta_size / C` candidates with the
/// smallest scorer cross-entropy are kept (ties by instance index); classes
/// with fewer candidates keep all of them.
pub fn distill_meta_set(ds: &CrowdDataset, scorer: &Classifier, meta_size: usize) -> Result<MetaSet> {
    let c = ds.class_count();
    let quota = meta_size / c;
    let votes = aggregate_majority(ds)?;
    let mut by_class: Vec<Vec<(f64, usize)>> = vec![Vec::new(); c];
    for (i, &label) in votes.iter().enumerate() {
        let p = scorer.forward(ds.feature(i))?.p;
        by_class[label].push((cross_entropy(&p, label)?, i));
    }
    let mut meta = MetaSet::default();
    for (label, mut cands) in by_class.into_iter().enumerate() {
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, i) in cands.iter().take(quota) {
            meta.indices.push(i);
            meta.labels.push(label);
        }
    }
    Ok(meta)
}

fn flatten(sets: &[&ConfusionSet], r: usize) -> Vec<f64> {
    sets.iter().flat_map(|s| s.t[r].as_slice().iter().copied()).collect()
}

/// K-means over each annotator's concatenated, flattened confusion matrices
/// from both models.
pub fn group_annotators(
    first: &ConfusionSet,
    second: &ConfusionSet,
    groups: usize,
    max_iter: usize,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    ensure!(
        first.len() == second.len(),
        "confusion sets cover {} and {} annotators",
        first.len(),
        second.len()
    );
    let points: Vec<Vec<f64>> = (0..first.len()).map(|r| flatten(&[first, second], r)).collect();
    Ok(kmeans(&points, groups, max_iter, rng)?.assignments)
}

/// K-means over one model's flattened confusion matrices.
pub fn group_annotators_single(
    set: &ConfusionSet,
    groups: usize,
    max_iter: usize,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    let points: Vec<Vec<f64>> = (0..set.len()).map(|r| flatten(&[set], r)).collect();
    Ok(kmeans(&points, groups, max_iter, rng)?.assignments)
}

/// Cycles through a shuffled meta set, reshuffling on every pass.
struct MetaCursor<'a> {
    meta: &'a MetaSet,
    order: Vec<usize>,
    pos: usize,
}

impl<'a> MetaCursor<'a> {
    fn new(meta: &'a MetaSet, rng: &mut RngStream) -> Self {
        Self {
            meta,
            order: rng.permutation(meta.len()),
            pos: 0,
        }
    }

    fn next_batch(&mut self, m: usize, rng: &mut RngStream) -> Vec<(usize, usize)> {
        let n = self.meta.len();
        let take = m.min(n);
        let mut out = Vec::with_capacity(take);
        while out.len() < take {
            if self.pos == n {
                self.order = rng.permutation(n);
                self.pos = 0;
            }
            let j = self.order[self.pos];
            self.pos += 1;
            out.push((self.meta.indices[j], self.meta.labels[j]));
        }
        out
    }
}

fn purity(meta: &MetaSet, truth: Option<&[usize]>) -> Option<f64> {
    let t = truth?;
    if meta.is_empty() {
        return None;
    }
    let hits = meta
        .indices
        .iter()
        .zip(&meta.labels)
        .filter(|(&i, &l)| t[i] == l)
        .count();
    Some(hits as f64 / meta.len() as f64)
}

/// Coupled confusion correction with two models.
///
/// Warmup epochs run plain CrowdLayer on both models. Every later epoch
/// distills each model's meta set with the other model, regroups the
/// annotators, then per batch takes an outer (virtual + meta) step on the
/// group corrections followed by an actual step on the classifier and
/// confusions. Model 1 finishes its epoch before model 2 starts.
pub fn train_ccc(ds: &CrowdDataset, cfg: &TrainConfig) -> Result<RunResult> {
    let cfg = TrainConfig {
        algo: Algo::Ccc,
        ..cfg.clone()
    };
    cfg.validate()?;
    ds.require_annotated()?;
    ensure!(
        cfg.groups <= ds.annotator_count(),
        "{} groups for {} annotators",
        cfg.groups,
        ds.annotator_count()
    );
    let started = Instant::now();
    let (eval_x, eval_y) = eval_split(ds)?;
    let c = ds.class_count();
    let r = ds.annotator_count();

    let mut states = Vec::with_capacity(2);
    let mut batch_rngs = Vec::with_capacity(2);
    let mut meta_rngs = Vec::with_capacity(2);
    for k in 0..2 {
        let (state, batch_rng) = init_model(ds, &cfg, k)?;
        states.push(state);
        batch_rngs.push(batch_rng);
        meta_rngs.push(model_stream(cfg.seed, k).split("meta"));
    }
    let kmeans_root = RngStream::new(cfg.seed).split("kmeans");

    let mut curves = vec![Vec::new(); 2];
    let mut groups_log = Vec::new();
    let mut meta_purity = vec![Vec::new(); 2];
    let mut warnings = Vec::new();

    for epoch in 0..cfg.epochs {
        if epoch < cfg.warmup {
            for k in 0..2 {
                crowdlayer_epoch(&mut states[k], ds, &cfg, &mut batch_rngs[k])?;
            }
        } else {
            // each model's meta set is scored by the other model
            let meta0 = distill_meta_set(ds, &states[1].clf, cfg.meta_size)?;
            let meta1 = distill_meta_set(ds, &states[0].clf, cfg.meta_size)?;
            for (k, meta) in [meta0, meta1].into_iter().enumerate() {
                let counts = meta.class_counts(c);
                for (class, &n) in counts.iter().enumerate() {
                    if n == 0 {
                        let msg = format!("epoch {epoch}, model {}: no meta candidates for class {class}", k + 1);
                        log::warn!("{msg}");
                        warnings.push(msg);
                    }
                }
                if let Some(p) = purity(&meta, ds.truth()) {
                    meta_purity[k].push(p);
                }
                states[k].meta_set = meta;
            }

            let mut kmeans_rng = kmeans_root.split(&format!("epoch{epoch}"));
            let group_maps: [Vec<usize>; 2] = match cfg.grouping {
                GroupingMode::Joint => {
                    let g = group_annotators(
                        &states[0].confusions,
                        &states[1].confusions,
                        cfg.groups,
                        cfg.kmeans_max_iter,
                        &mut kmeans_rng,
                    )?;
                    groups_log.push(GroupRecord {
                        epoch,
                        model: None,
                        group_of: g.clone(),
                    });
                    [g.clone(), g]
                }
                GroupingMode::PerModel => {
                    let mut maps = Vec::with_capacity(2);
                    for k in 0..2 {
                        let g = group_annotators_single(
                            &states[k].confusions,
                            cfg.groups,
                            cfg.kmeans_max_iter,
                            &mut kmeans_rng.split(&format!("model{k}")),
                        )?;
                        groups_log.push(GroupRecord {
                            epoch,
                            model: Some(k),
                            group_of: g.clone(),
                        });
                        maps.push(g);
                    }
                    let second = maps.pop().expect("two maps");
                    [maps.pop().expect("two maps"), second]
                }
            };

            for (k, group_of) in group_maps.into_iter().enumerate() {
                debug_assert_eq!(group_of.len(), r);
                let state = &mut states[k];
                let mut corrections = CorrectionSet::zeros(cfg.groups, c, group_of)?;
                let step = step_params(&cfg, epoch);
                let meta = state.meta_set.clone();
                let mut cursor = MetaCursor::new(&meta, &mut meta_rngs[k]);
                let (mut meta_sum, mut train_sum, mut v_max, mut steps) = (0.0, 0.0, 0.0f64, 0usize);
                for batch in epoch_batches(ds.len(), cfg.batch_size, &mut batch_rngs[k]) {
                    if cfg.zero_reset == ZeroReset::PerIteration {
                        corrections.reset();
                    }
                    let meta_batch = cursor.next_batch(cfg.meta_batch, &mut meta_rngs[k]);
                    let outer = ccc_outer_step(
                        &state.clf,
                        &state.confusions,
                        &mut corrections,
                        ds,
                        &batch,
                        &meta_batch,
                        step.lr,
                        cfg.gamma,
                    )?;
                    let actual = ccc_actual_step(
                        &mut state.clf,
                        &mut state.confusions,
                        Some(&corrections),
                        ds,
                        &batch,
                        step,
                    )?;
                    meta_sum += outer.meta_loss;
                    train_sum += actual.loss;
                    v_max = corrections.v.iter().fold(v_max, |m, v| m.max(v.max_abs()));
                    steps += 1;
                }
                log::debug!(
                    "epoch {epoch} model {}: train loss {:.4}, meta loss {:.4}, max |V| {:.4}, max T {:.4}",
                    k + 1,
                    train_sum / steps as f64,
                    meta_sum / steps as f64,
                    v_max,
                    state.confusions.max_entry()
                );
                state.corrections = Some(corrections);
                state.epoch += 1;
            }
        }
        for k in 0..2 {
            curves[k].push(evaluate_accuracy(&states[k].clf, eval_x, eval_y)?);
        }
    }

    Ok(RunResult {
        algo: Algo::Ccc,
        config: cfg,
        curves,
        confusions: states.iter().map(|s| s.confusions.t.clone()).collect(),
        groups: groups_log,
        meta_purity,
        classifiers: states.into_iter().map(|s| s.clf).collect(),
        warnings,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}
