use std::time::Instant;

use super::common::{epoch_batches, eval_split, model_stream};
use super::confusion::init_confusion_votes_linear;
use super::steps::{ccc_actual_step, StepParams};
use super::{Algo, ConfusionInit, ConfusionSet, CorrectionSet, RunResult, TrainConfig};
use crate::crowddata::{evaluate_accuracy, CrowdDataset, MetaSet};
use crate::error::Result;
use crate::mathcore::RngStream;
use crate::models::Classifier;

/// Everything one model carries between epochs.
#[derive(Debug, Clone)]
pub struct CccState {
    pub clf: Classifier,
    pub confusions: ConfusionSet,
    pub corrections: Option<CorrectionSet>,
    pub meta_set: MetaSet,
    pub epoch: usize,
}

pub(crate) fn initial_confusions(ds: &CrowdDataset, init: ConfusionInit) -> ConfusionSet {
    match init {
        ConfusionInit::Identity => ConfusionSet::identity(ds.annotator_count(), ds.class_count()),
        ConfusionInit::Votes => init_confusion_votes_linear(ds),
    }
}

/// Fresh state of model `k` plus its batch-order stream.
pub(crate) fn init_model(
    ds: &CrowdDataset,
    cfg: &TrainConfig,
    k: usize,
) -> Result<(CccState, RngStream)> {
    let stream = model_stream(cfg.seed, k);
    let clf = Classifier::new(
        cfg.model,
        ds.dim(),
        cfg.hidden_dim,
        ds.class_count(),
        &mut stream.split("init"),
    )?;
    let state = CccState {
        clf,
        confusions: initial_confusions(ds, cfg.confusion_init),
        corrections: None,
        meta_set: MetaSet::default(),
        epoch: 0,
    };
    Ok((state, stream.split("batches")))
}

pub(crate) fn step_params(cfg: &TrainConfig, epoch: usize) -> StepParams {
    StepParams {
        lr: cfg.lr_at(epoch),
        momentum: cfg.momentum,
        weight_decay: cfg.weight_decay,
    }
}

/// One plain CrowdLayer epoch over shuffled batches.
pub(crate) fn crowdlayer_epoch(
    state: &mut CccState,
    ds: &CrowdDataset,
    cfg: &TrainConfig,
    batch_rng: &mut RngStream,
) -> Result<()> {
    let step = step_params(cfg, state.epoch);
    for batch in epoch_batches(ds.len(), cfg.batch_size, batch_rng) {
        ccc_actual_step(&mut state.clf, &mut state.confusions, None, ds, &batch, step)?;
    }
    state.epoch += 1;
    Ok(())
}

/// CrowdLayer: joint SGD on the classifier and per-annotator confusions.
pub fn train_crowdlayer(ds: &CrowdDataset, cfg: &TrainConfig) -> Result<(RunResult, CccState)> {
    train_crowdlayer_replica(ds, cfg, 0)
}

/// [`train_crowdlayer`] using the random streams of model `k`, so that its
/// trajectory lines up with model `k` of a CCC run with the same seed.
pub fn train_crowdlayer_replica(
    ds: &CrowdDataset,
    cfg: &TrainConfig,
    k: usize,
) -> Result<(RunResult, CccState)> {
    let cfg = TrainConfig {
        algo: Algo::Crowdlayer,
        ..cfg.clone()
    };
    cfg.validate()?;
    ds.require_annotated()?;
    let started = Instant::now();
    let (eval_x, eval_y) = eval_split(ds)?;
    let (mut state, mut batch_rng) = init_model(ds, &cfg, k)?;
    let mut curve = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        crowdlayer_epoch(&mut state, ds, &cfg, &mut batch_rng)?;
        curve.push(evaluate_accuracy(&state.clf, eval_x, eval_y)?);
    }
    let result = RunResult {
        algo: Algo::Crowdlayer,
        config: cfg,
        curves: vec![curve],
        confusions: vec![state.confusions.t.clone()],
        groups: Vec::new(),
        meta_purity: Vec::new(),
        classifiers: vec![state.clf.clone()],
        warnings: Vec::new(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((result, state))
}
