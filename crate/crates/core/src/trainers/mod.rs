//! Training algorithms: majority vote, CrowdLayer, and coupled confusion
//! correction (CCC).
//!
//! Confusion matrices follow the convention `q = p (T + V)`: rows index the
//! true class and columns the reported label, matching the orientation of
//! empirical confusion matrices.

mod ccc;
mod common;
mod config;
mod confusion;
mod crowdlayer;
mod crowdloss;
mod majority;
mod result;
mod steps;

pub use ccc::{distill_meta_set, group_annotators, group_annotators_single, train_ccc};
pub use common::eval_split;
pub use config::{Algo, ConfusionInit, GroupingMode, TrainConfig, ZeroReset};
pub use confusion::{
    init_confusion_votes, init_confusion_votes_linear, ConfusionSet, CorrectionSet, VOTE_SMOOTHING,
};
pub use crowdlayer::{train_crowdlayer, train_crowdlayer_replica, CccState};
pub use crowdloss::crowdlayer_instance_loss;
pub use majority::{aggregate_majority, majority_vote, train_majority};
pub use result::{GroupRecord, RunResult};
pub use steps::{
    auto_meta_lr, ccc_actual_step, ccc_outer_step, crowd_loss_and_grads, virtual_meta_loss,
    CrowdGrads, OuterStep, StepParams,
};

use crate::crowddata::CrowdDataset;
use crate::error::Result;

/// Runs the algorithm named in `cfg.algo`.
pub fn train(ds: &CrowdDataset, cfg: &TrainConfig) -> Result<RunResult> {
    match cfg.algo {
        Algo::Majority => train_majority(ds, cfg),
        Algo::Crowdlayer => train_crowdlayer(ds, cfg).map(|(r, _)| r),
        Algo::Ccc => train_ccc(ds, cfg),
    }
}
