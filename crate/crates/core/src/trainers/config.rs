use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::models::ClassifierKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Majority,
    Crowdlayer,
    Ccc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfusionInit {
    Identity,
    Votes,
}

/// When correction matrices are reset to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroReset {
    PerIteration,
    PerEpoch,
}

/// Which confusion matrices feed the annotator clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupingMode {
    /// One clustering over both models' matrices, shared by both models.
    Joint,
    /// Each model clusters its own matrices.
    PerModel,
}

macro_rules! from_str_via_serde {
    ($($t:ty),*) => {$(
        impl std::str::FromStr for $t {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                serde_json::from_value(serde_json::Value::String(s.to_owned()))
                    .map_err(|_| format!("invalid value `{s}`"))
            }
        }
    )*};
}
from_str_via_serde!(Algo, ConfusionInit, ZeroReset, GroupingMode);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algo: Algo,
    pub model: ClassifierKind,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub warmup: usize,
    pub batch_size: usize,
    pub meta_batch: usize,
    /// Shared by the virtual and actual steps.
    pub lr: f64,
    /// Epoch from which `lr` is divided by 10.
    pub lr_decay_epoch: Option<usize>,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Correction rate scaling the automatic meta learning rate.
    pub gamma: f64,
    pub meta_size: usize,
    pub groups: usize,
    pub seed: u64,
    pub confusion_init: ConfusionInit,
    pub zero_reset: ZeroReset,
    pub grouping: GroupingMode,
    pub kmeans_max_iter: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algo: Algo::Ccc,
            model: ClassifierKind::Linear,
            hidden_dim: 0,
            epochs: 60,
            warmup: 10,
            batch_size: 128,
            meta_batch: 100,
            lr: 0.02,
            lr_decay_epoch: Some(40),
            momentum: 0.9,
            weight_decay: 5e-4,
            gamma: 0.5,
            meta_size: 200,
            groups: 5,
            seed: 0,
            confusion_init: ConfusionInit::Identity,
            zero_reset: ZeroReset::PerIteration,
            grouping: GroupingMode::Joint,
            kmeans_max_iter: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.epochs >= 1, "epochs must be positive");
        ensure!(self.batch_size >= 1, "batch_size must be positive");
        ensure!(self.lr >= 0.0 && self.lr.is_finite(), "lr must be non-negative");
        ensure!(self.gamma >= 0.0 && self.gamma.is_finite(), "gamma must be non-negative");
        ensure!(
            (0.0..1.0).contains(&self.momentum),
            "momentum must lie in [0, 1)"
        );
        ensure!(self.weight_decay >= 0.0, "weight_decay must be non-negative");
        match self.model {
            ClassifierKind::Linear => {
                ensure!(self.hidden_dim == 0, "linear model takes hidden_dim = 0")
            }
            ClassifierKind::Mlp => ensure!(self.hidden_dim >= 1, "mlp needs hidden_dim >= 1"),
        }
        if self.algo == Algo::Ccc {
            ensure!(
                self.warmup < self.epochs,
                "warmup ({}) must be shorter than epochs ({})",
                self.warmup,
                self.epochs
            );
            ensure!(self.meta_batch >= 1, "meta_batch must be positive");
            ensure!(self.meta_size >= 1, "meta_size must be positive");
            ensure!(self.groups >= 1, "groups must be positive");
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.lr_decay_epoch {
            Some(e) if epoch >= e => self.lr / 10.0,
            _ => self.lr,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_enum_names() {
        assert_eq!("ccc".parse::<Algo>().unwrap(), Algo::Ccc);
        assert_eq!("per-epoch".parse::<ZeroReset>().unwrap(), ZeroReset::PerEpoch);
        assert_eq!("per-model".parse::<GroupingMode>().unwrap(), GroupingMode::PerModel);
        assert!("nope".parse::<Algo>().is_err());
    }

    #[test]
    fn validation() {
        TrainConfig::default().validate().unwrap();
        let bad = TrainConfig {
            warmup: 60,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let decay = TrainConfig::default();
        assert_eq!(decay.lr_at(39), decay.lr);
        assert_eq!(decay.lr_at(40), decay.lr / 10.0);
    }
}
