use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{Algo, TrainConfig};
use crate::error::{Error, Result};
use crate::mathcore::Matrix;
use crate::models::{write_classifier, Classifier};

/// Annotator grouping used during one epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRecord {
    pub epoch: usize,
    /// `None` when the grouping is shared by both models.
    pub model: Option<usize>,
    pub group_of: Vec<usize>,
}

/// Outcome of one training run (one or two models).
#[derive(Debug, Clone)]
pub struct RunResult {
    pub algo: Algo,
    pub config: TrainConfig,
    /// Per-model evaluation accuracy after each epoch.
    pub curves: Vec<Vec<f64>>,
    /// Per-model final confusion matrices (empty for majority vote).
    pub confusions: Vec<Vec<Matrix>>,
    pub groups: Vec<GroupRecord>,
    /// Per-model, per-epoch fraction of meta-set labels equal to the truth
    /// (CCC epochs only, when truth is known).
    pub meta_purity: Vec<Vec<f64>>,
    pub classifiers: Vec<Classifier>,
    pub warnings: Vec<String>,
    pub wall_time_secs: f64,
}

#[derive(Serialize)]
struct RunJson<'a> {
    algo: Algo,
    seed: u64,
    config: &'a TrainConfig,
    best: Vec<f64>,
    last: Vec<f64>,
    mean_best: f64,
    mean_last: f64,
    meta_purity_last: Vec<Option<f64>>,
    warnings: &'a [String],
    wall_time_secs: f64,
}

impl RunResult {
    pub fn best(&self) -> Vec<f64> {
        self.curves
            .iter()
            .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    pub fn last(&self) -> Vec<f64> {
        self.curves
            .iter()
            .map(|c| c.last().copied().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn mean_last(&self) -> f64 {
        let l = self.last();
        l.iter().sum::<f64>() / l.len() as f64
    }

    pub fn mean_best(&self) -> f64 {
        let b = self.best();
        b.iter().sum::<f64>() / b.len() as f64
    }

    /// `run.json` contents.
    pub fn run_json(&self) -> Result<String> {
        let json = RunJson {
            algo: self.algo,
            seed: self.config.seed,
            config: &self.config,
            best: self.best(),
            last: self.last(),
            mean_best: self.mean_best(),
            mean_last: self.mean_last(),
            meta_purity_last: self.meta_purity.iter().map(|v| v.last().copied()).collect(),
            warnings: &self.warnings,
            wall_time_secs: self.wall_time_secs,
        };
        let mut s = serde_json::to_string_pretty(&json)?;
        s.push('\n');
        Ok(s)
    }

    /// `curves.csv`: `epoch,acc` for one model, `epoch,acc_model1,acc_model2` for two.
    pub fn curves_csv(&self) -> String {
        let mut s = if self.curves.len() == 1 {
            String::from("epoch,acc\n")
        } else {
            let cols: Vec<String> = (1..=self.curves.len()).map(|k| format!("acc_model{k}")).collect();
            format!("epoch,{}\n", cols.join(","))
        };
        let epochs = self.curves.first().map_or(0, Vec::len);
        for e in 0..epochs {
            write!(s, "{e}").unwrap();
            for c in &self.curves {
                write!(s, ",{}", c[e]).unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// `confusions.csv`: `model,annotator,row,col,value` (models 1-based).
    pub fn confusions_csv(&self) -> String {
        let mut s = String::from("model,annotator,row,col,value\n");
        for (k, set) in self.confusions.iter().enumerate() {
            for (r, m) in set.iter().enumerate() {
                for p in 0..m.rows() {
                    for q in 0..m.cols() {
                        writeln!(s, "{},{r},{p},{q},{}", k + 1, m[(p, q)]).unwrap();
                    }
                }
            }
        }
        s
    }

    /// `groups.csv`: `epoch,annotator,group`, with a `model` column when
    /// each model was grouped separately.
    pub fn groups_csv(&self) -> String {
        let per_model = self.groups.iter().any(|g| g.model.is_some());
        let mut s = if per_model {
            String::from("epoch,model,annotator,group\n")
        } else {
            String::from("epoch,annotator,group\n")
        };
        for rec in &self.groups {
            for (r, g) in rec.group_of.iter().enumerate() {
                match rec.model {
                    Some(k) => writeln!(s, "{},{},{r},{g}", rec.epoch, k + 1).unwrap(),
                    None => writeln!(s, "{},{r},{g}", rec.epoch).unwrap(),
                }
            }
        }
        s
    }

    /// Writes `run.json`, `curves.csv`, `confusions.csv`, `groups.csv`
    /// (CCC only) and the trained classifiers (`model.bin`, or
    /// `model1.bin` and `model2.bin`).
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, body: &str| -> Result<()> {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        put("run.json", &self.run_json()?)?;
        put("curves.csv", &self.curves_csv())?;
        put("confusions.csv", &self.confusions_csv())?;
        if self.algo == Algo::Ccc {
            put("groups.csv", &self.groups_csv())?;
        }
        for (k, clf) in self.classifiers.iter().enumerate() {
            let name = if self.classifiers.len() == 1 {
                "model.bin".to_string()
            } else {
                format!("model{}.bin", k + 1)
            };
            let mut bytes = Vec::new();
            write_classifier(clf, &mut bytes).expect("in-memory write");
            let p = dir.join(&name);
            fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
