use serde::{Deserialize, Serialize};

use crate::error::{contract, ensure, Result};
use crate::mathcore::{Matrix, RngStream};

/// How one simulated annotator turns a true label into a reported label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PatternSpec {
    /// Correct with probability `1 - epsilon`, otherwise uniform over the
    /// other classes.
    Symmetric { epsilon: f64 },
    /// Correct with probability `1 - epsilon`, otherwise the paired class.
    /// Pairs default to `c -> (c + 1) mod C`.
    Pair {
        epsilon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pairs: Option<Vec<usize>>,
    },
    /// Always correct on `good_classes`, uniform over all classes elsewhere.
    Classwise { good_classes: Vec<usize> },
    /// Uniform over all classes.
    Dummy,
    /// Repeats the target annotator's label.
    Copy,
    /// Correct when the target is correct, uniform otherwise.
    Supportive,
    /// Correct when the target is wrong, uniform otherwise.
    Opposite,
}

impl PatternSpec {
    pub fn symmetric(epsilon: f64) -> Self {
        PatternSpec::Symmetric { epsilon }
    }

    pub fn pair(epsilon: f64) -> Self {
        PatternSpec::Pair {
            epsilon,
            pairs: None,
        }
    }

    pub fn classwise(good: &[usize]) -> Self {
        PatternSpec::Classwise {
            good_classes: good.to_vec(),
        }
    }

    pub fn is_correlated(&self) -> bool {
        matches!(
            self,
            PatternSpec::Copy | PatternSpec::Supportive | PatternSpec::Opposite
        )
    }

    /// Short human-readable name, e.g. `sym-0.3` or `class-1,3,4`.
    pub fn label(&self) -> String {
        match self {
            PatternSpec::Symmetric { epsilon } => format!("sym-{epsilon}"),
            PatternSpec::Pair { epsilon, .. } => format!("pair-{epsilon}"),
            PatternSpec::Classwise { good_classes } => format!(
                "class-{}",
                good_classes
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            PatternSpec::Dummy => "dummy".into(),
            PatternSpec::Copy => "copy".into(),
            PatternSpec::Supportive => "supportive".into(),
            PatternSpec::Opposite => "opposite".into(),
        }
    }
}

/// Row-stochastic transition matrix (rows: true class, columns: reported
/// label) of an independent pattern.
pub fn pattern_matrix(spec: &PatternSpec, c: usize) -> Result<Matrix> {
    ensure!(c >= 1, "class count must be positive");
    let check_eps = |e: f64| -> Result<()> {
        ensure!((0.0..=1.0).contains(&e), "epsilon {e} outside [0, 1]");
        Ok(())
    };
    let mut m = Matrix::zeros(c, c);
    match spec {
        PatternSpec::Symmetric { epsilon } => {
            check_eps(*epsilon)?;
            if c == 1 {
                m[(0, 0)] = 1.0;
                return Ok(m);
            }
            let off = epsilon / (c - 1) as f64;
            for p in 0..c {
                for q in 0..c {
                    m[(p, q)] = if p == q { 1.0 - epsilon } else { off };
                }
            }
        }
        PatternSpec::Pair { epsilon, pairs } => {
            check_eps(*epsilon)?;
            let map: Vec<usize> = match pairs {
                Some(p) => {
                    ensure!(p.len() == c, "pair table has {} entries for {c} classes", p.len());
                    ensure!(p.iter().all(|&q| q < c), "pair table entry out of range");
                    p.clone()
                }
                None => (0..c).map(|p| (p + 1) % c).collect(),
            };
            for p in 0..c {
                m[(p, p)] += 1.0 - epsilon;
                m[(p, map[p])] += epsilon;
            }
        }
        PatternSpec::Classwise { good_classes } => {
            ensure!(
                good_classes.iter().all(|&g| g < c),
                "class-wise good classes {good_classes:?} outside [0, {c})"
            );
            for p in 0..c {
                if good_classes.contains(&p) {
                    m[(p, p)] = 1.0;
                } else {
                    m.row_mut(p).fill(1.0 / c as f64);
                }
            }
        }
        PatternSpec::Dummy => m.fill(1.0 / c as f64),
        other => {
            return contract(format!(
                "{} is a correlated pattern without a transition matrix",
                other.label()
            ))
        }
    }
    Ok(m)
}

/// Expected fraction of wrong labels under a uniform class prior.
pub fn expected_error_rate(spec: &PatternSpec, c: usize) -> Result<f64> {
    let m = pattern_matrix(spec, c)?;
    Ok((0..c).map(|p| 1.0 - m[(p, p)]).sum::<f64>() / c as f64)
}

pub(crate) fn sample_row(row: &[f64], rng: &mut RngStream) -> usize {
    let u = rng.uniform();
    let mut acc = 0.0;
    for (q, w) in row.iter().enumerate() {
        acc += w;
        if u < acc {
            return q;
        }
    }
    // rounding left `u` past the final cumulative sum
    row.iter().rposition(|w| *w > 0.0).unwrap_or(row.len() - 1)
}

pub fn sample_independent_label(
    spec: &PatternSpec,
    c: usize,
    true_label: usize,
    rng: &mut RngStream,
) -> Result<usize> {
    ensure!(true_label < c, "true label {true_label} out of range");
    let m = pattern_matrix(spec, c)?;
    Ok(sample_row(m.row(true_label), rng))
}

pub fn sample_correlated_label(
    spec: &PatternSpec,
    c: usize,
    true_label: usize,
    target_label: Option<usize>,
    rng: &mut RngStream,
) -> Result<usize> {
    ensure!(true_label < c, "true label {true_label} out of range");
    let Some(target) = target_label else {
        return contract("correlated pattern needs the target annotator's label");
    };
    ensure!(target < c, "target label {target} out of range");
    Ok(match spec {
        PatternSpec::Copy => target,
        PatternSpec::Supportive if target == true_label => true_label,
        PatternSpec::Opposite if target != true_label => true_label,
        PatternSpec::Supportive | PatternSpec::Opposite => rng.below(c),
        other => {
            return contract(format!("{} is not a correlated pattern", other.label()))
        }
    })
}
