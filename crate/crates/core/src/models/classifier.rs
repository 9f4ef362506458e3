use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::mathcore::{softmax, Matrix, ProbVec, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    /// Softmax regression.
    Linear,
    /// One ReLU hidden layer followed by a softmax layer.
    Mlp,
}

impl ClassifierKind {
    pub fn tag(self) -> u32 {
        match self {
            ClassifierKind::Linear => 0,
            ClassifierKind::Mlp => 1,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(ClassifierKind::Linear),
            1 => Some(ClassifierKind::Mlp),
            _ => None,
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(ClassifierKind::Linear),
            "mlp" => Ok(ClassifierKind::Mlp),
            other => Err(format!("unknown classifier kind `{other}`")),
        }
    }
}

/// One gradient tensor per parameter tensor, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSet(pub Vec<Matrix>);

impl GradSet {
    pub fn zeros_like(params: &[Matrix]) -> Self {
        GradSet(params.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|m| m.as_slice())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Input of the last layer: the features themselves for the linear kind.
    pub penultimate: Vec<f64>,
    /// Hidden pre-activations (MLP only).
    pre_activation: Vec<f64>,
    pub logits: Vec<f64>,
    pub p: ProbVec,
}

/// Copy of the last (hidden-to-class) layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LastLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl LastLayer {
    pub fn logits(&self, penultimate: &[f64]) -> Vec<f64> {
        let mut z = self.weights.vec_mul(penultimate);
        for (zj, bj) in z.iter_mut().zip(&self.bias) {
            *zj += bj;
        }
        z
    }

    pub fn probs(&self, penultimate: &[f64]) -> ProbVec {
        softmax(&self.logits(penultimate))
    }
}

/// A softmax classifier. Parameters are stored as matrices in declaration
/// order: `[W, b]` for the linear kind and `[W1, b1, W2, b2]` for the MLP;
/// biases are `1 x n` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    kind: ClassifierKind,
    input_dim: usize,
    hidden_dim: usize,
    class_count: usize,
    params: Vec<Matrix>,
    momentum: Vec<Matrix>,
}

fn uniform_init(rows: usize, cols: usize, rng: &mut RngStream) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| -bound + 2.0 * bound * rng.uniform())
        .collect();
    Matrix::from_vec(rows, cols, data).expect("finite init")
}

impl Classifier {
    pub fn new(
        kind: ClassifierKind,
        input_dim: usize,
        hidden_dim: usize,
        class_count: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        ensure!(input_dim >= 1, "input_dim must be at least 1");
        ensure!(class_count >= 1, "class_count must be at least 1");
        let params = match kind {
            ClassifierKind::Linear => {
                ensure!(hidden_dim == 0, "linear classifier takes hidden_dim = 0");
                vec![
                    uniform_init(input_dim, class_count, rng),
                    Matrix::zeros(1, class_count),
                ]
            }
            ClassifierKind::Mlp => {
                ensure!(hidden_dim >= 1, "mlp classifier needs hidden_dim >= 1");
                vec![
                    uniform_init(input_dim, hidden_dim, rng),
                    Matrix::zeros(1, hidden_dim),
                    uniform_init(hidden_dim, class_count, rng),
                    Matrix::zeros(1, class_count),
                ]
            }
        };
        Self::from_params(kind, input_dim, hidden_dim, class_count, params)
    }

    /// Assembles a classifier from explicit parameters (momentum zeroed).
    pub fn from_params(
        kind: ClassifierKind,
        input_dim: usize,
        hidden_dim: usize,
        class_count: usize,
        params: Vec<Matrix>,
    ) -> Result<Self> {
        let shapes = Self::shapes(kind, input_dim, hidden_dim, class_count);
        ensure!(
            params.len() == shapes.len()
                && params.iter().zip(&shapes).all(|(p, s)| p.shape() == *s),
            "parameter shapes do not match a {kind:?} classifier {input_dim}/{hidden_dim}/{class_count}"
        );
        let momentum = GradSet::zeros_like(&params).0;
        Ok(Self {
            kind,
            input_dim,
            hidden_dim,
            class_count,
            params,
            momentum,
        })
    }

    pub fn shapes(
        kind: ClassifierKind,
        input_dim: usize,
        hidden_dim: usize,
        class_count: usize,
    ) -> Vec<(usize, usize)> {
        match kind {
            ClassifierKind::Linear => vec![(input_dim, class_count), (1, class_count)],
            ClassifierKind::Mlp => vec![
                (input_dim, hidden_dim),
                (1, hidden_dim),
                (hidden_dim, class_count),
                (1, class_count),
            ],
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn params(&self) -> &[Matrix] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Matrix] {
        &mut self.params
    }

    pub fn momentum(&self) -> &[Matrix] {
        &self.momentum
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|m| m.as_slice().len()).sum()
    }

    fn last_index(&self) -> usize {
        self.params.len() - 2
    }

    /// Input of the last layer for `x`.
    pub fn penultimate(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            ClassifierKind::Linear => x.to_vec(),
            ClassifierKind::Mlp => {
                let mut a = self.params[0].vec_mul(x);
                for (v, b) in a.iter_mut().zip(self.params[1].as_slice()) {
                    *v = (*v + b).max(0.0);
                }
                a
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Forward> {
        ensure!(
            x.len() == self.input_dim,
            "feature length {} does not match input_dim {}",
            x.len(),
            self.input_dim
        );
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Forward {
        let (penultimate, pre_activation) = match self.kind {
            ClassifierKind::Linear => (x.to_vec(), Vec::new()),
            ClassifierKind::Mlp => {
                let mut pre = self.params[0].vec_mul(x);
                for (v, b) in pre.iter_mut().zip(self.params[1].as_slice()) {
                    *v += b;
                }
                let h = pre.iter().map(|v| v.max(0.0)).collect();
                (h, pre)
            }
        };
        let l = self.last_index();
        let mut logits = self.params[l].vec_mul(&penultimate);
        for (z, b) in logits.iter_mut().zip(self.params[l + 1].as_slice()) {
            *z += b;
        }
        let p = softmax(&logits);
        Forward {
            penultimate,
            pre_activation,
            logits,
            p,
        }
    }

    /// Copy of the last-layer weights and bias.
    pub fn last_layer(&self) -> LastLayer {
        let l = self.last_index();
        LastLayer {
            weights: self.params[l].clone(),
            bias: self.params[l + 1].as_slice().to_vec(),
        }
    }

    /// Accumulates `d loss / d params` for one instance given `d loss / d logits`.
    fn backward_into(&self, x: &[f64], fwd: &Forward, dlogits: &[f64], grads: &mut GradSet) {
        let l = self.last_index();
        {
            let gw = &mut grads.0[l];
            for (i, &h) in fwd.penultimate.iter().enumerate() {
                if h == 0.0 {
                    continue;
                }
                for (g, d) in gw.row_mut(i).iter_mut().zip(dlogits) {
                    *g += h * d;
                }
            }
        }
        for (g, d) in grads.0[l + 1].as_mut_slice().iter_mut().zip(dlogits) {
            *g += d;
        }
        if self.kind == ClassifierKind::Mlp {
            let w2 = &self.params[2];
            let dpre: Vec<f64> = (0..self.hidden_dim)
                .map(|j| {
                    if fwd.pre_activation[j] > 0.0 {
                        w2.row(j).iter().zip(dlogits).map(|(w, d)| w * d).sum()
                    } else {
                        0.0
                    }
                })
                .collect();
            let gw1 = &mut grads.0[0];
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                for (g, d) in gw1.row_mut(i).iter_mut().zip(&dpre) {
                    *g += xi * d;
                }
            }
            for (g, d) in grads.0[1].as_mut_slice().iter_mut().zip(&dpre) {
                *g += d;
            }
        }
    }

    /// Momentum SGD on every parameter:
    /// `buf = momentum * buf + grad + weight_decay * param; param -= lr * buf`.
    pub fn sgd_step(
        &mut self,
        grads: &GradSet,
        lr: f64,
        momentum: f64,
        weight_decay: f64,
    ) -> Result<()> {
        ensure!(
            grads.0.len() == self.params.len()
                && grads
                    .0
                    .iter()
                    .zip(&self.params)
                    .all(|(g, p)| g.shape() == p.shape()),
            "gradient shapes do not match classifier parameters"
        );
        for ((p, buf), g) in self
            .params
            .iter_mut()
            .zip(self.momentum.iter_mut())
            .zip(&grads.0)
        {
            sgd_update(
                p.as_mut_slice(),
                buf.as_mut_slice(),
                g.as_slice(),
                lr,
                momentum,
                weight_decay,
            );
        }
        Ok(())
    }
}

/// The momentum-SGD recurrence shared by classifier and confusion parameters.
pub fn sgd_update(
    param: &mut [f64],
    buf: &mut [f64],
    grad: &[f64],
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) {
    for ((p, b), g) in param.iter_mut().zip(buf.iter_mut()).zip(grad) {
        *b = momentum * *b + g + weight_decay * *p;
        *p -= lr * *b;
    }
}

/// Mean loss and gradient over a batch.
///
/// `instance_loss(j, forward)` returns the loss of the `j`-th batch row and
/// its gradient with respect to the logits.
pub fn loss_and_grads<F>(
    clf: &Classifier,
    batch: &[&[f64]],
    mut instance_loss: F,
) -> Result<(f64, GradSet)>
where
    F: FnMut(usize, &Forward) -> Result<(f64, Vec<f64>)>,
{
    ensure!(!batch.is_empty(), "loss_and_grads needs a nonempty batch");
    let mut grads = GradSet::zeros_like(&clf.params);
    let mut total = 0.0;
    for (j, x) in batch.iter().enumerate() {
        let fwd = clf.forward(x)?;
        let (loss, dlogits) = instance_loss(j, &fwd)?;
        ensure!(
            dlogits.len() == clf.class_count,
            "logit gradient has length {}, expected {}",
            dlogits.len(),
            clf.class_count
        );
        total += loss;
        clf.backward_into(x, &fwd, &dlogits, &mut grads);
    }
    let scale = 1.0 / batch.len() as f64;
    for g in grads.0.iter_mut() {
        g.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
    }
    Ok((total * scale, grads))
}

/// Cross-entropy of a softmax output and its logit gradient `p - onehot(label)`.
pub fn softmax_ce(p: &[f64], label: usize) -> (f64, Vec<f64>) {
    let loss = crate::mathcore::cross_entropy(p, label).expect("label checked by caller");
    let mut d = p.to_vec();
    d[label] -= 1.0;
    (loss, d)
}
