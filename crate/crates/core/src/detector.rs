//! Graph-level anomaly classifier: the discriminator architecture trained
//! with binary cross-entropy on normal (1) versus anomalous (0) graphs.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::{Graph, DEFAULT_DEGREE_BUCKETS};
use crate::mat::Mat;
use crate::metrics::detection_metrics;
use crate::optimizer::adam::Adam;
use crate::optimizer::gnn::{self, Architecture, DiscriminatorParams};
use crate::optimizer::losses::{discriminator_loss, discriminator_loss_grad_logit};
use crate::rng;

/// Label of normal graphs; anomalies are 0.
pub const NORMAL: usize = 1;
pub const ANOMALY: usize = 0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct ClassifierConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden_dim: usize,
    pub gnn_layers: usize,
    pub mlp_layers: usize,
    pub degree_buckets: usize,
    /// Epochs without a validation F1 improvement before stopping.
    pub patience: usize,
    /// Weight each class by the inverse of its training frequency.
    pub balance_classes: bool,
    /// Class whose F1 drives model selection.
    pub positive_class: usize,
    /// Set from the run seed; not part of config files.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            epochs: 200,
            learning_rate: 0.001,
            batch_size: 32,
            hidden_dim: 32,
            gnn_layers: 2,
            mlp_layers: 2,
            degree_buckets: DEFAULT_DEGREE_BUCKETS,
            patience: 50,
            balance_classes: false,
            positive_class: ANOMALY,
            seed: 0,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::config(
                "classifier epochs, batch_size and patience must be positive",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("classifier learning_rate must be positive"));
        }
        if self.positive_class > 1 {
            return Err(Error::config("classifier positive_class must be 0 or 1"));
        }
        Ok(())
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            in_dim: self.degree_buckets,
            hidden_dim: self.hidden_dim,
            gnn_layers: self.gnn_layers,
            mlp_layers: self.mlp_layers,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    /// `None` without a validation set.
    pub val_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassifierModel {
    pub params: DiscriminatorParams,
    pub degree_buckets: usize,
    /// Epochs actually run; 0 for an untrained model.
    pub epochs_trained: usize,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub history: Vec<EpochRow>,
}

impl ClassifierModel {
    /// Fresh model answering 0.5 everywhere.
    pub fn untrained(cfg: &ClassifierConfig) -> Result<Self> {
        Ok(ClassifierModel {
            params: DiscriminatorParams::init(
                cfg.architecture(),
                rng::derive_seed(cfg.seed, "classifier-init", 0),
            )?,
            degree_buckets: cfg.degree_buckets,
            epochs_trained: 0,
            best_epoch: 0,
            history: Vec::new(),
        })
    }

    pub fn is_trained(&self) -> bool {
        self.epochs_trained > 0
    }
}

/// `(p, label)` with label 1 iff `p ≥ 0.5`.
pub fn predict(model: &ClassifierModel, g: &Graph) -> (f64, usize) {
    let p = gnn::predict_prob(
        &g.to_mat(),
        &g.degree_features(model.degree_buckets),
        &model.params,
    );
    (p, if p >= 0.5 { NORMAL } else { ANOMALY })
}

fn check_labels(data: &[(Graph, usize)], what: &str) -> Result<()> {
    if let Some((_, l)) = data.iter().find(|(_, l)| *l > 1) {
        return Err(Error::Classifier(format!("{what} label {l} is not 0 or 1")));
    }
    if data.iter().any(|(g, _)| g.is_empty()) {
        return Err(Error::Classifier(format!("{what} contains an empty graph")));
    }
    Ok(())
}

/// Minibatch Adam on the BCE; keeps the parameters of the epoch with the best
/// validation F1 (first one on ties) and stops after `patience` epochs
/// without improvement. Without validation data the last epoch is kept.
pub fn train_classifier(
    train: &[(Graph, usize)],
    validation: &[(Graph, usize)],
    cfg: &ClassifierConfig,
) -> Result<ClassifierModel> {
    cfg.validate()?;
    check_labels(train, "training")?;
    check_labels(validation, "validation")?;
    let n_pos = train.iter().filter(|(_, l)| *l == NORMAL).count();
    if n_pos == 0 || n_pos == train.len() {
        return Err(Error::Classifier(
            "training set must contain both normal and anomalous graphs".into(),
        ));
    }
    let weight = |label: usize| -> f64 {
        if !cfg.balance_classes {
            return 1.0;
        }
        let count = if label == NORMAL {
            n_pos
        } else {
            train.len() - n_pos
        };
        train.len() as f64 / (2.0 * count as f64)
    };
    let inputs: Vec<(Mat, Mat)> = train
        .iter()
        .map(|(g, _)| (g.to_mat(), g.degree_features(cfg.degree_buckets)))
        .collect();

    let mut model = ClassifierModel::untrained(cfg)?;
    let mut opt = Adam::new(model.params.num_params(), cfg.learning_rate);
    let mut best: Option<(f64, DiscriminatorParams, usize)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng::stream(cfg.seed, "classifier-epoch", epoch as u64));
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let mut grad = model.params.zeros_like();
            for &i in chunk {
                let (a, x) = &inputs[i];
                let y = train[i].1 as f64;
                let w = weight(train[i].1) / chunk.len() as f64;
                let tape = gnn::forward(a, x, &model.params);
                epoch_loss +=
                    weight(train[i].1) * discriminator_loss(tape.prob, y) / train.len() as f64;
                let g = gnn::backward(
                    &tape,
                    &model.params,
                    w * discriminator_loss_grad_logit(tape.prob, y),
                );
                grad.add_scaled(&g.params, 1.0);
            }
            let g = grad.to_flat();
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    step: epoch,
                    component: "classifier gradient",
                });
            }
            let mut flat = model.params.to_flat();
            opt.step(&mut flat, &g);
            model.params.assign_flat(&flat);
        }
        if !epoch_loss.is_finite() {
            return Err(Error::NonFinite {
                step: epoch,
                component: "classifier loss",
            });
        }
        model.epochs_trained = epoch + 1;
        let val_f1 = if validation.is_empty() {
            None
        } else {
            let pred: Vec<usize> = validation
                .iter()
                .map(|(g, _)| predict(&model, g).1)
                .collect();
            let actual: Vec<usize> = validation.iter().map(|(_, l)| *l).collect();
            Some(detection_metrics(&pred, &actual, cfg.positive_class)?.f1)
        };
        model.history.push(EpochRow {
            epoch,
            train_loss: epoch_loss,
            val_f1,
        });
        if let Some(f1) = val_f1 {
            if best.as_ref().is_none_or(|(b, _, _)| f1 > *b) {
                best = Some((f1, model.params.clone(), epoch));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.patience {
                    break;
                }
            }
        }
    }
    match best {
        Some((_, params, epoch)) => {
            model.params = params;
            model.best_epoch = epoch;
        }
        None => model.best_epoch = model.epochs_trained - 1,
    }
    Ok(model)
}
