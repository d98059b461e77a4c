//! Mini-batch training with seeded shuffling, a one-step learning-rate
//! decay and best-on-validation model selection.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checkpoint::{Checkpoint, TrainerTrailer};
use super::loss::{argmax, LossKind, SequenceTarget};
use super::model::{Model, ModelGrads, ModelKind};
use super::optimizer::{clip_global_norm, Optimizer, OptimizerKind};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, rng_from_seed};
use crate::tasks::{SequenceBatch, Targets};

const SHUFFLE_STREAM: u64 = 0x5eed_0001;
const INIT_STREAM: u64 = 0x5eed_0002;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    Last,
    PerStep,
}

/// Multiply the learning rate by `factor` from epoch `epoch` (0-based) on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrDecay {
    pub factor: f64,
    pub epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default)]
    pub model: ModelKind,
    pub hidden: usize,
    /// Ignored by the LSTM.
    #[serde(default = "default_delta_t")]
    pub delta_t: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    #[serde(default)]
    pub lr_decay: Option<LrDecay>,
    #[serde(default)]
    pub grad_clip: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub loss: LossKind,
    pub readout: Readout,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    /// Readout width for classification; regression takes it from the data.
    #[serde(default)]
    pub n_classes: Option<usize>,
    /// Record wall time as zero so metric files are byte-reproducible.
    #[serde(default)]
    pub deterministic: bool,
}

fn default_delta_t() -> f64 {
    1.0
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.hidden == 0 {
            return bad("hidden must be positive");
        }
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return bad("delta_t must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if let Some(d) = self.lr_decay {
            if !(d.factor > 0.0 && d.factor.is_finite()) {
                return bad("lr_decay.factor must be positive");
            }
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return bad("grad_clip must be positive");
            }
        }
        if self.loss == LossKind::CrossEntropy && self.readout == Readout::PerStep {
            return bad("cross_entropy scores the last step only");
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.lr_decay {
            Some(d) if epoch >= d.epoch => self.learning_rate * d.factor,
            _ => self.learning_rate,
        }
    }

    /// Readout width implied by the data and the loss.
    pub fn output_dim(&self, batch: &SequenceBatch) -> Result<usize> {
        match (&batch.targets, self.loss, self.readout) {
            (Targets::Classes(c), LossKind::CrossEntropy, Readout::Last) => {
                let seen = c.iter().max().map_or(0, |m| m + 1);
                let n = self.n_classes.unwrap_or(seen);
                if n < seen || n < 2 {
                    return Err(Error::Config(format!("n_classes {n} does not cover class ids up to {}", seen - 1)));
                }
                Ok(n)
            }
            (Targets::Values(_), LossKind::Mse, Readout::Last) | (Targets::PerStep(_), LossKind::Mse, Readout::PerStep) => {
                Ok(batch.targets.width())
            }
            _ => Err(Error::Config(format!(
                "loss {:?} with readout {:?} does not fit the dataset targets",
                self.loss, self.readout
            ))),
        }
    }
}

/// Loss and task metric of a model on one split. The metric is accuracy for
/// classification and the plain mean squared error for regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub metric: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_metric: f64,
    pub test_loss: f64,
    pub test_metric: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub config: TrainConfig,
    pub param_count: usize,
    pub best_epoch: usize,
    pub best_val: Evaluation,
    /// Test split scored with the selected model.
    pub test: Evaluation,
    pub epochs: Vec<EpochMetrics>,
}

/// Per-sequence squared error, mean over every scored component.
fn squared_error(outputs: &[Vec<f64>], target: SequenceTarget<'_>) -> f64 {
    let pairs: Vec<(&[f64], &[f64])> = match target {
        SequenceTarget::PerStep(t) => outputs.iter().map(Vec::as_slice).zip(t.iter().map(Vec::as_slice)).collect(),
        SequenceTarget::Last(t) => vec![(outputs.last().map_or(&[][..], Vec::as_slice), t)],
        SequenceTarget::Class(_) => return f64::NAN,
    };
    let count: usize = pairs.iter().map(|(a, _)| a.len()).sum();
    let sum: f64 = pairs
        .iter()
        .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)))
        .sum();
    sum / count.max(1) as f64
}

pub fn evaluate(model: &Model, batch: &SequenceBatch, loss: LossKind) -> Result<Evaluation> {
    if batch.is_empty() {
        return Err(Error::Shape("cannot evaluate an empty split".into()));
    }
    let per: Vec<(f64, f64)> = (0..batch.len())
        .into_par_iter()
        .map(|i| {
            let outputs = model.forward(&batch.inputs[i])?;
            let target = batch.target(i);
            let (l, _) = super::loss::sequence_loss(loss, &outputs, target)?;
            let metric = match target {
                SequenceTarget::Class(c) => {
                    let last = outputs.last().expect("non-empty sequence");
                    f64::from(u8::from(argmax(last) == c))
                }
                _ => squared_error(&outputs, target),
            };
            Ok((l, metric))
        })
        .collect::<Result<_>>()?;
    let n = per.len() as f64;
    Ok(Evaluation {
        loss: per.iter().map(|p| p.0).sum::<f64>() / n,
        metric: per.iter().map(|p| p.1).sum::<f64>() / n,
    })
}

/// Training state that can be checkpointed and resumed between epochs.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub model: Model,
    pub optimizer: Optimizer,
    pub best: Model,
    pub history: Vec<EpochMetrics>,
    classification: bool,
}

impl Trainer {
    pub fn new(config: TrainConfig, train: &SequenceBatch) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::Shape("training split is empty".into()));
        }
        let o = config.output_dim(train)?;
        let model = Model::init(
            config.model,
            config.hidden,
            train.feature_dim(),
            o,
            config.delta_t,
            derive_seed(config.seed, INIT_STREAM),
        )?;
        let optimizer = Optimizer::for_params(config.optimizer, &model);
        Ok(Self {
            classification: config.loss == LossKind::CrossEntropy,
            best: model.clone(),
            config,
            model,
            optimizer,
            history: Vec::new(),
        })
    }

    /// Rebuilds a trainer from the current-state checkpoint (with optimizer
    /// trailer), the best model so far and the metric history.
    pub fn resume(config: TrainConfig, current: Checkpoint, best: Model, history: Vec<EpochMetrics>) -> Result<Self> {
        config.validate()?;
        let trailer = current
            .trailer
            .ok_or_else(|| Error::Format("resume checkpoint carries no optimizer state".into()))?;
        if trailer.epoch as usize != history.len() {
            return Err(Error::Format(format!(
                "checkpoint is at epoch {} but the history has {} rows",
                trailer.epoch,
                history.len()
            )));
        }
        if current.model.kind() != config.model || best.dims() != current.model.dims() {
            return Err(Error::Config("checkpoint does not match the configured model".into()));
        }
        Ok(Self {
            classification: config.loss == LossKind::CrossEntropy,
            config,
            model: current.model,
            optimizer: trailer.optimizer,
            best,
            history,
        })
    }

    pub fn epochs_done(&self) -> usize {
        self.history.len()
    }

    pub fn is_finished(&self) -> bool {
        self.epochs_done() >= self.config.epochs
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model: self.model.clone(),
            trailer: Some(TrainerTrailer {
                epoch: self.epochs_done() as u64,
                optimizer: self.optimizer.clone(),
            }),
        }
    }

    fn better(&self, candidate: &EpochMetrics, incumbent: &EpochMetrics) -> bool {
        if self.classification {
            candidate.val_metric > incumbent.val_metric
                || (candidate.val_metric == incumbent.val_metric && candidate.val_loss < incumbent.val_loss)
        } else {
            candidate.val_metric < incumbent.val_metric
        }
    }

    pub fn best_epoch(&self) -> Option<&EpochMetrics> {
        self.history
            .iter()
            .fold(None, |acc: Option<&EpochMetrics>, e| match acc {
                Some(b) if !self.better(e, b) => Some(b),
                _ => Some(e),
            })
    }

    /// Mean gradient over one mini-batch, reduced in index order.
    fn batch_gradient(&self, train: &SequenceBatch, idx: &[usize]) -> Result<(f64, ModelGrads)> {
        let per: Vec<(f64, ModelGrads)> = idx
            .par_iter()
            .map(|&i| {
                let (l, _, g) = self.model.loss_and_grads(&train.inputs[i], train.target(i), self.config.loss)?;
                Ok((l, g))
            })
            .collect::<Result<_>>()?;
        let scale = 1.0 / idx.len() as f64;
        let mut total = self.model.zero_grads();
        let mut loss = 0.0;
        for (l, g) in &per {
            loss += l;
            total.add_scaled(g, scale);
        }
        Ok((loss * scale, total))
    }

    /// Runs one epoch and records its metrics.
    pub fn run_epoch(&mut self, train: &SequenceBatch, val: &SequenceBatch, test: &SequenceBatch) -> Result<&EpochMetrics> {
        let start = Instant::now();
        let epoch = self.epochs_done();
        let lr = self.config.learning_rate_at(epoch);
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng_from_seed(derive_seed(
            derive_seed(self.config.seed, SHUFFLE_STREAM),
            epoch as u64,
        )));
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for (b, idx) in order.chunks(self.config.batch_size).enumerate() {
            let (loss, mut grads) = self.batch_gradient(train, idx)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::TrainingDiverged { epoch, batch: b, loss });
            }
            if let Some(c) = self.config.grad_clip {
                clip_global_norm(&mut grads, c);
            }
            self.optimizer.apply(&mut self.model, &grads, lr)?;
            loss_sum += loss * idx.len() as f64;
            seen += idx.len();
        }
        let v = evaluate(&self.model, val, self.config.loss)?;
        let t = evaluate(&self.model, test, self.config.loss)?;
        if !v.loss.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                batch: order.len().div_ceil(self.config.batch_size),
                loss: v.loss,
            });
        }
        let row = EpochMetrics {
            epoch,
            learning_rate: lr,
            train_loss: loss_sum / seen as f64,
            val_loss: v.loss,
            val_metric: v.metric,
            test_loss: t.loss,
            test_metric: t.metric,
            seconds: if self.config.deterministic {
                0.0
            } else {
                start.elapsed().as_secs_f64()
            },
        };
        let improved = self.best_epoch().is_none_or(|b| self.better(&row, b));
        if improved {
            self.best = self.model.clone();
        }
        self.history.push(row);
        Ok(self.history.last().expect("just pushed"))
    }

    /// Trains the remaining epochs and scores the selected model on `test`.
    pub fn run(&mut self, train: &SequenceBatch, val: &SequenceBatch, test: &SequenceBatch) -> Result<TrainSummary> {
        while !self.is_finished() {
            self.run_epoch(train, val, test)?;
        }
        self.summary(test)
    }

    pub fn summary(&self, test: &SequenceBatch) -> Result<TrainSummary> {
        let best = *self
            .best_epoch()
            .ok_or_else(|| Error::Config("no epoch has been run".into()))?;
        Ok(TrainSummary {
            config: self.config.clone(),
            param_count: self.model.param_count(),
            best_epoch: best.epoch,
            best_val: Evaluation {
                loss: best.val_loss,
                metric: best.val_metric,
            },
            test: evaluate(&self.best, test, self.config.loss)?,
            epochs: self.history.clone(),
        })
    }
}

/// Trains from scratch; returns the best-on-validation model and the summary.
pub fn train(
    config: &TrainConfig,
    train: &SequenceBatch,
    val: &SequenceBatch,
    test: &SequenceBatch,
) -> Result<(Model, TrainSummary)> {
    if val.is_empty() || test.is_empty() {
        return Err(Error::Shape("validation and test splits must be non-empty".into()));
    }
    let mut trainer = Trainer::new(config.clone(), train)?;
    let summary = trainer.run(train, val, test)?;
    Ok((trainer.best, summary))
}

pub fn write_metrics_csv(path: &Path, rows: &[EpochMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "train_loss", "val_metric", "test_metric", "seconds"])?;
    for r in rows {
        w.write_record([
            r.epoch.to_string(),
            format!("{:e}", r.train_loss),
            format!("{:e}", r.val_metric),
            format!("{:e}", r.test_metric),
            format!("{:.3}", r.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json(path: &Path, summary: &TrainSummary) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, summary)?;
    f.write_all(b"\n")?;
    Ok(())
}
