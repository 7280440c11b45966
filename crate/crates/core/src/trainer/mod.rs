//! Deterministic mini-batch SGD over slice batches, metrics, checkpoints and
//! hyperparameter grid search.

mod grid;
mod metrics;

use std::path::Path;
use std::time::Instant;

pub use grid::{grid_search, preset, Grid, Preset, TuningRow, TuningTable, PRESETS};
pub use metrics::{EpochMetrics, MetricsLog};

use crate::corpus::{plan_epoch, PreparedData};
use crate::error::{Error, Result};
use crate::evalinspect::accuracy;
use crate::models::{
    backward, compute_loss, forward_batch, init_params, sgd_step, Arch, Dims, Hyper, Params,
};
use crate::numkernel::Rng;
use crate::scalar::Real;

/// Everything that determines a training run apart from the data.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub arch: Arch,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Tokens per slice.
    pub steps: usize,
    /// 4 after dropping score 5, otherwise 5.
    pub classes: usize,
    pub padded: bool,
    pub max_len: usize,
    pub hyper: Hyper,
    /// Accuracies are measured every `eval_every` epochs and after the last.
    pub eval_every: usize,
    /// Record wall-clock seconds per epoch.
    pub record_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            arch: Arch::ModifiedRnn,
            embed_dim: 50,
            hidden_dim: 50,
            steps: 8,
            classes: 5,
            padded: true,
            max_len: 88,
            hyper: Hyper::default(),
            eval_every: 1,
            record_time: false,
        }
    }
}

impl TrainConfig {
    pub fn dims(&self, vocab_size: usize) -> Dims {
        Dims {
            vocab_size,
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            num_classes: self.classes,
            steps: self.steps,
        }
    }

    /// Checks the configuration against a prepared dataset.
    pub fn check_against(&self, data: &PreparedData) -> Result<()> {
        self.hyper.validate()?;
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        if data.classes() != self.classes {
            return Err(Error::Config(format!(
                "dataset has {} classes but the model is configured for {}",
                data.classes(),
                self.classes
            )));
        }
        if data.padded() != self.padded {
            return Err(Error::Config(format!(
                "dataset padded={} but config padded={}",
                data.padded(),
                self.padded
            )));
        }
        if data.train.reviews.is_empty() {
            return Err(Error::Config("training split is empty".into()));
        }
        if self.padded {
            if self.steps == 0 || !self.max_len.is_multiple_of(self.steps) {
                return Err(Error::Config(format!(
                    "steps {} must divide max_len {}",
                    self.steps, self.max_len
                )));
            }
            for set in [&data.train, &data.val, &data.test] {
                if let Some(r) = set.reviews.iter().find(|r| r.len() != self.max_len) {
                    return Err(Error::Config(format!(
                        "padded review of length {} does not match max_len {}",
                        r.len(),
                        self.max_len
                    )));
                }
            }
        }
        self.dims(data.vocab.len()).validate()
    }
}

/// Result of [`train`].
#[derive(Clone, Debug)]
pub struct TrainOutcome<S> {
    /// Parameters after initialization, before any update.
    pub initial: Params<S>,
    pub params: Params<S>,
    pub metrics: MetricsLog,
    /// Epoch at which the loss or gradients became non-finite.
    pub diverged_at: Option<usize>,
}

/// Trains one model. The run is a pure function of `config` and `data`.
///
/// Each epoch shuffles the training reviews into batches; every batch runs
/// all of its slices forward, backpropagates once and takes one SGD step.
/// A non-finite loss or gradient stops the run without applying that step.
pub fn train<S: Real>(config: &TrainConfig, data: &PreparedData) -> Result<TrainOutcome<S>> {
    config.check_against(data)?;
    let hyper = &config.hyper;
    let dims = config.dims(data.vocab.len());
    let mut root = Rng::new(hyper.seed);
    let mut params: Params<S> = init_params(config.arch, dims, &mut root.fork())?;
    let initial = params.clone();
    let mut shuffle_rng = root.fork();
    let mut dropout_rng = root.fork();
    let lr = S::lit(hyper.lr);
    let train_set = &data.train.reviews;
    let val_set = &data.val.reviews;

    let mut metrics = MetricsLog::default();
    let mut diverged_at = None;
    for epoch in 0..hyper.epochs {
        let start = Instant::now();
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for batch in plan_epoch(train_set, hyper.batch_size, &mut shuffle_rng)? {
            let traces = forward_batch(&params, &batch, hyper, Some(&mut dropout_rng))?;
            let loss = compute_loss(&traces, &batch.labels, &params, hyper)?.as_f64();
            if !loss.is_finite() {
                diverged_at = Some(epoch);
                break;
            }
            let grads = backward(&traces, &batch.labels, &params, hyper)?;
            if !grads.is_finite() {
                diverged_at = Some(epoch);
                break;
            }
            sgd_step(&mut params, &grads, lr)?;
            if !params.is_finite() {
                diverged_at = Some(epoch);
                break;
            }
            loss_sum += loss * batch.rows() as f64;
            seen += batch.rows();
        }
        let last = epoch + 1 == hyper.epochs || diverged_at.is_some();
        let (train_acc, val_acc) = if last || (epoch + 1) % config.eval_every == 0 {
            let v = if val_set.is_empty() {
                None
            } else {
                Some(accuracy(&params, val_set, hyper)?)
            };
            (Some(accuracy(&params, train_set, hyper)?), v)
        } else {
            (None, None)
        };
        metrics.rows.push(EpochMetrics {
            epoch,
            loss: if diverged_at.is_some() {
                f64::NAN
            } else {
                loss_sum / seen.max(1) as f64
            },
            train_acc,
            val_acc,
            seconds: config.record_time.then(|| start.elapsed().as_secs_f64()),
        });
        if diverged_at.is_some() {
            break;
        }
    }
    Ok(TrainOutcome {
        initial,
        params,
        metrics,
        diverged_at,
    })
}

pub use crate::models::{load_checkpoint, save_checkpoint};

/// Checkpoint file names written by [`write_checkpoints`].
pub const EPOCH0_CHECKPOINT: &str = "epoch0.ckpt";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";

/// Writes the post-initialization and final parameters into `dir`.
pub fn write_checkpoints<S: Real>(outcome: &TrainOutcome<S>, dir: &Path) -> Result<()> {
    save_checkpoint(&outcome.initial, &dir.join(EPOCH0_CHECKPOINT))?;
    save_checkpoint(&outcome.params, &dir.join(FINAL_CHECKPOINT))
}
