use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::PreparedData;
use crate::error::{Error, Result};
use crate::evalinspect::accuracy;
use crate::models::Arch;
use crate::numkernel::derive_seed;
use crate::scalar::Real;
use crate::trainer::{train, TrainConfig};

/// Values tried for each hyperparameter; trials are their Cartesian product.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub lrs: Vec<f64>,
    pub l2s: Vec<f64>,
    pub keep_probs: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            lrs: vec![1e-6, 1e-5, 1e-4, 1e-3],
            l2s: vec![1e-6, 1e-4, 0.009, 0.09],
            keep_probs: vec![0.8, 0.9, 1.0],
        }
    }
}

impl Grid {
    /// Trials in lr-major order.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &lr in &self.lrs {
            for &l2 in &self.l2s {
                for &k in &self.keep_probs {
                    out.push((lr, l2, k));
                }
            }
        }
        out
    }
}

/// Best known settings for an architecture and class count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub arch: Arch,
    pub classes: usize,
    pub lr: f64,
    pub l2: f64,
    pub keep_prob: f64,
}

pub const PRESETS: [Preset; 4] = [
    Preset {
        name: "modified_rnn/4cls",
        arch: Arch::ModifiedRnn,
        classes: 4,
        lr: 1e-6,
        l2: 0.009,
        keep_prob: 1.0,
    },
    Preset {
        name: "modified_rnn/5cls",
        arch: Arch::ModifiedRnn,
        classes: 5,
        lr: 1e-5,
        l2: 0.009,
        keep_prob: 0.9,
    },
    Preset {
        name: "gru/4cls",
        arch: Arch::Gru,
        classes: 4,
        lr: 1e-4,
        l2: 1e-6,
        keep_prob: 1.0,
    },
    Preset {
        name: "gru/5cls",
        arch: Arch::Gru,
        classes: 5,
        lr: 1e-4,
        l2: 0.009,
        keep_prob: 1.0,
    },
];

pub fn preset(name: &str) -> Option<Preset> {
    PRESETS.iter().copied().find(|p| p.name == name)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuningRow {
    pub lr: f64,
    pub l2: f64,
    pub keep_prob: f64,
    pub val_acc: f64,
    /// `None` when the trial ran no epochs.
    pub best_epoch: Option<usize>,
    pub diverged: bool,
}

/// Trials sorted best first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TuningTable {
    pub rows: Vec<TuningRow>,
}

pub const TUNING_HEADER: &str = "lr,l2,keep_prob,val_acc,best_epoch";

impl TuningTable {
    pub fn best(&self) -> Option<&TuningRow> {
        self.rows.first()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(TUNING_HEADER);
        s.push('\n');
        for r in &self.rows {
            let epoch = r.best_epoch.map(|e| e.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.lr, r.l2, r.keep_prob, r.val_acc, epoch
            );
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Higher validation accuracy first; ties go to lower lr, then lower l2,
/// then higher keep probability.
fn rank(a: &TuningRow, b: &TuningRow) -> Ordering {
    b.val_acc
        .total_cmp(&a.val_acc)
        .then(a.lr.total_cmp(&b.lr))
        .then(a.l2.total_cmp(&b.l2))
        .then(b.keep_prob.total_cmp(&a.keep_prob))
}

/// Trains one model per grid point on `jobs` threads.
///
/// Trial `i` uses seed `derive_seed(base.hyper.seed, i)`, so the table does
/// not depend on `jobs`.
pub fn grid_search<S: Real>(
    base: &TrainConfig,
    grid: &Grid,
    data: &PreparedData,
    jobs: usize,
) -> Result<TuningTable> {
    if data.val.reviews.is_empty() {
        return Err(Error::Config(
            "grid search needs a non-empty validation split".into(),
        ));
    }
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::Config("grid has no points".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<TuningRow>> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, &(lr, l2, keep_prob))| {
                let mut config = base.clone();
                config.hyper.lr = lr;
                config.hyper.l2 = l2;
                config.hyper.keep_prob = keep_prob;
                config.hyper.seed = derive_seed(base.hyper.seed, i as u64);
                config.record_time = false;
                let outcome = train::<S>(&config, data)?;
                let (best_epoch, val_acc) = match outcome.metrics.best_val() {
                    Some((e, v)) => (Some(e), v),
                    None => (
                        None,
                        accuracy(&outcome.params, &data.val.reviews, &config.hyper)?,
                    ),
                };
                Ok(TuningRow {
                    lr,
                    l2,
                    keep_prob,
                    val_acc,
                    best_epoch,
                    diverged: outcome.diverged_at.is_some(),
                })
            })
            .collect()
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(rank);
    Ok(TuningTable { rows })
}
