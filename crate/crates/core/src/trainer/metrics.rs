use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// One row of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches, weighted by batch size.
    pub loss: f64,
    /// Accuracies are `None` on epochs without evaluation.
    pub train_acc: Option<f64>,
    pub val_acc: Option<f64>,
    pub seconds: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsLog {
    pub rows: Vec<EpochMetrics>,
}

pub const METRICS_HEADER: &str = "epoch,loss,train_acc,val_acc,seconds";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl MetricsLog {
    pub fn losses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.loss).collect()
    }

    /// Epoch with the highest validation accuracy; earliest wins ties.
    pub fn best_val(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for r in &self.rows {
            if let Some(v) = r.val_acc {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((r.epoch, v));
                }
            }
        }
        best
    }

    pub fn last_train_acc(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.train_acc)
    }

    pub fn last_val_acc(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.val_acc)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(METRICS_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.epoch,
                r.loss,
                opt(r.train_acc),
                opt(r.val_acc),
                opt(r.seconds)
            );
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_leaves_missing_cells_empty() {
        let log = MetricsLog {
            rows: vec![
                EpochMetrics {
                    epoch: 0,
                    loss: 1.5,
                    train_acc: None,
                    val_acc: None,
                    seconds: None,
                },
                EpochMetrics {
                    epoch: 1,
                    loss: 1.25,
                    train_acc: Some(0.5),
                    val_acc: Some(0.25),
                    seconds: None,
                },
            ],
        };
        assert_eq!(
            log.to_csv(),
            "epoch,loss,train_acc,val_acc,seconds\n0,1.5,,,\n1,1.25,0.5,0.25,\n"
        );
        assert_eq!(log.best_val(), Some((1, 0.25)));
    }
}
