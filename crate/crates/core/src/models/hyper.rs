use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How far gradients flow back in time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Truncation {
    /// Backpropagate within each slice; the incoming hidden state is a constant.
    PerSlice,
    /// Backpropagate through every slice of the review.
    FullSequence,
}

impl Truncation {
    pub const ALL: [Truncation; 2] = [Truncation::PerSlice, Truncation::FullSequence];

    pub fn name(self) -> &'static str {
        match self {
            Truncation::PerSlice => "per_slice",
            Truncation::FullSequence => "full_sequence",
        }
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Truncation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Truncation::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown truncation {s:?}")))
    }
}

/// Optimization and regularization settings for one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyper {
    pub lr: f64,
    /// L2 weight λ; the penalty is (λ/2)·Σ‖W‖².
    pub l2: f64,
    /// Dropout keep probability; 1.0 disables dropout.
    pub keep_prob: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Skip prediction points whose inputs are entirely PAD.
    pub mask_pad_slices: bool,
    pub truncation: Truncation,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            lr: 0.05,
            l2: 0.0,
            keep_prob: 1.0,
            epochs: 7,
            batch_size: 50,
            seed: 0,
            mask_pad_slices: false,
            truncation: Truncation::PerSlice,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!(
                "l2 must be non-negative, got {}",
                self.l2
            )));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(Error::Config(format!(
                "keep_prob must lie in (0, 1], got {}",
                self.keep_prob
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        Ok(())
    }
}
