//! Accuracy, confusion matrices and per-class mean hidden states.

use std::fmt;
use std::fmt::Write as _;

use crate::corpus::{sequential_batches, EncodedReview};
use crate::error::{Error, Result};
use crate::models::{eos_outputs, predict_batch, Hyper, Params};
use crate::scalar::Real;

const EVAL_BATCH: usize = 256;

/// Fraction of reviews whose EOS prediction matches the label.
pub fn accuracy<S: Real>(params: &Params<S>, set: &[EncodedReview], hyper: &Hyper) -> Result<f64> {
    Ok(evaluate(params, set, hyper)?.accuracy)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// `None` for classes absent from the set.
    pub per_class: Vec<Option<f64>>,
}

impl EvalReport {
    pub fn classes(&self) -> usize {
        self.confusion.len()
    }

    /// Rows are true scores, columns predicted scores (both 1-based).
    pub fn confusion_csv(&self) -> String {
        let c = self.classes();
        let mut s = String::from("class");
        for j in 1..=c {
            let _ = write!(s, ",pred{j}");
        }
        s.push_str(",support,accuracy\n");
        for (i, row) in self.confusion.iter().enumerate() {
            let _ = write!(s, "{}", i + 1);
            for v in row {
                let _ = write!(s, ",{v}");
            }
            let support: usize = row.iter().sum();
            let acc = self.per_class[i].map(|a| a.to_string()).unwrap_or_default();
            let _ = writeln!(s, ",{support},{acc}");
        }
        s
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "accuracy={:.4} n={}", self.accuracy, self.n)?;
        for (i, a) in self.per_class.iter().enumerate() {
            match a {
                Some(a) => write!(f, " class{}={:.4}", i + 1, a)?,
                None => write!(f, " class{}=-", i + 1)?,
            }
        }
        Ok(())
    }
}

pub fn evaluate<S: Real>(
    params: &Params<S>,
    set: &[EncodedReview],
    hyper: &Hyper,
) -> Result<EvalReport> {
    if set.is_empty() {
        return Err(Error::arg("cannot evaluate an empty set"));
    }
    let c = params.dims.num_classes;
    let mut confusion = vec![vec![0usize; c]; c];
    for batch in sequential_batches(set, EVAL_BATCH)? {
        let preds = predict_batch(params, &batch, hyper)?;
        for (&label, &p) in batch.labels.iter().zip(&preds) {
            if label >= c {
                return Err(Error::arg(format!(
                    "label {label} out of range for {c} classes"
                )));
            }
            confusion[label][p] += 1;
        }
    }
    let correct: usize = (0..c).map(|i| confusion[i][i]).sum();
    let per_class = confusion
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let n: usize = row.iter().sum();
            (n > 0).then(|| row[i] as f64 / n as f64)
        })
        .collect();
    Ok(EvalReport {
        n: set.len(),
        accuracy: correct as f64 / set.len() as f64,
        confusion,
        per_class,
    })
}

/// Per-class mean of the hidden state at EOS.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenDump {
    /// `means[class][unit]`.
    pub means: Vec<Vec<f64>>,
    pub counts: Vec<usize>,
}

impl HiddenDump {
    pub fn hidden_dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// `class,dim0,…,dim{H−1},count` with 1-based class scores.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("class");
        for j in 0..self.hidden_dim() {
            let _ = write!(s, ",dim{j}");
        }
        s.push_str(",count\n");
        for (i, (m, n)) in self.means.iter().zip(&self.counts).enumerate() {
            let _ = write!(s, "{}", i + 1);
            for v in m {
                let _ = write!(s, ",{v}");
            }
            let _ = writeln!(s, ",{n}");
        }
        s
    }
}

/// Mean EOS hidden state of each class. Every class must occur in `set`.
///
/// Sums run over reviews in their order in `set`, so the result does not
/// depend on how reviews were batched.
pub fn hidden_dump<S: Real>(
    params: &Params<S>,
    set: &[EncodedReview],
    hyper: &Hyper,
) -> Result<HiddenDump> {
    let c = params.dims.num_classes;
    let h = params.dims.hidden_dim;
    let mut states: Vec<Option<Vec<f64>>> = vec![None; set.len()];
    for batch in sequential_batches(set, EVAL_BATCH)? {
        let (_, hidden) = eos_outputs(params, &batch, hyper)?;
        for (r, &idx) in batch.review_indices.iter().enumerate() {
            states[idx] = Some(hidden.row(r).iter().map(|v| v.as_f64()).collect());
        }
    }
    let mut sums = vec![vec![0.0; h]; c];
    let mut counts = vec![0usize; c];
    for (review, state) in set.iter().zip(&states) {
        let state = state
            .as_ref()
            .ok_or_else(|| Error::State("review missing from evaluation batches".into()))?;
        if review.label >= c {
            return Err(Error::arg(format!(
                "label {} out of range for {c} classes",
                review.label
            )));
        }
        counts[review.label] += 1;
        for (s, v) in sums[review.label].iter_mut().zip(state) {
            *s += v;
        }
    }
    if let Some(missing) = counts.iter().position(|&n| n == 0) {
        return Err(Error::arg(format!(
            "class {} has no reviews to average",
            missing + 1
        )));
    }
    let means = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
        .collect();
    Ok(HiddenDump { means, counts })
}
