use crate::corpus::{EncodedReview, ReviewBatch};
use crate::error::{Error, Result};
use crate::models::{forward_batch, Hyper, Params};
use crate::numkernel::Matrix;
use crate::scalar::Real;

/// Index of the largest entry; ties and NaNs resolve toward the lowest index.
pub fn argmax<S: Real>(row: &[S]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] || (row[best].is_nan() && !v.is_nan()) {
            best = i;
        }
    }
    best
}

/// Eval-mode pass over a batch: the prediction emitted at the EOS position
/// and the hidden state there.
pub fn eos_outputs<S: Real>(
    params: &Params<S>,
    batch: &ReviewBatch,
    hyper: &Hyper,
) -> Result<(Vec<usize>, Matrix<S>)> {
    let traces = forward_batch(params, batch, hyper, None)?;
    let last = traces
        .last()
        .ok_or_else(|| Error::arg("cannot predict an empty review"))?;
    let point = last
        .points
        .last()
        .ok_or_else(|| Error::State("final slice emitted no prediction".into()))?;
    let classes = (0..batch.rows())
        .map(|r| argmax(point.logp.row(r)))
        .collect();
    Ok((classes, last.h_out().clone()))
}

pub fn predict_batch<S: Real>(
    params: &Params<S>,
    batch: &ReviewBatch,
    hyper: &Hyper,
) -> Result<Vec<usize>> {
    Ok(eos_outputs(params, batch, hyper)?.0)
}

/// Class with the highest probability at the review's EOS.
pub fn predict<S: Real>(
    params: &Params<S>,
    encoded: &EncodedReview,
    hyper: &Hyper,
) -> Result<usize> {
    let batch = ReviewBatch::from_reviews(std::slice::from_ref(encoded), vec![0])?;
    Ok(predict_batch(params, &batch, hyper)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_cases() {
        assert_eq!(argmax(&[0.1, 0.2, 0.3, 0.4]), 3);
        assert_eq!(argmax(&[0.25f64; 4]), 0);
        assert_eq!(argmax(&[f64::NAN, 0.1, 0.3]), 2);
        let logits = [0.3, -1.2, 2.5, 2.4];
        let shifted: Vec<f64> = logits.iter().map(|x| x + 17.0).collect();
        assert_eq!(argmax(&logits), argmax(&shifted));
    }
}
