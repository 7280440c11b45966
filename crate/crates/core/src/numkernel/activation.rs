use crate::error::{Error, Result};
use crate::numkernel::Matrix;
use crate::scalar::Real;

/// Logistic function. Never overflows; rounds to exactly 0 or 1 only once the
/// true value is within half an ulp of it (|x| ≳ 37 for `f64` at the top end).
#[inline]
pub fn sigmoid_scalar<S: Real>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

#[inline]
pub fn tanh_scalar<S: Real>(x: S) -> S {
    x.tanh()
}

pub fn sigmoid<S: Real>(m: &Matrix<S>) -> Matrix<S> {
    m.map(sigmoid_scalar)
}

pub fn tanh_act<S: Real>(m: &Matrix<S>) -> Matrix<S> {
    m.map(tanh_scalar)
}

/// Row-wise `log softmax` with max subtraction.
pub fn log_softmax_rows<S: Real>(m: &Matrix<S>) -> Matrix<S> {
    let mut out = m.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(S::neg_infinity(), S::max);
        let lse = row.iter().map(|&x| (x - max).exp()).sum::<S>().ln() + max;
        for x in row.iter_mut() {
            *x -= lse;
        }
    }
    out
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows<S: Real>(m: &Matrix<S>) -> Matrix<S> {
    let mut out = m.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(S::neg_infinity(), S::max);
        let mut total = S::zero();
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    out
}

/// Mean over rows of `-log p[true class]` for one-hot `labels`.
///
/// Probabilities are floored at the smallest positive value so an exact zero
/// yields a large finite loss instead of infinity. Training code uses
/// [`cross_entropy_logits`] which never forms probabilities at all.
pub fn cross_entropy<S: Real>(probs: &Matrix<S>, labels: &Matrix<S>) -> Result<S> {
    if probs.shape() != labels.shape() {
        return Err(Error::Shape {
            op: "cross_entropy",
            left: probs.shape(),
            right: labels.shape(),
        });
    }
    if probs.rows() == 0 {
        return Ok(S::zero());
    }
    let mut total = S::zero();
    for r in 0..probs.rows() {
        for (&p, &y) in probs.row(r).iter().zip(labels.row(r)) {
            if y != S::zero() {
                total -= y * p.max(S::min_positive_value()).ln();
            }
        }
    }
    Ok(total / S::lit(probs.rows() as f64))
}

/// Fused log-softmax cross entropy from raw logits and class indices.
pub fn cross_entropy_logits<S: Real>(logits: &Matrix<S>, labels: &[usize]) -> Result<S> {
    if logits.rows() != labels.len() {
        return Err(Error::Shape {
            op: "cross_entropy_logits",
            left: logits.shape(),
            right: (labels.len(), 1),
        });
    }
    if labels.is_empty() {
        return Ok(S::zero());
    }
    let logp = log_softmax_rows(logits);
    let mut total = S::zero();
    for (r, &c) in labels.iter().enumerate() {
        if c >= logits.cols() {
            return Err(Error::arg(format!(
                "label {c} out of range for {} classes",
                logits.cols()
            )));
        }
        total -= logp[(r, c)];
    }
    Ok(total / S::lit(labels.len() as f64))
}
