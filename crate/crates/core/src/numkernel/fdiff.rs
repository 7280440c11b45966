use crate::error::{Error, Result};
use crate::numkernel::Matrix;
use crate::scalar::Real;

/// Central-difference gradient of `f` at `theta`.
///
/// `f` must be pure. Each coordinate is perturbed by `±eps` in turn and
/// restored afterwards, so `theta` is unchanged on return.
pub fn finite_diff_grad<S: Real>(
    mut f: impl FnMut(&Matrix<S>) -> S,
    theta: &Matrix<S>,
    eps: S,
) -> Result<Matrix<S>> {
    if eps.is_nan() || eps <= S::zero() {
        return Err(Error::arg("finite difference step must be positive"));
    }
    let mut probe = theta.clone();
    let mut grad = Matrix::zeros(theta.rows(), theta.cols());
    let two_eps = eps + eps;
    for i in 0..theta.len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + eps;
        let up = f(&probe);
        probe.as_mut_slice()[i] = orig - eps;
        let down = f(&probe);
        probe.as_mut_slice()[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric {
                coordinate: i,
                context: format!("f(theta +/- eps) = {up} / {down}"),
            });
        }
        grad.as_mut_slice()[i] = (up - down) / two_eps;
    }
    Ok(grad)
}
