use std::fmt;

use crate::corpus::{ReviewBatch, PAD_ID};
use crate::error::{Error, Result};
use crate::models::{
    backward, compute_loss, forward, init_params, Arch, Dims, ForwardTrace, Gradients, Hyper, Mode,
    Params, Truncation,
};
use crate::numkernel::{finite_diff_grad, seeded_uniform, Matrix, Rng};

/// Worst relative error for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorCheck {
    pub name: &'static str,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub max_abs_error: f64,
    /// Largest relative error among coordinates whose absolute discrepancy
    /// exceeds [`ROUNDOFF_FLOOR`].
    pub resolved_rel_error: f64,
}

/// Absolute discrepancy attributable to f64 round-off in a central
/// difference of an O(1) loss at ε = 1e−5 (≈ ulp(1)/2ε, with headroom).
pub const ROUNDOFF_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub arch: Arch,
    pub truncation: Truncation,
    pub l2: f64,
    pub tol: f64,
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn worst(&self) -> &TensorCheck {
        self.tensors
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
            .expect("at least one tensor")
    }

    pub fn max_rel_error(&self) -> f64 {
        self.worst().max_rel_error
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tol
    }

    /// `Err` naming the worst coordinate when the check failed.
    pub fn check(&self) -> Result<()> {
        if self.passed() {
            return Ok(());
        }
        let w = self.worst();
        Err(Error::GradCheck {
            matrix: w.name.to_string(),
            index: w.worst_index,
            error: w.max_rel_error,
            tol: self.tol,
        })
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} truncation={} l2={} -> {} (max rel err {:.3e}, tol {:.0e})",
            self.arch,
            self.truncation,
            self.l2,
            if self.passed() { "PASS" } else { "FAIL" },
            self.max_rel_error(),
            self.tol
        )?;
        for t in &self.tensors {
            writeln!(
                f,
                "  {:<5} {:.3e} at {}",
                t.name, t.max_rel_error, t.worst_index
            )?;
        }
        Ok(())
    }
}

/// `|a − n| / max(1e−8, |a| + |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Random batch of `rows` reviews spanning two slices, with a few leading
/// PADs in the first row so the PAD path is exercised.
fn random_batch(dims: &Dims, rows: usize, rng: &mut Rng) -> Result<ReviewBatch> {
    let len = 2 * dims.steps;
    let mut ids = Vec::with_capacity(rows * len);
    let mut labels = Vec::with_capacity(rows);
    for r in 0..rows {
        let pads = if r == 0 { (dims.steps / 2).max(1) } else { 0 };
        for k in 0..len {
            ids.push(if k < pads {
                PAD_ID
            } else {
                1 + rng.below(dims.vocab_size - 1) as u32
            });
        }
        labels.push(rng.below(dims.num_classes));
    }
    Ok(ReviewBatch {
        review_indices: (0..rows).collect(),
        labels,
        ids,
        len,
    })
}

/// Loss of the batch with every slice started from the given hidden states
/// (per-slice truncation) or chained (full sequence).
fn batch_loss(
    params: &Params<f64>,
    batch: &ReviewBatch,
    hyper: &Hyper,
    frozen_h_in: Option<&[Matrix<f64>]>,
) -> Result<f64> {
    let mut traces: Vec<ForwardTrace<f64>> = Vec::new();
    let mut h = Matrix::zeros(batch.rows(), params.dims.hidden_dim);
    for (s, slice) in batch.slices(params.dims.steps).iter().enumerate() {
        let h_in = match frozen_h_in {
            Some(hs) => hs[s].clone(),
            None => h,
        };
        let t = forward(params, slice, &h_in, hyper, Mode::Eval)?;
        h = t.h_out().clone();
        traces.push(t);
    }
    compute_loss(&traces, &batch.labels, params, hyper)
}

/// Compares [`backward`] with central finite differences on a small random
/// instance of `rows` reviews and two slices. Dropout is forced off.
pub fn gradient_check(
    arch: Arch,
    dims: Dims,
    rows: usize,
    hyper: &Hyper,
    rng: &mut Rng,
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    gradient_check_with(arch, dims, rows, hyper, rng, eps, tol, |_| {})
}

/// [`gradient_check`] with a hook that may alter the analytic gradients
/// before comparison.
#[allow(clippy::too_many_arguments)]
pub fn gradient_check_with(
    arch: Arch,
    dims: Dims,
    rows: usize,
    hyper: &Hyper,
    rng: &mut Rng,
    eps: f64,
    tol: f64,
    tamper: impl FnOnce(&mut Gradients<f64>),
) -> Result<GradCheckReport> {
    let hyper = Hyper {
        keep_prob: 1.0,
        ..hyper.clone()
    };
    let mut params: Params<f64> = init_params(arch, dims, rng)?;
    // Non-zero biases so their paths are not trivially symmetric.
    for t in params.weights.tensors_mut() {
        if !t.regularized {
            *t.value = seeded_uniform(t.value.rows(), t.value.cols(), -0.5, 0.5, rng)?;
        }
    }
    let batch = random_batch(&dims, rows, rng)?;

    let mut traces = Vec::new();
    let mut h = Matrix::zeros(rows, dims.hidden_dim);
    for slice in batch.slices(dims.steps) {
        let t = forward(&params, &slice, &h, &hyper, Mode::Eval)?;
        h = t.h_out().clone();
        traces.push(t);
    }
    let mut grads = backward(&traces, &batch.labels, &params, &hyper)?;
    tamper(&mut grads);
    let frozen: Vec<Matrix<f64>> = traces.iter().map(|t| t.h_in.clone()).collect();
    let frozen = match hyper.truncation {
        Truncation::PerSlice => Some(frozen.as_slice()),
        Truncation::FullSequence => None,
    };

    let analytic = grads.dense(&dims);
    let mut tensors = Vec::new();
    for (ti, (name, g)) in analytic.iter().enumerate() {
        let base = params.tensors()[ti].value.clone();
        let numeric = finite_diff_grad(
            |theta: &Matrix<f64>| {
                let mut probe = params.clone();
                *probe.tensors_mut().swap_remove(ti).value = theta.clone();
                batch_loss(&probe, &batch, &hyper, frozen).unwrap_or(f64::NAN)
            },
            &base,
            eps,
        )?;
        let mut worst = (0.0f64, 0usize);
        let (mut max_abs, mut resolved) = (0.0f64, 0.0f64);
        for (i, (&a, &n)) in g.as_slice().iter().zip(numeric.as_slice()).enumerate() {
            let e = relative_error(a, n);
            if e > worst.0 || e.is_nan() {
                worst = (e, i);
            }
            let abs = (a - n).abs();
            max_abs = max_abs.max(abs);
            if abs > ROUNDOFF_FLOOR {
                resolved = resolved.max(e);
            }
        }
        tensors.push(TensorCheck {
            name,
            max_rel_error: worst.0,
            worst_index: worst.1,
            max_abs_error: max_abs,
            resolved_rel_error: resolved,
        });
    }
    Ok(GradCheckReport {
        arch,
        truncation: hyper.truncation,
        l2: hyper.l2,
        tol,
        tensors,
    })
}
