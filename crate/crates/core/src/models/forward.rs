use crate::corpus::{ReviewBatch, SliceBatch, PAD_ID};
use crate::error::{Error, Result};
use crate::models::{Cell, Hyper, Params};
use crate::numkernel::{log_softmax_rows, sigmoid_scalar, tanh_scalar, Matrix, Rng};
use crate::scalar::Real;

/// Train mode draws dropout masks from the generator; eval mode applies none.
pub enum Mode<'a> {
    Train(&'a mut Rng),
    Eval,
}

/// Per-step GRU activations kept for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct GruCache<S> {
    pub z: Matrix<S>,
    pub r: Matrix<S>,
    /// `h_{t−1} · Uᵀ`, before the reset gate is applied.
    pub uh: Matrix<S>,
    /// Candidate memory h̃.
    pub cand: Matrix<S>,
}

/// One softmax output over the batch.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputPoint<S> {
    /// Step within the slice whose hidden state feeds this output.
    pub step: usize,
    /// Inverted-dropout mask (entries 0 or 1/keep) when dropout was applied.
    pub mask: Option<Matrix<S>>,
    /// `rows × C` log-probabilities.
    pub logp: Matrix<S>,
    /// Rows that contribute to the loss.
    pub active: Vec<bool>,
}

impl<S: Real> OutputPoint<S> {
    pub fn probs(&self) -> Matrix<S> {
        self.logp.map(S::exp)
    }
}

/// Cached activations of one slice.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace<S> {
    pub tokens: Vec<u32>,
    pub rows: usize,
    pub width: usize,
    pub h_in: Matrix<S>,
    /// Hidden state after each step.
    pub hidden: Vec<Matrix<S>>,
    /// GRU gate caches, one per step; empty for the RNNs.
    pub gru: Vec<GruCache<S>>,
    pub points: Vec<OutputPoint<S>>,
}

impl<S: Real> ForwardTrace<S> {
    pub fn h_out(&self) -> &Matrix<S> {
        self.hidden.last().unwrap_or(&self.h_in)
    }

    /// Hidden state entering step `k`.
    pub fn h_before(&self, k: usize) -> &Matrix<S> {
        if k == 0 {
            &self.h_in
        } else {
            &self.hidden[k - 1]
        }
    }

    #[inline]
    pub fn token(&self, row: usize, step: usize) -> u32 {
        self.tokens[row * self.width + step]
    }

    pub fn predictions(&self) -> Vec<Matrix<S>> {
        self.points.iter().map(OutputPoint::probs).collect()
    }
}

/// Word vectors for column `step`; PAD maps to the zero vector.
pub(crate) fn gather<S: Real>(
    embed: &Matrix<S>,
    tokens: &[u32],
    rows: usize,
    width: usize,
    step: usize,
) -> Matrix<S> {
    let mut x = Matrix::zeros(rows, embed.cols());
    for r in 0..rows {
        let id = tokens[r * width + step];
        if id != PAD_ID {
            x.row_mut(r).copy_from_slice(embed.row(id as usize));
        }
    }
    x
}

fn check_slice<S: Real>(params: &Params<S>, slice: &SliceBatch, h_in: &Matrix<S>) -> Result<()> {
    let h = params.dims.hidden_dim;
    if h_in.shape() != (slice.rows, h) {
        return Err(Error::Shape {
            op: "forward h_in",
            left: h_in.shape(),
            right: (slice.rows, h),
        });
    }
    if slice.token_ids.len() != slice.rows * slice.width || slice.labels.len() != slice.rows {
        return Err(Error::Shape {
            op: "forward tokens",
            left: (slice.token_ids.len(), slice.labels.len()),
            right: (slice.rows, slice.width),
        });
    }
    if let Some(&bad) = slice
        .token_ids
        .iter()
        .find(|&&id| id as usize >= params.dims.vocab_size)
    {
        return Err(Error::arg(format!(
            "token id {bad} outside vocabulary of {}",
            params.dims.vocab_size
        )));
    }
    Ok(())
}

/// Runs one slice forward from `h_in`.
///
/// The RNNs apply `h = σ(h·W_hhᵀ + x·W_hxᵀ + b1)`; the GRU applies the gated
/// update without biases. `modified_rnn` emits one output at the last step,
/// the other architectures one output per step.
pub fn forward<S: Real>(
    params: &Params<S>,
    slice: &SliceBatch,
    h_in: &Matrix<S>,
    hyper: &Hyper,
    mut mode: Mode<'_>,
) -> Result<ForwardTrace<S>> {
    check_slice(params, slice, h_in)?;
    let (rows, width) = (slice.rows, slice.width);
    let hdim = params.dims.hidden_dim;
    let every_step = params.arch.emits_every_step();
    let mut trace = ForwardTrace {
        tokens: slice.token_ids.clone(),
        rows,
        width,
        h_in: h_in.clone(),
        hidden: Vec::with_capacity(width),
        gru: Vec::new(),
        points: Vec::new(),
    };
    let mut h = h_in.clone();
    for k in 0..width {
        let x = gather(&params.embed, &slice.token_ids, rows, width, k);
        h = match &params.weights.cell {
            Cell::Rnn { w_hh, w_hx, b1 } => {
                let mut a = Matrix::zeros(rows, hdim);
                h.matmul_t_acc(w_hh, &mut a)?;
                x.matmul_t_acc(w_hx, &mut a)?;
                a.add_row_assign(b1)?;
                a.map_inplace(sigmoid_scalar);
                a
            }
            Cell::Gru {
                w_z,
                w_r,
                w,
                u_z,
                u_r,
                u,
            } => {
                let mut z = Matrix::zeros(rows, hdim);
                x.matmul_t_acc(w_z, &mut z)?;
                h.matmul_t_acc(u_z, &mut z)?;
                z.map_inplace(sigmoid_scalar);
                let mut r = Matrix::zeros(rows, hdim);
                x.matmul_t_acc(w_r, &mut r)?;
                h.matmul_t_acc(u_r, &mut r)?;
                r.map_inplace(sigmoid_scalar);
                let uh = h.matmul_t(u)?;
                let mut cand = r.hadamard(&uh)?;
                x.matmul_t_acc(w, &mut cand)?;
                cand.map_inplace(tanh_scalar);
                let mut next = Matrix::zeros(rows, hdim);
                for ((o, (&zi, &ci)), &hi) in next
                    .as_mut_slice()
                    .iter_mut()
                    .zip(z.as_slice().iter().zip(cand.as_slice()))
                    .zip(h.as_slice())
                {
                    *o = (S::one() - zi) * ci + zi * hi;
                }
                trace.gru.push(GruCache { z, r, uh, cand });
                next
            }
        };
        trace.hidden.push(h.clone());
        if every_step || k + 1 == width {
            let point = output_point(params, slice, k, &h, hyper, &mut mode)?;
            trace.points.push(point);
        }
    }
    Ok(trace)
}

fn output_point<S: Real>(
    params: &Params<S>,
    slice: &SliceBatch,
    step: usize,
    h: &Matrix<S>,
    hyper: &Hyper,
    mode: &mut Mode<'_>,
) -> Result<OutputPoint<S>> {
    let mask = match mode {
        Mode::Train(rng) if hyper.keep_prob < 1.0 => {
            let scale = S::lit(1.0 / hyper.keep_prob);
            Some(Matrix::from_fn(h.rows(), h.cols(), |_, _| {
                if rng.chance(hyper.keep_prob) {
                    scale
                } else {
                    S::zero()
                }
            }))
        }
        _ => None,
    };
    let dropped;
    let feed = match &mask {
        Some(m) => {
            dropped = h.hadamard(m)?;
            &dropped
        }
        None => h,
    };
    let mut logits = feed.matmul_t(&params.weights.w_s)?;
    logits.add_row_assign(&params.weights.b2)?;
    let active = (0..slice.rows)
        .map(|r| {
            if !hyper.mask_pad_slices {
                return true;
            }
            if params.arch.emits_every_step() {
                slice.token(r, step) != PAD_ID
            } else {
                (0..slice.width).any(|k| slice.token(r, k) != PAD_ID)
            }
        })
        .collect();
    Ok(OutputPoint {
        step,
        mask,
        logp: log_softmax_rows(&logits),
        active,
    })
}

/// Runs every slice of a batch in order, carrying the hidden state across
/// slice boundaries. The first slice starts from zeros.
pub fn forward_batch<S: Real>(
    params: &Params<S>,
    batch: &ReviewBatch,
    hyper: &Hyper,
    mut rng: Option<&mut Rng>,
) -> Result<Vec<ForwardTrace<S>>> {
    let mut h = Matrix::zeros(batch.rows(), params.dims.hidden_dim);
    let mut traces = Vec::new();
    for slice in batch.slices(params.dims.steps) {
        let mode = match rng.as_deref_mut() {
            Some(r) => Mode::Train(r),
            None => Mode::Eval,
        };
        let t = forward(params, &slice, &h, hyper, mode)?;
        h = t.h_out().clone();
        traces.push(t);
    }
    Ok(traces)
}
