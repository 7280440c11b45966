//! Loss and hand-derived backpropagation through time.

use crate::corpus::PAD_ID;
use crate::error::{Error, Result};
use crate::models::forward::gather;
use crate::models::{Cell, ForwardTrace, Gradients, Hyper, Params, Truncation};
use crate::numkernel::Matrix;
use crate::scalar::Real;

fn check_labels<S: Real>(
    traces: &[ForwardTrace<S>],
    labels: &[usize],
    classes: usize,
) -> Result<()> {
    for t in traces {
        if t.rows != labels.len() {
            return Err(Error::Shape {
                op: "labels",
                left: (t.rows, t.width),
                right: (labels.len(), 1),
            });
        }
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::arg(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }
    Ok(())
}

/// Number of (prediction point, row) pairs that contribute to the loss.
pub fn active_points<S: Real>(traces: &[ForwardTrace<S>]) -> usize {
    traces
        .iter()
        .flat_map(|t| &t.points)
        .map(|p| p.active.iter().filter(|&&a| a).count())
        .sum()
}

/// Mean negative log-likelihood over every active prediction point of the
/// batch (each review's label is used at all of its points), plus
/// (λ/2)·Σ‖W‖² over the non-embedding weight matrices.
pub fn compute_loss<S: Real>(
    traces: &[ForwardTrace<S>],
    labels: &[usize],
    params: &Params<S>,
    hyper: &Hyper,
) -> Result<S> {
    check_labels(traces, labels, params.dims.num_classes)?;
    let n = active_points(traces);
    let mut nll = S::zero();
    for p in traces.iter().flat_map(|t| &t.points) {
        for (r, &label) in labels.iter().enumerate() {
            if p.active[r] {
                nll -= p.logp[(r, label)];
            }
        }
    }
    let data = if n > 0 {
        nll / S::lit(n as f64)
    } else {
        S::zero()
    };
    Ok(data + S::lit(hyper.l2 / 2.0) * params.weights.l2_sq())
}

fn scatter_rows<S: Real>(
    grads: &mut Gradients<S>,
    trace: &ForwardTrace<S>,
    step: usize,
    dx: &Matrix<S>,
) {
    for r in 0..trace.rows {
        let id = trace.token(r, step);
        if id == PAD_ID {
            continue;
        }
        let row = grads
            .embed
            .entry(id)
            .or_insert_with(|| vec![S::zero(); dx.cols()]);
        for (g, &v) in row.iter_mut().zip(dx.row(r)) {
            *g += v;
        }
    }
}

fn validate_trace<S: Real>(t: &ForwardTrace<S>, params: &Params<S>) -> Result<()> {
    if t.hidden.len() != t.width {
        return Err(Error::State(format!(
            "trace has {} hidden states for width {}",
            t.hidden.len(),
            t.width
        )));
    }
    if params.arch.is_gru() && t.gru.len() != t.width {
        return Err(Error::State("GRU trace is missing gate caches".into()));
    }
    if t.points
        .iter()
        .any(|p| p.step >= t.width || p.active.len() != t.rows)
    {
        return Err(Error::State("output point does not match its slice".into()));
    }
    Ok(())
}

/// Gradient of [`compute_loss`] for traces produced in order by [`forward`]
/// over consecutive slices.
///
/// With [`Truncation::PerSlice`] each slice's incoming hidden state is
/// treated as a constant; with [`Truncation::FullSequence`] the gradient
/// flows back across slice boundaries.
///
/// [`forward`]: crate::models::forward
pub fn backward<S: Real>(
    traces: &[ForwardTrace<S>],
    labels: &[usize],
    params: &Params<S>,
    hyper: &Hyper,
) -> Result<Gradients<S>> {
    if traces.is_empty() {
        return Err(Error::State("no traces to backpropagate".into()));
    }
    check_labels(traces, labels, params.dims.num_classes)?;
    for t in traces {
        validate_trace(t, params)?;
    }
    let n = active_points(traces);
    let inv_n = if n > 0 {
        S::one() / S::lit(n as f64)
    } else {
        S::zero()
    };
    let hdim = params.dims.hidden_dim;
    let mut grads = Gradients::zeros_for(params);
    let mut carry: Option<Matrix<S>> = None;

    for t in traces.iter().rev() {
        let mut dh = match (hyper.truncation, carry.take()) {
            (Truncation::FullSequence, Some(c)) => c,
            _ => Matrix::zeros(t.rows, hdim),
        };
        for k in (0..t.width).rev() {
            let h = &t.hidden[k];
            for p in t.points.iter().filter(|p| p.step == k) {
                let mut dlogits = p.probs();
                for (r, &label) in labels.iter().enumerate() {
                    let row = dlogits.row_mut(r);
                    if p.active[r] {
                        row[label] -= S::one();
                        row.iter_mut().for_each(|v| *v *= inv_n);
                    } else {
                        row.fill(S::zero());
                    }
                }
                let feed = match &p.mask {
                    Some(m) => h.hadamard(m)?,
                    None => h.clone(),
                };
                dlogits.t_matmul_acc(&feed, &mut grads.weights.w_s)?;
                grads.weights.b2.add_assign(&dlogits.sum_rows())?;
                let mut dfeed = Matrix::zeros(t.rows, hdim);
                dlogits.matmul_acc(&params.weights.w_s, &mut dfeed)?;
                if let Some(m) = &p.mask {
                    dfeed = dfeed.hadamard(m)?;
                }
                dh.add_assign(&dfeed)?;
            }

            let h_prev = t.h_before(k);
            let x = gather(&params.embed, &t.tokens, t.rows, t.width, k);
            let mut dx = Matrix::zeros(t.rows, params.dims.embed_dim);
            let mut dh_prev = Matrix::zeros(t.rows, hdim);
            match (&params.weights.cell, &mut grads.weights.cell) {
                (
                    Cell::Rnn { w_hh, w_hx, .. },
                    Cell::Rnn {
                        w_hh: g_hh,
                        w_hx: g_hx,
                        b1: g_b1,
                    },
                ) => {
                    let da = dh.zip_map(h, |g, s| g * s * (S::one() - s))?;
                    da.t_matmul_acc(h_prev, g_hh)?;
                    da.t_matmul_acc(&x, g_hx)?;
                    g_b1.add_assign(&da.sum_rows())?;
                    da.matmul_acc(w_hx, &mut dx)?;
                    da.matmul_acc(w_hh, &mut dh_prev)?;
                }
                (
                    Cell::Gru {
                        w_z,
                        w_r,
                        w,
                        u_z,
                        u_r,
                        u,
                    },
                    Cell::Gru {
                        w_z: g_wz,
                        w_r: g_wr,
                        w: g_w,
                        u_z: g_uz,
                        u_r: g_ur,
                        u: g_u,
                    },
                ) => {
                    let c = &t.gru[k];
                    let one = S::one();
                    // h = (1 − z)∘h̃ + z∘h_prev
                    let mut dz = Matrix::zeros(t.rows, hdim);
                    let mut da_c = Matrix::zeros(t.rows, hdim);
                    {
                        let (dzs, dcs, dps) = (
                            dz.as_mut_slice(),
                            da_c.as_mut_slice(),
                            dh_prev.as_mut_slice(),
                        );
                        let (zs, cs, hs, gs) = (
                            c.z.as_slice(),
                            c.cand.as_slice(),
                            h_prev.as_slice(),
                            dh.as_slice(),
                        );
                        for i in 0..gs.len() {
                            dzs[i] = gs[i] * (hs[i] - cs[i]) * zs[i] * (one - zs[i]);
                            dcs[i] = gs[i] * (one - zs[i]) * (one - cs[i] * cs[i]);
                            dps[i] = gs[i] * zs[i];
                        }
                    }
                    // h̃ = tanh(r∘(h_prev·Uᵀ) + x·Wᵀ)
                    let duh = da_c.hadamard(&c.r)?;
                    let da_r = da_c
                        .zip_map(&c.uh, |g, v| g * v)?
                        .zip_map(&c.r, |g, s| g * s * (one - s))?;
                    duh.t_matmul_acc(h_prev, g_u)?;
                    duh.matmul_acc(u, &mut dh_prev)?;
                    da_c.t_matmul_acc(&x, g_w)?;
                    da_c.matmul_acc(w, &mut dx)?;
                    dz.t_matmul_acc(&x, g_wz)?;
                    dz.t_matmul_acc(h_prev, g_uz)?;
                    dz.matmul_acc(w_z, &mut dx)?;
                    dz.matmul_acc(u_z, &mut dh_prev)?;
                    da_r.t_matmul_acc(&x, g_wr)?;
                    da_r.t_matmul_acc(h_prev, g_ur)?;
                    da_r.matmul_acc(w_r, &mut dx)?;
                    da_r.matmul_acc(u_r, &mut dh_prev)?;
                }
                _ => return Err(Error::State("gradient and parameter cells disagree".into())),
            }
            scatter_rows(&mut grads, t, k, &dx);
            dh = dh_prev;
        }
        carry = Some(dh);
    }

    if hyper.l2 > 0.0 {
        let lambda = S::lit(hyper.l2);
        for (g, p) in grads
            .weights
            .tensors_mut()
            .into_iter()
            .zip(params.weights.tensors())
        {
            if p.regularized {
                g.value.axpy(lambda, p.value)?;
            }
        }
    }
    Ok(grads)
}
