//! Parameters, forward passes, losses and hand-derived gradients for the
//! epoch-slice RNN, the per-step RNN and the GRU.

mod bptt;
pub mod checkpoint;
mod forward;
mod gradcheck;
mod hyper;
mod params;
mod predict;

pub use bptt::{active_points, backward, compute_loss};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use forward::{forward, forward_batch, ForwardTrace, GruCache, Mode, OutputPoint};
pub use gradcheck::{
    gradient_check, gradient_check_with, relative_error, GradCheckReport, TensorCheck,
    ROUNDOFF_FLOOR,
};
pub use hyper::{Hyper, Truncation};
pub use params::{
    init_params, sgd_step, Arch, Cell, Dims, Gradients, Params, Tensor, TensorMut, Weights,
};
pub use predict::{argmax, eos_outputs, predict, predict_batch};
