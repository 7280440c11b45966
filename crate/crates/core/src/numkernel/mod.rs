//! Dense linear algebra, activations, seeded randomness and a
//! finite-difference gradient oracle.

mod activation;
mod fdiff;
mod matrix;
mod rng;

pub use activation::{
    cross_entropy, cross_entropy_logits, log_softmax_rows, sigmoid, sigmoid_scalar, softmax_rows,
    tanh_act, tanh_scalar,
};
pub use fdiff::finite_diff_grad;
pub use matrix::{matmul, Matrix};
pub use rng::{derive_seed, seeded_uniform, splitmix64, Rng};
