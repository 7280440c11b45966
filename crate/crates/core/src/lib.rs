//! Recurrent review-score classifiers trained from scratch.
//!
//! Three architectures share one pipeline: an Elman RNN that predicts once
//! per `T`-token slice, the same RNN predicting after every token, and a
//! bias-free GRU predicting after every token. Reviews are front-padded with
//! PAD (id 0) to a fixed length and terminated by EOS; the prediction at EOS
//! is the review's label.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below are what the trainer and CLI use.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod evalinspect;
pub mod models;
pub mod numkernel;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix64 = numkernel::Matrix<f64>;
pub type Matrix32 = numkernel::Matrix<f32>;
pub type Params64 = models::Params<f64>;
pub type Params32 = models::Params<f32>;
pub type Gradients64 = models::Gradients<f64>;
pub type ForwardTrace64 = models::ForwardTrace<f64>;
