//! Ruin probabilities and overshoot laws for Markov-modulated jump processes
//! with Erlang-mixture upward and exponential downward jumps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod factorization;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod overshoot;
pub mod poly;
pub mod spectral;
pub mod transforms;

pub use error::{Error, Result};
pub use num_complex::Complex64;
