//! Numerical free probability on the real line: Cauchy transforms, free
//! convolution with semicircle laws, the free Ornstein-Uhlenbeck flow, free
//! entropy and Fisher information, one-dimensional Wasserstein distances, and
//! a verification harness for the identities and inequalities that connect
//! them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cauchy;
pub mod error;
pub mod experiment;
pub mod freeconv;
pub mod functionals;
pub mod measure;
pub mod report;
pub mod rmt;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
