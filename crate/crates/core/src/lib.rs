//! Sparse network inference for linear stochastic dynamics.
//!
//! The crate simulates `dx = A0 x dt + db` and its Euler discretization,
//! estimates each row of `A0` by l1-regularized least squares, evaluates the
//! recoverability conditions and sample-complexity bounds, and runs seeded
//! success-rate sweeps.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
