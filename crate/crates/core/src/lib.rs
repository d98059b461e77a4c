//! Long Expressive Memory (LEM): a two-time-scale recurrent cell obtained by
//! an implicit-explicit discretisation of a multiscale ODE system, together
//! with exact gradients, baselines, benchmark tasks, multiscale solvers,
//! training and the verification suites built on them.

// `!(x > 0.0)` is used on purpose to reject NaN together with non-positive
// values; index loops mirror the component formulas in the numeric kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod gradients;
pub mod lem;
pub mod numerics;
pub mod solvers;
pub mod tasks;
pub mod training;

pub use error::{Error, Result};
