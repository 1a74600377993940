//! Very weak solutions of the 1-D heat equation with strongly singular
//! potentials.
//!
//! The potential `q` (zero, a Dirac mass, a "squared" Dirac mass or a
//! bounded profile) is regularized by a scaled Friedrichs mollifier, the
//! regularized Cauchy problem
//!
//! ```text
//! u_t - u_xx + sigma * q_eps(x) u = 0,   u(0, x) = u0(x)
//! ```
//!
//! is solved with a theta-weighted implicit scheme on a truncated domain,
//! and the computed nets `(u_eps)` are audited against the a-priori energy,
//! contraction and Gronwall estimates.

// `!(a > b)` is used on purpose so that NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops read closer to the matrix and stencil formulas they implement.
#![allow(clippy::needless_range_loop)]

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod diagnostics;
mod error;
pub mod fit;
pub mod harness;
pub mod kernel;
pub mod potential;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
