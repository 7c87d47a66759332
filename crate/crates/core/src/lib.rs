//! Adaptive and standard random-walk Metropolis-Hastings in one dimension,
//! together with their diffusion limits.
//!
//! The crate is organised around the pieces needed to compare the two
//! samplers:
//!
//! - [`target`]: the four reference densities with score and CDF.
//! - [`chain`]: the discrete adaptive chain, the fixed-scale chain and their
//!   `1/n`-grid embeddings.
//! - [`diffusion`]: Euler schemes for the limiting SDEs and path ensembles.
//! - [`coefficient`]: Monte-Carlo estimates of the scaled one-step moments
//!   of the embedded chain, checked against their analytic limits.
//! - [`stats`]: Kolmogorov-Smirnov statistic and p-value, ESJD.
//! - [`experiment`]: experiment grids, result rows and CSV output used by
//!   the `amcmc` binary.

// `!(x > 0.0)` guards are written that way so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod coefficient;
pub mod diffusion;
mod error;
pub mod experiment;
pub mod rng;
pub mod stats;
pub mod target;

pub use error::{Error, Result};
