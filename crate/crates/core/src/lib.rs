//! Resilient distributed parameter estimation over directed sensor networks.
//!
//! Normal sensors observe `y_i(k) = theta' phi_i(k)`, decouple the vector
//! problem into scalar ones with DREM, and run a resilient combine-then-adapt
//! update that trims up to `f` extreme neighbor values per coordinate before
//! fusing. The crate is `no_std` and needs only `alloc`.
//!
//! * [`graph`]: digraphs, strong robustness w.r.t. a set, f-local admissibility.
//! * [`drem`]: regressors, measurement model, adjugate and the DREM transform.
//! * [`rcta`]: trimming, resilient combination and LMS adaptation.
//! * [`attack`]: scripted Byzantine broadcasts.
//! * [`sim`]: the synchronous round engine, validation and diagnostics.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attack;
pub mod drem;
pub mod error;
pub mod graph;
pub mod rcta;
pub mod sim;

pub use error::{Error, Result};
