//! Anytime online-to-batch conversion with truncated, heavy-tail-robust
//! gradient feedback.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod bounds;
pub mod conversion;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod learners;
pub mod objectives;
pub mod oracles;
pub mod robust;

pub use error::{Error, Result};
