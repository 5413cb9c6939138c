//! TVC: a miniature block-based video codec whose decoder runs a
//! four-level parallel pipeline (picture, CTU wavefront, task, sub-CTU) on
//! a worker pool, with scalar and lane-parallel sample kernels for both
//! 8-bit and 16-bit sample storage.

pub mod bitio;
pub mod encoder;
pub mod error;
pub mod kernels;
pub mod pipeline;
pub mod syntax;

pub use error::{Error, Result};
