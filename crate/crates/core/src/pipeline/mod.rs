//! Decoder pipeline: job graph, worker pool, loop-filter banding and the
//! public decoder API.

mod decoder;
pub mod filter;
pub mod graph;
pub mod pool;
pub mod profile;
pub mod recon;
#[doc(hidden)]
pub mod reference;
pub mod store;
#[cfg(test)]
mod tests;

pub use decoder::{decode_stream, decode_stream_profiled, split_units, Decoder, DecoderConfig, Frame};
pub use graph::{build_job_graph, is_acyclic, wavefront_deps, GridShape, JobKind, JobSpec};
pub use profile::{Stage, StageProfile, STAGES};
