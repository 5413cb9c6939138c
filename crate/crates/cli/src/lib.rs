//! Front-end support for the `tvcenc`, `tvcdec` and `tvcbench` tools: Y4M and
//! raw video I/O, MD5 frame hashes, benchmark runs and their reports.

pub mod bench;
pub mod cli;
pub mod error;
pub mod hash;
pub mod report;
pub mod y4m;

pub use error::{exit_code, CliError};
