//! Sample-processing kernels. Each kernel has a scalar reference and a
//! lane-parallel variant that must agree bit for bit.

pub mod alf;
pub mod deblock;
pub mod dispatch;
pub mod inter;
pub mod intra;
pub mod lmcs;
pub mod pixel;
pub mod sao;
pub mod transform;
pub mod verify;

pub use dispatch::{Kernels, Variant};
pub use pixel::{Pixel, Plane, PlaneMut, PlaneRef, RowSource, MAX_LANES};
