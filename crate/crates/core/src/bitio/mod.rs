//! Bit-exact serialization: the adaptive range coder, Exp-Golomb bypass
//! codes and the fixed-layout container headers.

mod header;
mod range;

pub use header::{
    alf_center, AlfCoeffs, CcAlfCoeffs, ChromaFormat, PicType, PictureHeader, SequenceHeader, ToolFlags,
    CCALF_MAX_ABS_SUM, MAGIC, SEQUENCE_HEADER_LEN, VERSION,
};
pub use range::{ProbContext, RangeDecoder, RangeEncoder};
