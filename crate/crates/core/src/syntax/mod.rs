//! CTU syntax: quadtree partitioning, prediction modes, motion and block
//! vectors, residual coefficients and per-CTU filter parameters. Parsing and
//! writing are kept symmetric.

mod ctu;
#[doc(hidden)]
pub mod fuzz;
mod mvp;
mod residual;
mod scan;

pub use ctu::{parse_ctu, write_ctu, CtuCoder, MV_LIMIT};
pub use mvp::{derive_mvp, sample_available, validate_bv, wavefront_precedes};
pub use residual::{parse_residual, write_residual, MAX_LEVEL};
pub use scan::{morton, zigzag_inverse, zigzag_scan};

use crate::bitio::{PicType, PictureHeader, ProbContext, SequenceHeader, ToolFlags};
pub use crate::kernels::intra::{BdpcmDir, IntraMode};
pub use crate::kernels::sao::{SaoMode, SaoParams};

/// Side of a motion-field / availability cell in luma samples.
pub const CELL: usize = 8;
pub const MIN_CU: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CuMode {
    Intra(IntraMode),
    /// Quarter-pel motion vector `(x, y)`.
    Inter { mv: (i32, i32) },
    /// Integer block vector `(x, y)` into the current picture.
    Ibc { bv: (i32, i32) },
    Bdpcm(BdpcmDir),
}

impl CuMode {
    /// Intra, IBC and BDPCM blocks, for deblocking strength.
    pub fn is_intra_like(&self) -> bool {
        !matches!(self, CuMode::Inter { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedCu {
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub mode: CuMode,
    /// Luma, Cb, Cr.
    pub cbf: [bool; 3],
    /// 0: DCT2, 1: DST7, 2: DCT8 (luma of intra blocks only).
    pub mts_idx: u8,
    /// Quantized levels per plane, row-major, CU size (luma) or half (chroma).
    /// Empty when the plane's cbf is clear.
    pub coeffs: [Vec<i16>; 3],
}

impl ParsedCu {
    pub fn plane_size(&self, plane: usize) -> usize {
        if plane == 0 {
            self.size
        } else {
            self.size / 2
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedCtu {
    pub row: usize,
    pub col: usize,
    pub cus: Vec<ParsedCu>,
    /// Per plane; all-off when SAO is disabled.
    pub sao: [SaoParams; 3],
    pub alf: bool,
    pub ccalf: [bool; 2],
}

/// Everything the CTU syntax depends on from the two headers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PicParams {
    pub width: usize,
    pub height: usize,
    pub log2_ctu: u8,
    pub chroma: bool,
    pub tools: ToolFlags,
    pub pic_type: PicType,
    /// The picture header carries ALF / CCALF coefficient sections.
    pub alf_present: bool,
    pub ccalf_present: bool,
    pub max_mv_y: u16,
}

impl PicParams {
    pub fn new(seq: &SequenceHeader, pic: &PictureHeader) -> Self {
        Self {
            width: seq.width(),
            height: seq.height(),
            log2_ctu: seq.log2_ctu_size,
            chroma: seq.chroma_format.has_chroma(),
            tools: seq.tools,
            pic_type: pic.pic_type,
            alf_present: pic.alf.is_some(),
            ccalf_present: pic.ccalf.is_some(),
            max_mv_y: seq.max_mv_y as u16,
        }
    }

    pub fn ctu_size(&self) -> usize {
        1 << self.log2_ctu
    }

    pub fn ctu_cols(&self) -> usize {
        self.width.div_ceil(self.ctu_size())
    }

    pub fn ctu_rows(&self) -> usize {
        self.height.div_ceil(self.ctu_size())
    }

    pub fn num_planes(&self) -> usize {
        if self.chroma {
            3
        } else {
            1
        }
    }
}

/// Adaptive contexts of one picture.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CtxBank {
    pub split: [ProbContext; 4],
    pub pred_mode: ProbContext,
    pub ibc_flag: ProbContext,
    pub bdpcm_flag: ProbContext,
    pub bdpcm_dir: ProbContext,
    pub intra_mode: [ProbContext; 2],
    pub cbf: [ProbContext; 2],
    pub mts: [ProbContext; 2],
    pub sig: [ProbContext; 3],
    pub gt1: ProbContext,
    pub mvd_gt0: ProbContext,
    pub mvd_gt1: ProbContext,
    pub sao_type: ProbContext,
    pub alf_ctu: ProbContext,
    pub ccalf_ctu: ProbContext,
}

impl CtxBank {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Motion vectors of inter blocks on the 8×8 grid of the current picture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MotionField {
    pub cols: usize,
    pub rows: usize,
    cells: Vec<Option<(i32, i32)>>,
}

impl MotionField {
    pub fn new(width: usize, height: usize) -> Self {
        let (cols, rows) = (width.div_ceil(CELL), height.div_ceil(CELL));
        Self { cols, rows, cells: vec![None; cols * rows] }
    }

    /// Vector at luma sample `(x, y)`; `None` outside the picture or for
    /// non-inter / not yet parsed blocks.
    pub fn at(&self, x: isize, y: isize) -> Option<(i32, i32)> {
        if x < 0 || y < 0 {
            return None;
        }
        let (cx, cy) = (x as usize / CELL, y as usize / CELL);
        if cx >= self.cols || cy >= self.rows {
            return None;
        }
        self.cells[cy * self.cols + cx]
    }

    pub fn set_block(&mut self, x: usize, y: usize, size: usize, mv: Option<(i32, i32)>) {
        for cy in y / CELL..((y + size) / CELL).min(self.rows) {
            for cx in x / CELL..((x + size) / CELL).min(self.cols) {
                self.cells[cy * self.cols + cx] = mv;
            }
        }
    }

    pub fn clear(&mut self) {
        self.cells.fill(None);
    }
}
