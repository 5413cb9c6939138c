//! Per-path kernel tables selecting scalar or lane-parallel variants.

use std::ops::Range;
use std::sync::atomic::{AtomicBool, Ordering};

use super::alf::{alf_apply_scalar, alf_apply_vector, ccalf_apply_scalar, ccalf_apply_vector};
use super::deblock::{
    deblock_horizontal_scalar, deblock_horizontal_vector, deblock_vertical_scalar, deblock_vertical_vector, DeblockParams,
    EdgeGrid,
};
use super::inter::{
    ibc_copy_scalar, ibc_copy_vector, interp_chroma_scalar, interp_chroma_vector, interp_luma_scalar, interp_luma_vector,
};
use super::intra::{
    add_residual_scalar, add_residual_vector, bdpcm_scalar, bdpcm_vector, intra_predict_scalar, intra_predict_vector,
    BdpcmDir, IntraMode,
};
use super::lmcs::{lmcs_apply_scalar, lmcs_apply_vector, LmcsLut};
use super::pixel::{Pixel, PlaneMut, PlaneRef, RowSource};
use super::sao::{sao_apply_scalar, sao_apply_vector, Rect, SaoParams};
use super::transform::{dequant_scalar, dequant_vector, inverse_transform_scalar, inverse_transform_vector, TransformKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Scalar,
    Vector,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Scalar => "scalar",
            Variant::Vector => "vector",
        }
    }
}

static FORCE_SCALAR: AtomicBool = AtomicBool::new(false);

/// Process-wide override: tables built with [`Kernels::auto`] afterwards use
/// scalar variants.
pub fn set_force_scalar(on: bool) {
    FORCE_SCALAR.store(on, Ordering::SeqCst);
}

pub fn force_scalar() -> bool {
    FORCE_SCALAR.load(Ordering::SeqCst)
}

pub type DequantFn = fn(&[i16], u8, &mut [i16]);
pub type InvTransformFn = fn(&[i16], usize, TransformKind, TransformKind, u8, &mut [i16]);
pub type IntraFn<P> = fn(IntraMode, &[i32], &[i32], usize, &mut [P]);
pub type InterpFn<P> = for<'a> fn(PlaneRef<'a, P>, usize, usize, i32, i32, usize, usize, u8, &mut [P]);
pub type IbcFn<P> = fn(&dyn RowSource<P>, usize, usize, i32, i32, usize, usize, &mut [P]);
pub type BdpcmFn<P> = fn(&[i16], usize, BdpcmDir, u8, &[P], u8, &mut [P]);
pub type AddResidualFn<P> = fn(&[P], &[i16], u8, &mut [P]);
pub type DeblockFn<P> = for<'a, 'b> fn(&'b mut PlaneMut<'a, P>, Range<usize>, &EdgeGrid, &DeblockParams);
pub type SaoFn<P> = for<'a, 'b, 'c> fn(PlaneRef<'a, P>, &'c mut PlaneMut<'b, P>, Rect, &SaoParams, u8);
pub type AlfFn<P> = for<'a, 'b, 'c> fn(PlaneRef<'a, P>, &'c mut PlaneMut<'b, P>, Rect, &[i16; 6], u8);
pub type CcalfFn<P> = for<'a, 'b, 'c, 'd> fn(PlaneRef<'a, P>, PlaneRef<'b, P>, &'d mut PlaneMut<'c, P>, Rect, &[i8; 8], u8);
pub type LmcsFn<P> = fn(&LmcsLut, &[P], &mut [P]);

/// Function table for one storage path.
#[derive(Clone, Copy)]
pub struct Kernels<P: Pixel> {
    pub variant: Variant,
    pub dequant: DequantFn,
    pub inverse_transform: InvTransformFn,
    pub intra: IntraFn<P>,
    pub interp_luma: InterpFn<P>,
    pub interp_chroma: InterpFn<P>,
    pub ibc_copy: IbcFn<P>,
    pub bdpcm: BdpcmFn<P>,
    pub add_residual: AddResidualFn<P>,
    pub deblock_vertical: DeblockFn<P>,
    pub deblock_horizontal: DeblockFn<P>,
    pub sao: SaoFn<P>,
    pub alf: AlfFn<P>,
    pub ccalf: CcalfFn<P>,
    pub lmcs: LmcsFn<P>,
}

impl<P: Pixel> Kernels<P> {
    pub fn new(variant: Variant) -> Self {
        match variant {
            Variant::Scalar => Self {
                variant,
                dequant: dequant_scalar,
                inverse_transform: inverse_transform_scalar,
                intra: intra_predict_scalar::<P>,
                interp_luma: interp_luma_scalar::<P>,
                interp_chroma: interp_chroma_scalar::<P>,
                ibc_copy: ibc_copy_scalar::<P>,
                bdpcm: bdpcm_scalar::<P>,
                add_residual: add_residual_scalar::<P>,
                deblock_vertical: deblock_vertical_scalar::<P>,
                deblock_horizontal: deblock_horizontal_scalar::<P>,
                sao: sao_apply_scalar::<P>,
                alf: alf_apply_scalar::<P>,
                ccalf: ccalf_apply_scalar::<P>,
                lmcs: lmcs_apply_scalar::<P>,
            },
            Variant::Vector => Self {
                variant,
                dequant: dequant_vector,
                inverse_transform: inverse_transform_vector,
                intra: intra_predict_vector::<P>,
                interp_luma: interp_luma_vector::<P>,
                interp_chroma: interp_chroma_vector::<P>,
                ibc_copy: ibc_copy_vector::<P>,
                bdpcm: bdpcm_vector::<P>,
                add_residual: add_residual_vector::<P>,
                deblock_vertical: deblock_vertical_vector::<P>,
                deblock_horizontal: deblock_horizontal_vector::<P>,
                sao: sao_apply_vector::<P>,
                alf: alf_apply_vector::<P>,
                ccalf: ccalf_apply_vector::<P>,
                lmcs: lmcs_apply_vector::<P>,
            },
        }
    }

    /// Vector variants unless the process-wide override is set.
    pub fn auto() -> Self {
        Self::new(if force_scalar() { Variant::Scalar } else { Variant::Vector })
    }
}
