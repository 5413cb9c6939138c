//! Block reconstruction shared by the decoder jobs and the encoder.

use crate::bitio::{AlfCoeffs, CcAlfCoeffs, PictureHeader, SequenceHeader};
use crate::kernels::lmcs::{lmcs_build_inverse, LmcsLut};
use crate::kernels::transform::TransformKind;
use crate::kernels::{Kernels, Pixel, Plane, PlaneRef};
use crate::syntax::{sample_available, CuMode, ParsedCtu, ParsedCu, PicParams};

use super::profile::{Profiler, Stage};
use super::store::SharedPlane;

/// Per-picture constants needed by reconstruction and filtering.
#[derive(Clone, Debug)]
pub struct PicInfo {
    pub pp: PicParams,
    pub bit_depth: u8,
    pub qp: u8,
    /// Inverse luma map when LMCS is signalled.
    pub lmcs: Option<LmcsLut>,
    pub alf: Option<AlfCoeffs>,
    pub ccalf: Option<[CcAlfCoeffs; 2]>,
}

impl PicInfo {
    pub fn new(seq: &SequenceHeader, pic: &PictureHeader) -> Self {
        Self {
            pp: PicParams::new(seq, pic),
            bit_depth: seq.bit_depth,
            qp: pic.qp,
            lmcs: pic.lmcs.as_ref().map(|cw| lmcs_build_inverse(cw, seq.bit_depth)),
            alf: pic.alf,
            ccalf: pic.ccalf,
        }
    }

    pub fn plane_dims(&self, p: usize) -> (usize, usize) {
        if p == 0 {
            (self.pp.width, self.pp.height)
        } else {
            (self.pp.width / 2, self.pp.height / 2)
        }
    }
}

/// Sample planes of one picture: reconstruction (prediction source), the
/// mapped and deblocked stage, the SAO output and the final output.
pub struct PicPlanes<P: Pixel> {
    pub recon: Vec<SharedPlane<P>>,
    pub dbk: Vec<SharedPlane<P>>,
    pub sao: Vec<SharedPlane<P>>,
    pub fin: Vec<SharedPlane<P>>,
}

impl<P: Pixel> PicPlanes<P> {
    pub fn new(info: &PicInfo) -> Self {
        let mk = || {
            (0..info.pp.num_planes())
                .map(|p| {
                    let (w, h) = info.plane_dims(p);
                    SharedPlane::zeroed(w, h, info.bit_depth)
                })
                .collect::<Vec<_>>()
        };
        Self { recon: mk(), dbk: mk(), sao: mk(), fin: mk() }
    }

    /// Views of the final planes restricted to the first `rows` luma rows.
    ///
    /// # Safety
    /// Those rows are finalized.
    pub unsafe fn final_rows(&self, rows: usize) -> Vec<PlaneRef<'_, P>> {
        self.fin
            .iter()
            .enumerate()
            .map(|(p, pl)| {
                let r = if p == 0 { rows } else { rows.div_ceil(2).min(pl.height()) };
                pl.rows(0, r)
            })
            .collect()
    }

    pub fn into_final(self) -> Vec<Plane<P>> {
        self.fin.into_iter().map(SharedPlane::into_plane).collect()
    }
}

/// Working buffers for one block.
pub struct Scratch<P: Pixel> {
    pub pred: Vec<P>,
    pub out: Vec<P>,
    mapped: Vec<P>,
    deq: Vec<i16>,
    resid: Vec<i16>,
    q_lv: Vec<i16>,
    q_deq: Vec<i16>,
    q_res: Vec<i16>,
    top: Vec<i32>,
    left: Vec<i32>,
}

impl<P: Pixel> Default for Scratch<P> {
    fn default() -> Self {
        const N: usize = 64 * 64;
        Self {
            pred: vec![P::default(); N],
            out: vec![P::default(); N],
            mapped: vec![P::default(); N],
            deq: vec![0; N],
            resid: vec![0; N],
            q_lv: vec![0; 1024],
            q_deq: vec![0; 1024],
            q_res: vec![0; 1024],
            top: vec![0; 129],
            left: vec![0; 129],
        }
    }
}

fn sub(p: usize) -> usize {
    (p > 0) as usize
}

/// Intra reference arrays of the `n × n` block at plane position `(bx, by)`.
/// Index 0 is the corner; unavailable samples take the mid value.
///
/// # Safety
/// Available samples are not concurrently written.
unsafe fn build_refs<P: Pixel>(info: &PicInfo, recon: &SharedPlane<P>, cu: &ParsedCu, p: usize, n: usize, top: &mut [i32], left: &mut [i32]) {
    let s = sub(p);
    let (bx, by) = ((cu.x >> s) as isize, (cu.y >> s) as isize);
    let mid = 1 << (info.bit_depth - 1);
    let fetch = |x: isize, y: isize| {
        if sample_available(&info.pp, x << s, y << s, cu.x, cu.y) {
            recon.span(y as usize, x as usize, x as usize + 1)[0].to_i32()
        } else {
            mid
        }
    };
    top[0] = fetch(bx - 1, by - 1);
    left[0] = top[0];
    for i in 0..2 * n {
        top[i + 1] = fetch(bx + i as isize, by - 1);
        left[i + 1] = fetch(bx - 1, by + i as isize);
    }
}

/// Motion-compensated prediction of an inter CU: luma block followed by the
/// two chroma blocks.
pub fn mc_predict<P: Pixel>(k: &Kernels<P>, info: &PicInfo, reference: &[PlaneRef<'_, P>], cu: &ParsedCu, out: &mut Vec<P>) {
    let CuMode::Inter { mv } = cu.mode else { panic!("mc_predict on a non-inter CU") };
    out.clear();
    let mut off = 0;
    for (p, src) in reference.iter().enumerate().take(info.pp.num_planes()) {
        let n = cu.plane_size(p);
        out.resize(off + n * n, P::default());
        let dst = &mut out[off..off + n * n];
        if p == 0 {
            (k.interp_luma)(*src, cu.x, cu.y, mv.0, mv.1, n, n, info.bit_depth, dst);
        } else {
            (k.interp_chroma)(*src, cu.x / 2, cu.y / 2, mv.0, mv.1, n, n, info.bit_depth, dst);
        }
        off += n * n;
    }
}

fn staged_offset(cu: &ParsedCu, p: usize) -> usize {
    match p {
        0 => 0,
        1 => cu.size * cu.size,
        _ => cu.size * cu.size + (cu.size / 2) * (cu.size / 2),
    }
}

/// Prediction of plane `p` into `s.pred`.
///
/// # Safety
/// Recon samples read for intra or IBC prediction are not concurrently
/// written.
#[allow(clippy::too_many_arguments)]
pub unsafe fn predict<P: Pixel>(
    k: &Kernels<P>,
    info: &PicInfo,
    planes: &PicPlanes<P>,
    reference: Option<&[PlaneRef<'_, P>]>,
    cu: &ParsedCu,
    p: usize,
    staged: Option<&[P]>,
    s: &mut Scratch<P>,
    prof: &Profiler,
) {
    let n = cu.plane_size(p);
    let pred = &mut s.pred[..n * n];
    match cu.mode {
        CuMode::Intra(m) => {
            let t = prof.start();
            build_refs(info, &planes.recon[p], cu, p, n, &mut s.top, &mut s.left);
            (k.intra)(m, &s.top[..2 * n + 1], &s.left[..2 * n + 1], n, pred);
            prof.stop(Stage::Intra, t);
        }
        CuMode::Bdpcm(d) => {
            let t = prof.start();
            build_refs(info, &planes.recon[p], cu, p, n, &mut s.top, &mut s.left);
            (k.intra)(d.intra_mode(), &s.top[..2 * n + 1], &s.left[..2 * n + 1], n, pred);
            prof.stop(Stage::Intra, t);
        }
        CuMode::Ibc { bv } => {
            let t = prof.start();
            let sh = sub(p) as u32;
            let src = planes.recon[p].source();
            (k.ibc_copy)(&src, cu.x >> sh, cu.y >> sh, bv.0 >> sh, bv.1 >> sh, n, n, pred);
            prof.stop(Stage::Intra, t);
        }
        CuMode::Inter { mv } => {
            let t = prof.start();
            if let Some(st) = staged {
                let o = staged_offset(cu, p);
                pred.copy_from_slice(&st[o..o + n * n]);
            } else {
                let src = reference.expect("inter CU without a reference")[p];
                if p == 0 {
                    (k.interp_luma)(src, cu.x, cu.y, mv.0, mv.1, n, n, info.bit_depth, pred);
                } else {
                    (k.interp_chroma)(src, cu.x / 2, cu.y / 2, mv.0, mv.1, n, n, info.bit_depth, pred);
                }
            }
            prof.stop(Stage::Inter, t);
        }
    }
}

/// Residual of an `n × n` plane block from its levels. 64×64 blocks are
/// transformed as four 32×32 quadrants of the coefficient array.
#[allow(clippy::too_many_arguments)]
fn residual<P: Pixel>(k: &Kernels<P>, levels: &[i16], n: usize, kinds: (TransformKind, TransformKind), qp: u8, bd: u8, s: &mut Scratch<P>) {
    if n <= 32 {
        (k.dequant)(levels, qp, &mut s.deq[..n * n]);
        (k.inverse_transform)(&s.deq[..n * n], n, kinds.0, kinds.1, bd, &mut s.resid[..n * n]);
        return;
    }
    let h = n / 2;
    for qy in 0..2 {
        for qx in 0..2 {
            for y in 0..h {
                let o = (qy * h + y) * n + qx * h;
                s.q_lv[y * h..(y + 1) * h].copy_from_slice(&levels[o..o + h]);
            }
            (k.dequant)(&s.q_lv[..h * h], qp, &mut s.q_deq[..h * h]);
            (k.inverse_transform)(&s.q_deq[..h * h], h, kinds.0, kinds.1, bd, &mut s.q_res[..h * h]);
            for y in 0..h {
                let o = (qy * h + y) * n + qx * h;
                s.resid[o..o + h].copy_from_slice(&s.q_res[y * h..(y + 1) * h]);
            }
        }
    }
}

/// Reconstruct plane `p` of `cu` from `s.pred` into `s.out`.
pub fn reconstruct<P: Pixel>(k: &Kernels<P>, info: &PicInfo, cu: &ParsedCu, p: usize, s: &mut Scratch<P>, prof: &Profiler) {
    let n = cu.plane_size(p);
    let nn = n * n;
    if !cu.cbf[p] {
        let (pred, out) = (&s.pred[..nn], &mut s.out[..nn]);
        out.copy_from_slice(pred);
        return;
    }
    let t = prof.start();
    match cu.mode {
        CuMode::Bdpcm(d) => {
            (k.bdpcm)(&cu.coeffs[p], n, d, info.qp, &s.pred[..nn], info.bit_depth, &mut s.out[..nn]);
        }
        mode => {
            let kinds = match mode {
                CuMode::Intra(_) if p == 0 => TransformKind::from_mts(cu.mts_idx),
                _ => (TransformKind::Dct2, TransformKind::Dct2),
            };
            residual(k, &cu.coeffs[p], n, kinds, info.qp, info.bit_depth, s);
            (k.add_residual)(&s.pred[..nn], &s.resid[..nn], info.bit_depth, &mut s.out[..nn]);
        }
    }
    prof.stop(Stage::IqIt, t);
}

/// Store `s.out` into the recon plane and its (luma-mapped) copy into the
/// deblocking input.
///
/// # Safety
/// The block's spans in both planes are exclusively owned by the caller.
pub unsafe fn commit<P: Pixel>(k: &Kernels<P>, info: &PicInfo, planes: &PicPlanes<P>, cu: &ParsedCu, p: usize, s: &mut Scratch<P>, prof: &Profiler) {
    let n = cu.plane_size(p);
    let sh = sub(p);
    let (bx, by) = (cu.x >> sh, cu.y >> sh);
    let t = prof.start();
    for j in 0..n {
        planes.recon[p].span_mut(by + j, bx, bx + n).copy_from_slice(&s.out[j * n..(j + 1) * n]);
    }
    prof.stop(Stage::Other, t);
    let src = match (&info.lmcs, p) {
        (Some(lut), 0) => {
            let t = prof.start();
            (k.lmcs)(lut, &s.out[..n * n], &mut s.mapped[..n * n]);
            prof.stop(Stage::Lmcs, t);
            &s.mapped
        }
        _ => &s.out,
    };
    for j in 0..n {
        planes.dbk[p].span_mut(by + j, bx, bx + n).copy_from_slice(&src[j * n..(j + 1) * n]);
    }
}

/// Reconstruct every CU of a CTU in parse order.
///
/// # Safety
/// Called only once the CTU's wavefront predecessors are reconstructed and
/// while no other job touches this CTU's area; `reference` rows are final.
pub unsafe fn recon_ctu<P: Pixel>(
    k: &Kernels<P>,
    info: &PicInfo,
    planes: &PicPlanes<P>,
    reference: Option<&[PlaneRef<'_, P>]>,
    ctu: &ParsedCtu,
    staged: &dyn Fn(usize) -> Option<Vec<P>>,
    s: &mut Scratch<P>,
    prof: &Profiler,
) {
    for (i, cu) in ctu.cus.iter().enumerate() {
        let st = if matches!(cu.mode, CuMode::Inter { .. }) { staged(i) } else { None };
        for p in 0..info.pp.num_planes() {
            predict(k, info, planes, reference, cu, p, st.as_deref(), s, prof);
            reconstruct(k, info, cu, p, s, prof);
            commit(k, info, planes, cu, p, s, prof);
        }
    }
}

impl<P: Pixel> PicPlanes<P> {
    /// Tightly packed copies of the final planes.
    ///
    /// # Safety
    /// No concurrent writer of the final planes.
    pub unsafe fn final_samples(&self) -> Vec<Vec<u16>> {
        self.fin
            .iter()
            .map(|pl| {
                let (w, h) = (pl.width(), pl.height());
                let view = pl.rows(0, h);
                let mut out = Vec::with_capacity(w * h);
                for y in 0..h {
                    out.extend(view.row(y)[..w].iter().map(|s| s.to_i32() as u16));
                }
                out
            })
            .collect()
    }
}
