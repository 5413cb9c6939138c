//! In-loop filter chain: edge maps, the banded per-CTU-row filter used by
//! the pipeline, and a whole-picture serial application.

use crate::kernels::deblock::{boundary_strength, DeblockParams, EdgeGrid, EdgeSide};
use crate::kernels::sao::{copy_rect, Rect, SaoMode};
use crate::kernels::{Kernels, Pixel, PlaneMut, PlaneRef};
use crate::syntax::{CuMode, ParsedCtu, CELL};

use super::profile::{Profiler, Stage};
use super::recon::{PicInfo, PicPlanes};

/// Boundary strengths per plane for vertical and horizontal edges.
#[derive(Clone, Debug)]
pub struct EdgeMaps {
    pub vert: Vec<EdgeGrid>,
    pub horz: Vec<EdgeGrid>,
}

#[derive(Clone, Copy, Default)]
struct Cell {
    intra_like: bool,
    cbf: [bool; 3],
    mv: (i32, i32),
}

impl Cell {
    fn side(&self, p: usize) -> EdgeSide {
        EdgeSide { intra_like: self.intra_like, cbf: self.cbf[p], mv: self.mv }
    }
}

/// Edges lie on CU boundaries and on the internal 32-sample transform
/// boundaries of 64×64 luma blocks. Chroma edges are kept on an 8-sample
/// chroma grid.
pub fn build_edge_maps(info: &PicInfo, ctus: &[ParsedCtu]) -> EdgeMaps {
    let (w, h) = (info.pp.width, info.pp.height);
    let (cw, ch) = (w / CELL, h / CELL);
    let mut cells = vec![Cell::default(); cw * ch];
    for cu in ctus.iter().flat_map(|c| &c.cus) {
        let mv = if let CuMode::Inter { mv } = cu.mode { mv } else { (0, 0) };
        let cell = Cell { intra_like: cu.mode.is_intra_like(), cbf: cu.cbf, mv };
        for y in cu.y / CELL..(cu.y + cu.size) / CELL {
            for x in cu.x / CELL..(cu.x + cu.size) / CELL {
                cells[y * cw + x] = cell;
            }
        }
    }
    let at = |x: usize, y: usize| cells[(y / CELL) * cw + x / CELL];
    let np = info.pp.num_planes();
    let mut vert = Vec::with_capacity(np);
    let mut horz = Vec::with_capacity(np);
    vert.push(EdgeGrid::new(w, h, 4, 4));
    horz.push(EdgeGrid::new(w, h, 4, 4));
    for _ in 1..np {
        vert.push(EdgeGrid::new(w / 2, h / 2, 8, 4));
        horz.push(EdgeGrid::new(w / 2, h / 2, 4, 8));
    }
    for cu in ctus.iter().flat_map(|c| &c.cus) {
        let t = cu.size.min(32);
        for ty in (cu.y..cu.y + cu.size).step_by(t) {
            for tx in (cu.x..cu.x + cu.size).step_by(t) {
                if tx > 0 {
                    for y in (ty..ty + t).step_by(4) {
                        vert[0].set(tx, y, boundary_strength(at(tx - 1, y).side(0), at(tx, y).side(0)));
                    }
                }
                if ty > 0 {
                    for x in (tx..tx + t).step_by(4) {
                        horz[0].set(x, ty, boundary_strength(at(x, ty - 1).side(0), at(x, ty).side(0)));
                    }
                }
            }
        }
        for p in 1..np {
            let (cx, cy, n) = (cu.x / 2, cu.y / 2, cu.size / 2);
            if cx > 0 && cx % 8 == 0 {
                for y in (cy..cy + n).step_by(4) {
                    vert[p].set(cx, y, boundary_strength(at(cu.x - 1, 2 * y).side(p), at(cu.x, 2 * y).side(p)));
                }
            }
            if cy > 0 && cy % 8 == 0 {
                for x in (cx..cx + n).step_by(4) {
                    horz[p].set(x, cy, boundary_strength(at(2 * x, cu.y - 1).side(p), at(2 * x, cu.y).side(p)));
                }
            }
        }
    }
    EdgeMaps { vert, horz }
}

/// Row limits reached after filter row `r`: each stage's output is final
/// below these bounds (exclusive), per plane class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BandLimits {
    pub sao: usize,
    pub alf: usize,
    pub chroma_sao: usize,
    pub chroma_final: usize,
    pub finalized: usize,
}

pub fn band_limits(info: &PicInfo, r: Option<usize>) -> BandLimits {
    let Some(r) = r else {
        return BandLimits { sao: 0, alf: 0, chroma_sao: 0, chroma_final: 0, finalized: 0 };
    };
    let (h, ctu) = (info.pp.height, info.pp.ctu_size());
    if r + 1 >= info.pp.ctu_rows() {
        return BandLimits { sao: h, alf: h, chroma_sao: h / 2, chroma_final: h / 2, finalized: h };
    }
    let b = (r + 1) * ctu;
    BandLimits { sao: b - 2, alf: b - 4, chroma_sao: b / 2 - 2, chroma_final: b / 2 - 3, finalized: b - 8 }
}

/// CTU-aligned pieces of rows `y0..y1` of plane `p`, with the CTU index.
pub fn ctu_rects(info: &PicInfo, p: usize, y0: usize, y1: usize) -> impl Iterator<Item = (usize, Rect)> + '_ {
    let ctu = if p == 0 { info.pp.ctu_size() } else { info.pp.ctu_size() / 2 };
    let w = info.plane_dims(p).0;
    let cols = info.pp.ctu_cols();
    let rows = if y0 < y1 { y0 / ctu..(y1 - 1) / ctu + 1 } else { 0..0 };
    rows.flat_map(move |cr| {
        (0..cols).map(move |c| {
            let rect = Rect::new(c * ctu, y0.max(cr * ctu), ((c + 1) * ctu).min(w), y1.min((cr + 1) * ctu));
            (cr * cols + c, rect)
        })
    })
}

fn sao_rows<P: Pixel>(k: &Kernels<P>, info: &PicInfo, ctus: &[ParsedCtu], p: usize, src: PlaneRef<'_, P>, dst: &mut PlaneMut<'_, P>, y0: usize, y1: usize) {
    for (i, rect) in ctu_rects(info, p, y0, y1) {
        let prm = &ctus[i].sao[p];
        if info.pp.tools.sao() && prm.mode != SaoMode::Off {
            (k.sao)(src, dst, rect, prm, info.bit_depth);
        } else {
            copy_rect(src, dst, rect);
        }
    }
}

fn alf_rows<P: Pixel>(k: &Kernels<P>, info: &PicInfo, ctus: &[ParsedCtu], src: PlaneRef<'_, P>, dst: &mut PlaneMut<'_, P>, y0: usize, y1: usize) {
    for (i, rect) in ctu_rects(info, 0, y0, y1) {
        match &info.alf {
            Some(c) if ctus[i].alf => (k.alf)(src, dst, rect, c, info.bit_depth),
            _ => copy_rect(src, dst, rect),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn ccalf_rows<P: Pixel>(
    k: &Kernels<P>,
    info: &PicInfo,
    ctus: &[ParsedCtu],
    p: usize,
    chroma: PlaneRef<'_, P>,
    luma: PlaneRef<'_, P>,
    dst: &mut PlaneMut<'_, P>,
    y0: usize,
    y1: usize,
) {
    for (i, rect) in ctu_rects(info, p, y0, y1) {
        match &info.ccalf {
            Some(sets) if ctus[i].ccalf[p - 1] => (k.ccalf)(chroma, luma, dst, rect, &sets[p - 1], info.bit_depth),
            _ => copy_rect(chroma, dst, rect),
        }
    }
}

/// Filter chain for CTU row `r`. Returns the new finalized row count.
///
/// # Safety
/// Filter rows of a picture run in order, after the reconstruction of rows
/// `r` and `r + 1` where it exists; nothing else writes the rows touched here,
/// and final rows above the previous finalized count are not modified.
#[allow(clippy::too_many_arguments)]
pub unsafe fn filter_row<P: Pixel>(
    k: &Kernels<P>,
    info: &PicInfo,
    planes: &PicPlanes<P>,
    ctus: &[ParsedCtu],
    edges: &EdgeMaps,
    r: usize,
    prof: &Profiler,
) -> usize {
    let prev = band_limits(info, r.checked_sub(1));
    let cur = band_limits(info, Some(r));
    let h = info.pp.height;
    let ctu = info.pp.ctu_size();
    let top = r * ctu;
    let bottom = ((r + 1) * ctu).min(h);
    let prm = DeblockParams::new(info.qp, info.bit_depth);
    let np = info.pp.num_planes();

    if info.pp.tools.dblk() {
        let t = prof.start();
        for p in 0..np {
            let (t0, b0) = if p == 0 { (top, bottom) } else { (top / 2, bottom / 2) };
            let mut view = planes.dbk[p].rows_mut(t0.saturating_sub(2), b0);
            (k.deblock_vertical)(&mut view, t0..b0, &edges.vert[p], &prm);
            (k.deblock_horizontal)(&mut view, t0..b0, &edges.horz[p], &prm);
        }
        prof.stop(Stage::Dblk, t);
    }

    let t = prof.start();
    for p in 0..np {
        let (y0, y1, ph) = if p == 0 { (prev.sao, cur.sao, h) } else { (prev.chroma_sao, cur.chroma_sao, h / 2) };
        let src = planes.dbk[p].rows(y0.saturating_sub(1), (y1 + 1).min(ph));
        let mut dst = planes.sao[p].rows_mut(y0, y1);
        sao_rows(k, info, ctus, p, src, &mut dst, y0, y1);
    }
    prof.stop(Stage::Sao, t);

    let t = prof.start();
    {
        let (y0, y1) = (prev.alf, cur.alf);
        let src = planes.sao[0].rows(y0.saturating_sub(2), (y1 + 2).min(h));
        let mut dst = planes.fin[0].rows_mut(y0, y1);
        alf_rows(k, info, ctus, src, &mut dst, y0, y1);
    }
    prof.stop(Stage::Alf, t);

    let t = prof.start();
    for p in 1..np {
        let (y0, y1) = (prev.chroma_final, cur.chroma_final);
        let chroma = planes.sao[p].rows(y0, y1);
        let luma = planes.fin[0].rows((2 * y0).saturating_sub(1), (2 * y1 + 2).min(cur.alf));
        let mut dst = planes.fin[p].rows_mut(y0, y1);
        ccalf_rows(k, info, ctus, p, chroma, luma, &mut dst, y0, y1);
    }
    prof.stop(Stage::Ccalf, t);
    cur.finalized
}

/// Deblock whole planes in place.
///
/// # Safety
/// Exclusive access to the deblocking planes.
pub unsafe fn deblock_picture<P: Pixel>(k: &Kernels<P>, info: &PicInfo, planes: &PicPlanes<P>, edges: &EdgeMaps) {
    if !info.pp.tools.dblk() {
        return;
    }
    let prm = DeblockParams::new(info.qp, info.bit_depth);
    for p in 0..info.pp.num_planes() {
        let ph = info.plane_dims(p).1;
        let mut view = planes.dbk[p].rows_mut(0, ph);
        (k.deblock_vertical)(&mut view, 0..ph, &edges.vert[p], &prm);
        (k.deblock_horizontal)(&mut view, 0..ph, &edges.horz[p], &prm);
    }
}

/// # Safety
/// Exclusive access to the planes involved.
pub unsafe fn sao_picture<P: Pixel>(k: &Kernels<P>, info: &PicInfo, planes: &PicPlanes<P>, ctus: &[ParsedCtu]) {
    for p in 0..info.pp.num_planes() {
        let ph = info.plane_dims(p).1;
        sao_rows(k, info, ctus, p, planes.dbk[p].rows(0, ph), &mut planes.sao[p].rows_mut(0, ph), 0, ph);
    }
}

/// # Safety
/// Exclusive access to the planes involved.
pub unsafe fn alf_picture<P: Pixel>(k: &Kernels<P>, info: &PicInfo, planes: &PicPlanes<P>, ctus: &[ParsedCtu]) {
    let h = info.pp.height;
    alf_rows(k, info, ctus, planes.sao[0].rows(0, h), &mut planes.fin[0].rows_mut(0, h), 0, h);
}

/// # Safety
/// Exclusive access to the planes involved.
pub unsafe fn ccalf_picture<P: Pixel>(k: &Kernels<P>, info: &PicInfo, planes: &PicPlanes<P>, ctus: &[ParsedCtu]) {
    let h = info.pp.height;
    for p in 1..info.pp.num_planes() {
        let ph = h / 2;
        ccalf_rows(k, info, ctus, p, planes.sao[p].rows(0, ph), planes.fin[0].rows(0, h), &mut planes.fin[p].rows_mut(0, ph), 0, ph);
    }
}

/// The same chain applied to whole planes in one pass each.
///
/// # Safety
/// Exclusive access to all planes.
pub unsafe fn filter_picture<P: Pixel>(k: &Kernels<P>, info: &PicInfo, planes: &PicPlanes<P>, ctus: &[ParsedCtu], edges: &EdgeMaps) {
    deblock_picture(k, info, planes, edges);
    sao_picture(k, info, planes, ctus);
    alf_picture(k, info, planes, ctus);
    ccalf_picture(k, info, planes, ctus);
}
