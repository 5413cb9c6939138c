//! In-loop filter parameter selection.

use crate::bitio::{AlfCoeffs, CcAlfCoeffs, PictureHeader};
use crate::kernels::sao::{Rect, SaoMode, SaoParams, EDGE_NEIGHBOURS, SAO_MAX_BAND_START, SAO_MAX_OFFSET};
use crate::kernels::{Kernels, Plane, PlaneRef};
use crate::kernels::sao::edge_category;
use crate::pipeline::filter::{alf_picture, ccalf_picture, ctu_rects, deblock_picture, sao_picture, EdgeMaps};
use crate::pipeline::recon::{PicInfo, PicPlanes};
use crate::syntax::ParsedCtu;

/// Off-center ALF sets tried by the encoder: identity, then light to strong
/// smoothing and one mild sharpening set.
pub const ALF_CANDIDATES: [AlfCoeffs; 7] = [
    [0; 6],
    [1, 1, 2, 1, 1, 2],
    [2, 2, 4, 2, 2, 4],
    [4, 4, 6, 4, 4, 6],
    [0, 0, 0, 0, 4, 12],
    [4, 0, 12, 0, 0, 0],
    [-1, -1, 2, -1, -1, 2],
];

pub const CCALF_CANDIDATES: [CcAlfCoeffs; 7] = [
    [0; 8],
    [4, 4, 4, 4, 4, 4, 4, 4],
    [-4, -4, -4, -4, -4, -4, -4, -4],
    [8, 8, 8, 8, 8, 8, 8, 8],
    [-8, -8, -8, -8, -8, -8, -8, -8],
    [16, 0, 16, 0, 16, 0, 16, 0],
    [-16, 0, -16, 0, -16, 0, -16, 0],
];

fn ssd_rect(a: PlaneRef<'_, u16>, b: &Plane<u16>, r: Rect) -> u64 {
    let mut acc = 0u64;
    for y in r.y0..r.y1 {
        for (p, q) in a.row(y)[r.x0..r.x1].iter().zip(&b.row(y)[r.x0..r.x1]) {
            let d = *p as i64 - *q as i64;
            acc += (d * d) as u64;
        }
    }
    acc
}

#[derive(Clone, Copy, Default)]
struct Bin {
    n: i64,
    err: i64,
}

fn best_offsets(bins: &[Bin; 4]) -> ([i8; 4], i64) {
    let mut off = [0i8; 4];
    let mut gain = 0i64;
    for (o, b) in off.iter_mut().zip(bins) {
        if b.n == 0 {
            continue;
        }
        let lim = SAO_MAX_OFFSET as i64;
        let v = ((2 * b.err + b.n * b.err.signum()) / (2 * b.n)).clamp(-lim, lim);
        let delta = b.n * v * v - 2 * v * b.err;
        if delta < 0 {
            *o = v as i8;
            gain -= delta;
        }
    }
    (off, gain)
}

/// SAO parameters for one rectangle of deblocked samples against the source.
/// Each mode takes the mean error of its categories as offsets; the mode with
/// the largest SSD reduction wins and `Off` wins ties.
pub fn pick_sao_params(rec: PlaneRef<'_, u16>, src: &Plane<u16>, rect: Rect, bit_depth: u8) -> SaoParams {
    let (w, h) = (rec.width as isize, rec.height as isize);
    let mut best = (0i64, SaoParams::default());
    let mut bands = [Bin::default(); 32];
    let mut edges = [[Bin::default(); 4]; 4];
    for y in rect.y0..rect.y1 {
        for x in rect.x0..rect.x1 {
            let c = rec.get(x, y);
            let e = src.get(x, y) - c;
            let b = &mut bands[(c >> (bit_depth - 5)) as usize];
            b.n += 1;
            b.err += e as i64;
            for (class, nb) in EDGE_NEIGHBOURS.iter().enumerate() {
                let [(ax, ay), (bx, by)] = *nb;
                let (xa, ya, xb, yb) = (x as isize + ax, y as isize + ay, x as isize + bx, y as isize + by);
                let inside = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h;
                if !inside(xa, ya) || !inside(xb, yb) {
                    continue;
                }
                let cat = edge_category(c, rec.get(xa as usize, ya as usize), rec.get(xb as usize, yb as usize));
                if cat > 0 {
                    edges[class][cat - 1].n += 1;
                    edges[class][cat - 1].err += e as i64;
                }
            }
        }
    }
    for (class, bins) in edges.iter().enumerate() {
        let (offsets, gain) = best_offsets(bins);
        if gain > best.0 {
            best = (gain, SaoParams { mode: SaoMode::Edge { class: class as u8 }, offsets });
        }
    }
    for start in 0..=SAO_MAX_BAND_START {
        let s = start as usize;
        let bins = [bands[s], bands[s + 1], bands[s + 2], bands[s + 3]];
        let (offsets, gain) = best_offsets(&bins);
        if gain > best.0 {
            best = (gain, SaoParams { mode: SaoMode::Band { start }, offsets });
        }
    }
    best.1
}

/// Run the whole filter chain on an encoded picture, choosing SAO, ALF and
/// CCALF parameters on the way. Updates the CTU flags and picture header.
///
/// # Safety
/// Exclusive access to all planes.
#[allow(clippy::too_many_arguments)]
pub(crate) unsafe fn select_and_apply(
    k: &Kernels<u16>,
    info: &PicInfo,
    planes: &PicPlanes<u16>,
    ctus: &mut [ParsedCtu],
    edges: &EdgeMaps,
    src: &[Plane<u16>],
    hdr: &mut PictureHeader,
) {
    let mut info = info.clone();
    let bd = info.bit_depth;
    let np = info.pp.num_planes();
    deblock_picture(k, &info, planes, edges);
    if info.pp.tools.sao() {
        for p in 0..np {
            let ph = info.plane_dims(p).1;
            let rec = planes.dbk[p].rows(0, ph);
            for (i, rect) in ctu_rects(&info, p, 0, ph) {
                let prm = pick_sao_params(rec, &src[p], rect, bd);
                let mut scratch = Plane::<u16>::new(rec.width, rec.height, bd);
                let mut view = scratch.view_mut();
                (k.sao)(rec, &mut view, rect, &prm, bd);
                // Statistics ignore clipping; keep the choice only if it pays.
                if prm.mode != SaoMode::Off && ssd_rect(scratch.view(), &src[p], rect) < ssd_rect(rec, &src[p], rect) {
                    ctus[i].sao[p] = prm;
                }
            }
        }
    }
    sao_picture(k, &info, planes, ctus);

    let (w, h) = (info.pp.width, info.pp.height);
    if info.pp.tools.alf() {
        let input = planes.sao[0].rows(0, h);
        let mut tmp = Plane::<u16>::new(w, h, bd);
        let mut best: Option<(u64, AlfCoeffs, Vec<bool>)> = None;
        for c in ALF_CANDIDATES {
            (k.alf)(input, &mut tmp.view_mut(), Rect::new(0, 0, w, h), &c, bd);
            let mut gain = 0u64;
            let mut flags = vec![false; ctus.len()];
            for (i, rect) in ctu_rects(&info, 0, 0, h) {
                let (before, after) = (ssd_rect(input, &src[0], rect), ssd_rect(tmp.view(), &src[0], rect));
                if after < before {
                    gain += before - after;
                    flags[i] = true;
                }
            }
            if gain > 0 && best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, c, flags));
            }
        }
        if let Some((_, c, flags)) = best {
            hdr.alf = Some(c);
            info.alf = Some(c);
            info.pp.alf_present = true;
            for (ctu, f) in ctus.iter_mut().zip(flags) {
                ctu.alf = f;
            }
        }
    }
    alf_picture(k, &info, planes, ctus);

    if info.pp.tools.ccalf() && np == 3 {
        let luma = planes.fin[0].rows(0, h);
        let mut sets = [[0i8; 8]; 2];
        let mut any = false;
        let mut all_flags = vec![[false; 2]; ctus.len()];
        for p in 1..3 {
            let (pw, ph) = info.plane_dims(p);
            let chroma = planes.sao[p].rows(0, ph);
            let mut tmp = Plane::<u16>::new(pw, ph, bd);
            let mut best: Option<(u64, CcAlfCoeffs, Vec<bool>)> = None;
            for c in CCALF_CANDIDATES {
                (k.ccalf)(chroma, luma, &mut tmp.view_mut(), Rect::new(0, 0, pw, ph), &c, bd);
                let mut gain = 0u64;
                let mut flags = vec![false; ctus.len()];
                for (i, rect) in ctu_rects(&info, p, 0, ph) {
                    let (before, after) = (ssd_rect(chroma, &src[p], rect), ssd_rect(tmp.view(), &src[p], rect));
                    if after < before {
                        gain += before - after;
                        flags[i] = true;
                    }
                }
                if gain > 0 && best.as_ref().is_none_or(|b| gain > b.0) {
                    best = Some((gain, c, flags));
                }
            }
            if let Some((_, c, flags)) = best {
                any = true;
                sets[p - 1] = c;
                for (f, v) in all_flags.iter_mut().zip(flags) {
                    f[p - 1] = v;
                }
            }
        }
        if any {
            hdr.ccalf = Some(sets);
            info.ccalf = Some(sets);
            info.pp.ccalf_present = true;
            for (ctu, f) in ctus.iter_mut().zip(all_flags) {
                ctu.ccalf = f;
            }
        }
    }
    ccalf_picture(k, &info, planes, ctus);
}
