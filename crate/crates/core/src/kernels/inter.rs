//! Motion-compensated prediction: 8-tap luma and bilinear chroma
//! interpolation, and intra block copy.

use super::pixel::{max_sample, Acc, Pixel, PlaneRef, RowSource};

pub const LUMA_TAPS: [[i32; 8]; 4] = [
    [0, 0, 0, 64, 0, 0, 0, 0],
    [-1, 4, -10, 58, 17, -5, 1, 0],
    [-1, 4, -11, 40, 40, -11, 4, -1],
    [0, 1, -5, 17, 58, -10, 4, -1],
];

/// Largest block side the interpolators accept.
pub const MAX_BLOCK: usize = 64;

#[inline]
pub fn chroma_taps(frac: i32) -> [i32; 2] {
    [64 - 8 * frac, 8 * frac]
}

#[inline]
fn split_mv(mv: i32, frac_bits: u32) -> (isize, i32) {
    ((mv >> frac_bits) as isize, mv & ((1 << frac_bits) - 1))
}

/// Generic separable scalar filter with `T` taps. `(x, y)` is the block
/// origin plus the integer part of the motion vector.
#[allow(clippy::too_many_arguments)]
fn interp_scalar<P: Pixel, const T: usize>(
    src: PlaneRef<'_, P>,
    x: isize,
    y: isize,
    hx: [i32; T],
    vy: [i32; T],
    copy: bool,
    w: usize,
    h: usize,
    bit_depth: u8,
    out: &mut [P],
) {
    let off = (T as isize / 2) - 1;
    if copy {
        for j in 0..h {
            for i in 0..w {
                out[j * w + i] = P::from_i32(src.get_clamped(x + i as isize, y + j as isize));
            }
        }
        return;
    }
    let max = max_sample(bit_depth);
    let hs = bit_depth as u32 - 8;
    let vs = 20 - bit_depth as u32;
    let rows = h + T - 1;
    let mut tmp = vec![0i32; rows * w];
    for j in 0..rows {
        let yy = y + j as isize - off;
        for i in 0..w {
            let mut s = 0i32;
            for k in 0..T {
                s += hx[k] * src.get_clamped(x + i as isize + k as isize - off, yy);
            }
            tmp[j * w + i] = s >> hs;
        }
    }
    for j in 0..h {
        for i in 0..w {
            let mut s = 0i32;
            for k in 0..T {
                s += vy[k] * tmp[(j + k) * w + i];
            }
            out[j * w + i] = P::from_i32(((s + (1 << (vs - 1))) >> vs).clamp(0, max));
        }
    }
}

/// Lane-parallel version of [`interp_scalar`]: the horizontal pass runs in
/// the path's accumulator lanes, the vertical pass in 32-bit lanes.
#[allow(clippy::too_many_arguments)]
fn interp_vector<P: Pixel, const T: usize>(
    src: PlaneRef<'_, P>,
    x: isize,
    y: isize,
    hx: [i32; T],
    vy: [i32; T],
    copy: bool,
    w: usize,
    h: usize,
    bit_depth: u8,
    out: &mut [P],
) {
    assert!(w <= MAX_BLOCK && h <= MAX_BLOCK);
    let off = (T as isize / 2) - 1;
    let pw = src.width as isize;
    let ph = src.height as isize;
    let max = max_sample(bit_depth);
    let clamp_y = |yy: isize| yy.clamp(0, ph - 1) as usize;
    let interior = |x0: isize, n: usize| x0 >= 0 && x0 + n as isize <= pw;
    if copy {
        for j in 0..h {
            let row = src.row(clamp_y(y + j as isize));
            let dst = &mut out[j * w..(j + 1) * w];
            if interior(x, w) {
                dst.copy_from_slice(&row[x as usize..x as usize + w]);
            } else {
                for (i, d) in dst.iter_mut().enumerate() {
                    *d = row[(x + i as isize).clamp(0, pw - 1) as usize];
                }
            }
        }
        return;
    }
    let hs = bit_depth as u32 - 8;
    let vs = 20 - bit_depth as u32;
    let rows = h + T - 1;
    let sw = w + T - 1;
    let htaps: [P::Acc; T] = std::array::from_fn(|k| P::Acc::from_i32(hx[k]));
    let mut line = [P::Acc::default(); MAX_BLOCK + 8];
    let mut lane = [P::Acc::default(); MAX_BLOCK];
    let mut tmp = [0i32; (MAX_BLOCK + 7) * MAX_BLOCK];
    let x0 = x - off;
    for j in 0..rows {
        let row = src.row(clamp_y(y + j as isize - off));
        if interior(x0, sw) {
            for (d, s) in line[..sw].iter_mut().zip(&row[x0 as usize..x0 as usize + sw]) {
                *d = s.to_acc();
            }
        } else {
            for (i, d) in line[..sw].iter_mut().enumerate() {
                *d = row[(x0 + i as isize).clamp(0, pw - 1) as usize].to_acc();
            }
        }
        let lane = &mut lane[..w];
        lane.fill(P::Acc::default());
        for k in 0..T {
            let t = htaps[k];
            for (a, &s) in lane.iter_mut().zip(&line[k..k + w]) {
                *a = *a + t * s;
            }
        }
        for (d, &a) in tmp[j * w..(j + 1) * w].iter_mut().zip(lane.iter()) {
            *d = (a >> hs).to_i32();
        }
    }
    let rnd = 1 << (vs - 1);
    let mut acc = [0i32; MAX_BLOCK];
    for j in 0..h {
        let acc = &mut acc[..w];
        acc.fill(rnd);
        for k in 0..T {
            let t = vy[k];
            for (a, &s) in acc.iter_mut().zip(&tmp[(j + k) * w..(j + k + 1) * w]) {
                *a += t * s;
            }
        }
        for (o, &a) in out[j * w..(j + 1) * w].iter_mut().zip(acc.iter()) {
            *o = P::from_i32((a >> vs).clamp(0, max));
        }
    }
}

macro_rules! luma_entry {
    ($name:ident, $inner:ident) => {
        /// Luma prediction for the `w × h` block at `(bx, by)` displaced by the
        /// quarter-pel vector `(mvx, mvy)`.
        #[allow(clippy::too_many_arguments)]
        pub fn $name<P: Pixel>(
            src: PlaneRef<'_, P>,
            bx: usize,
            by: usize,
            mvx: i32,
            mvy: i32,
            w: usize,
            h: usize,
            bit_depth: u8,
            out: &mut [P],
        ) {
            let (ix, fx) = split_mv(mvx, 2);
            let (iy, fy) = split_mv(mvy, 2);
            let copy = fx == 0 && fy == 0;
            $inner::<P, 8>(
                src,
                bx as isize + ix,
                by as isize + iy,
                LUMA_TAPS[fx as usize],
                LUMA_TAPS[fy as usize],
                copy,
                w,
                h,
                bit_depth,
                out,
            );
        }
    };
}

macro_rules! chroma_entry {
    ($name:ident, $inner:ident) => {
        /// Chroma prediction: the luma quarter-pel vector read in eighth-pel
        /// chroma units, bilinear taps.
        #[allow(clippy::too_many_arguments)]
        pub fn $name<P: Pixel>(
            src: PlaneRef<'_, P>,
            bx: usize,
            by: usize,
            mvx: i32,
            mvy: i32,
            w: usize,
            h: usize,
            bit_depth: u8,
            out: &mut [P],
        ) {
            let (ix, fx) = split_mv(mvx, 3);
            let (iy, fy) = split_mv(mvy, 3);
            let copy = fx == 0 && fy == 0;
            $inner::<P, 2>(
                src,
                bx as isize + ix,
                by as isize + iy,
                chroma_taps(fx),
                chroma_taps(fy),
                copy,
                w,
                h,
                bit_depth,
                out,
            );
        }
    };
}

luma_entry!(interp_luma_scalar, interp_scalar);
luma_entry!(interp_luma_vector, interp_vector);
chroma_entry!(interp_chroma_scalar, interp_scalar);
chroma_entry!(interp_chroma_vector, interp_vector);

/// Copy the `w × h` block at `(bx + bvx, by + bvy)`; the source rectangle
/// must lie inside the picture.
#[allow(clippy::too_many_arguments)]
pub fn ibc_copy_scalar<P: Pixel>(src: &dyn RowSource<P>, bx: usize, by: usize, bvx: i32, bvy: i32, w: usize, h: usize, out: &mut [P]) {
    let (sx, sy) = ibc_origin(src, bx, by, bvx, bvy, w, h);
    for j in 0..h {
        for i in 0..w {
            out[j * w + i] = P::from_i32(src.sample(sx + i, sy + j));
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn ibc_copy_vector<P: Pixel>(src: &dyn RowSource<P>, bx: usize, by: usize, bvx: i32, bvy: i32, w: usize, h: usize, out: &mut [P]) {
    let (sx, sy) = ibc_origin(src, bx, by, bvx, bvy, w, h);
    for j in 0..h {
        out[j * w..(j + 1) * w].copy_from_slice(src.span(sy + j, sx, sx + w));
    }
}

fn ibc_origin<P: Pixel>(src: &dyn RowSource<P>, bx: usize, by: usize, bvx: i32, bvy: i32, w: usize, h: usize) -> (usize, usize) {
    let sx = bx as isize + bvx as isize;
    let sy = by as isize + bvy as isize;
    assert!(
        sx >= 0 && sy >= 0 && sx as usize + w <= src.width() && sy as usize + h <= src.height(),
        "block vector leaves the picture"
    );
    (sx as usize, sy as usize)
}
