use super::scan::morton;
use super::{MotionField, PicParams, CELL};

/// Median-style predictor from the left, above and above-right 8×8 cells.
pub fn derive_mvp(mf: &MotionField, x: usize, y: usize, size: usize) -> (i32, i32) {
    let (x, y, s) = (x as isize, y as isize, size as isize);
    let cands: Vec<(i32, i32)> = [mf.at(x - 1, y), mf.at(x, y - 1), mf.at(x + s, y - 1)].into_iter().flatten().collect();
    match cands.as_slice() {
        [] => (0, 0),
        [a] => *a,
        [a, b] => ((a.0 + b.0) / 2, (a.1 + b.1) / 2),
        [a, b, c] => (median(a.0, b.0, c.0), median(a.1, b.1, c.1)),
        _ => unreachable!(),
    }
}

fn median(a: i32, b: i32, c: i32) -> i32 {
    a.max(b).min(a.min(b).max(c))
}

/// True when CTU `(r2, c2)` is reconstructed before CTU `(r, c)` starts, in
/// every schedule allowed by the wavefront dependencies.
pub fn wavefront_precedes(r2: usize, c2: usize, r: usize, c: usize, cols: usize) -> bool {
    if r2 == r {
        c2 < c
    } else {
        r2 < r && c2 <= (c + (r - r2)).min(cols - 1)
    }
}

/// Whether luma sample `(sx, sy)` is reconstructed before the CU whose
/// top-left corner is `(cx, cy)` begins: inside the picture and either in a
/// wavefront-preceding CTU or in an earlier quadtree position of the same CTU.
pub fn sample_available(pp: &PicParams, sx: isize, sy: isize, cx: usize, cy: usize) -> bool {
    if sx < 0 || sy < 0 || sx as usize >= pp.width || sy as usize >= pp.height {
        return false;
    }
    let (sx, sy) = (sx as usize, sy as usize);
    let l = pp.log2_ctu;
    let (r2, c2, r, c) = (sy >> l, sx >> l, cy >> l, cx >> l);
    if (r2, c2) != (r, c) {
        return wavefront_precedes(r2, c2, r, c, pp.ctu_cols());
    }
    let mask = pp.ctu_size() - 1;
    morton((sx & mask) / CELL, (sy & mask) / CELL) < morton((cx & mask) / CELL, (cy & mask) / CELL)
}

/// Block-vector validity for the `size × size` CU at `(x, y)`.
pub fn validate_bv(pp: &PicParams, bv: (i32, i32), x: usize, y: usize, size: usize) -> bool {
    if pp.chroma && (bv.0 % 2 != 0 || bv.1 % 2 != 0) {
        return false;
    }
    let sx = x as i64 + bv.0 as i64;
    let sy = y as i64 + bv.1 as i64;
    let s = size as i64;
    if sx < 0 || sy < 0 || sx + s > pp.width as i64 || sy + s > pp.height as i64 {
        return false;
    }
    let (cx0, cy0) = (sx as usize / CELL, sy as usize / CELL);
    let (cx1, cy1) = ((sx + s - 1) as usize / CELL, (sy + s - 1) as usize / CELL);
    (cy0..=cy1).all(|cy| (cx0..=cx1).all(|cx| sample_available(pp, (cx * CELL) as isize, (cy * CELL) as isize, x, y)))
}
