//! Luma ALF (5×5 diamond, linear) and cross-component ALF.

use super::pixel::{max_sample, Acc, Pixel, PlaneMut, PlaneRef};
use super::sao::Rect;

/// `(dy, dx)` of one member of each symmetric ALF tap pair; the partner is
/// the negation.
pub const ALF_PAIRS: [(isize, isize); 6] = [(-2, 0), (-1, -1), (-1, 0), (-1, 1), (0, -2), (0, -1)];

/// `(dy, dx)` luma offsets of the CCALF taps relative to the collocated
/// luma sample `(2x, 2y)`.
pub const CCALF_TAPS: [(isize, isize); 8] = [(-1, 0), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1), (2, 0), (-1, -1)];

pub fn alf_center(c: &[i16; 6]) -> i32 {
    128 - 2 * c.iter().map(|&v| v as i32).sum::<i32>()
}

pub fn alf_apply_scalar<P: Pixel>(src: PlaneRef<'_, P>, dst: &mut PlaneMut<'_, P>, rect: Rect, coeffs: &[i16; 6], bit_depth: u8) {
    let max = max_sample(bit_depth);
    let center = alf_center(coeffs);
    for y in rect.y0..rect.y1 {
        for x in rect.x0..rect.x1 {
            let (xi, yi) = (x as isize, y as isize);
            let mut s = center * src.get(x, y);
            for (k, &(dy, dx)) in ALF_PAIRS.iter().enumerate() {
                let a = src.get_clamped(xi + dx, yi + dy);
                let b = src.get_clamped(xi - dx, yi - dy);
                s += coeffs[k] as i32 * (a + b);
            }
            dst.set(x, y, ((s + 64) >> 7).clamp(0, max));
        }
    }
}

const PAD: usize = 2;

/// Row `y` of `src`, columns `x0 - PAD .. x0 + n + PAD` edge-clamped, as i32.
fn load_padded<P: Pixel>(src: PlaneRef<'_, P>, y: usize, x0: usize, n: usize, buf: &mut [i32]) {
    let row = src.row(y);
    let w = src.width;
    for (d, s) in buf[PAD..PAD + n].iter_mut().zip(&row[x0..x0 + n]) {
        *d = s.to_i32();
    }
    for i in 0..PAD {
        buf[i] = row[(x0 + i).saturating_sub(PAD)].to_i32();
        buf[PAD + n + i] = row[(x0 + n + i).min(w - 1)].to_i32();
    }
}

/// Lane-parallel ALF in 32-bit lanes. The five source rows around each
/// output row live in an edge-padded ring, each loaded once.
pub fn alf_apply_vector<P: Pixel>(src: PlaneRef<'_, P>, dst: &mut PlaneMut<'_, P>, rect: Rect, coeffs: &[i16; 6], bit_depth: u8) {
    if rect.is_empty() {
        return;
    }
    let n = rect.x1 - rect.x0;
    let max = max_sample(bit_depth);
    let center = alf_center(coeffs);
    let c: [i32; 6] = coeffs.map(|v| v as i32);
    let h = src.height as isize;
    let slot = |y: isize| y.rem_euclid(5) as usize;
    let mut ring: Vec<Vec<i32>> = (0..5).map(|_| vec![0; n + 2 * PAD]).collect();
    let (y0, y1) = (rect.y0 as isize, rect.y1 as isize);
    for y in y0 - 2..y0 + 2 {
        load_padded(src, y.clamp(0, h - 1) as usize, rect.x0, n, &mut ring[slot(y)]);
    }
    let mut acc = vec![0i32; n];
    for y in y0..y1 {
        load_padded(src, (y + 2).clamp(0, h - 1) as usize, rect.x0, n, &mut ring[slot(y + 2)]);
        for (a, &m) in acc.iter_mut().zip(&ring[slot(y)][PAD..PAD + n]) {
            *a = center * m + 64;
        }
        for (k, &(dy, dx)) in ALF_PAIRS.iter().enumerate() {
            let oa = (PAD as isize + dx) as usize;
            let ob = (PAD as isize - dx) as usize;
            let ra = &ring[slot(y + dy)][oa..oa + n];
            let rb = &ring[slot(y - dy)][ob..ob + n];
            let ck = c[k];
            for ((a, &p), &q) in acc.iter_mut().zip(ra).zip(rb) {
                *a += ck * (p + q);
            }
        }
        for (o, &a) in dst.row_mut(y as usize)[rect.x0..rect.x1].iter_mut().zip(&acc) {
            *o = P::from_i32((a >> 7).clamp(0, max));
        }
    }
}

/// Chroma refinement from luma: scalar reference with 32-bit accumulation.
pub fn ccalf_apply_scalar<P: Pixel>(
    chroma: PlaneRef<'_, P>,
    luma: PlaneRef<'_, P>,
    dst: &mut PlaneMut<'_, P>,
    rect: Rect,
    coeffs: &[i8; 8],
    bit_depth: u8,
) {
    let max = max_sample(bit_depth);
    for y in rect.y0..rect.y1 {
        for x in rect.x0..rect.x1 {
            let (lx, ly) = (2 * x as isize, 2 * y as isize);
            let lc = luma.get_clamped(lx, ly);
            let mut s = 0i32;
            for (k, &(dy, dx)) in CCALF_TAPS.iter().enumerate() {
                s += coeffs[k] as i32 * (luma.get_clamped(lx + dx, ly + dy) - lc);
            }
            let d = (s + 32) >> 6;
            dst.set(x, y, (chroma.get(x, y) + d).clamp(0, max));
        }
    }
}

/// Luma row split into the columns left of each collocated sample
/// (`even[i]` = column `2(x0 + i) - 1`, `i <= n`) and the collocated ones
/// (`odd[i]` = column `2(x0 + i)`), edge-clamped.
fn load_split<P: Pixel>(row: &[P], x0: usize, n: usize, even: &mut [P::Acc], odd: &mut [P::Acc]) {
    let lw = row.len();
    let at = |x: isize| row[x.clamp(0, lw as isize - 1) as usize].to_acc();
    // Both columns of pair i are in range for lo <= i < hi.
    let lo = usize::from(x0 == 0).min(n);
    let hi = lw.div_ceil(2).saturating_sub(x0).clamp(lo, n);
    if hi > lo {
        let base = &row[2 * (x0 + lo) - 1..2 * (x0 + hi)];
        for ((e, o), pair) in even[lo..hi].iter_mut().zip(&mut odd[lo..hi]).zip(base.chunks_exact(2)) {
            *e = pair[0].to_acc();
            *o = pair[1].to_acc();
        }
    }
    for i in (0..lo).chain(hi..n) {
        even[i] = at(2 * (x0 + i) as isize - 1);
        odd[i] = at(2 * (x0 + i) as isize);
    }
    even[n] = at(2 * (x0 + n) as isize - 1);
}

/// Lane-parallel CCALF accumulating in the path's accumulator type: 16-bit
/// on the 8-bit path (exact because the coefficient magnitudes sum to at
/// most 128), 32-bit on the 16-bit path.
pub fn ccalf_apply_vector<P: Pixel>(
    chroma: PlaneRef<'_, P>,
    luma: PlaneRef<'_, P>,
    dst: &mut PlaneMut<'_, P>,
    rect: Rect,
    coeffs: &[i8; 8],
    bit_depth: u8,
) {
    if rect.is_empty() {
        return;
    }
    let n = rect.x1 - rect.x0;
    let zero = P::Acc::default();
    let max = P::Acc::from_i32(max_sample(bit_depth));
    let c: [P::Acc; 8] = coeffs.map(|v| P::Acc::from_i32(v as i32));
    let lh = luma.height as isize;
    // Luma rows 2y-1 ..= 2y+2.
    let mut even = vec![vec![zero; n + 1]; 4];
    let mut odd = vec![vec![zero; n]; 4];
    let mut acc = vec![zero; n];
    let half = P::Acc::from_i32(32);
    for y in rect.y0..rect.y1 {
        for k in 0..4 {
            let ly = (2 * y as isize + k as isize - 1).clamp(0, lh - 1) as usize;
            load_split(luma.row(ly), rect.x0, n, &mut even[k], &mut odd[k]);
        }
        acc.fill(zero);
        let center = &odd[1];
        for (k, &(dy, dx)) in CCALF_TAPS.iter().enumerate() {
            let r = (dy + 1) as usize;
            let tap: &[P::Acc] = match dx {
                -1 => &even[r][..n],
                0 => &odd[r][..n],
                _ => &even[r][1..n + 1],
            };
            let ck = c[k];
            for ((a, &t), &m) in acc.iter_mut().zip(tap).zip(center) {
                *a = *a + ck * (t - m);
            }
        }
        let src = &chroma.row(y)[rect.x0..rect.x1];
        for ((o, s), &a) in dst.row_mut(y)[rect.x0..rect.x1].iter_mut().zip(src).zip(&acc) {
            let d = (a + half) >> 6;
            *o = P::from_acc((s.to_acc() + d).clamp(zero, max));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::pixel::Plane;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_plane<P: Pixel>(rng: &mut ChaCha8Rng, w: usize, h: usize, bd: u8) -> Plane<P> {
        let s: Vec<u16> = (0..w * h).map(|_| rng.random_range(0..(1u16 << bd))).collect();
        Plane::from_samples(w, h, bd, &s)
    }

    fn random_rect(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Rect {
        let x0 = rng.random_range(0..w - 1);
        let y0 = rng.random_range(0..h - 1);
        Rect::new(x0, y0, rng.random_range(x0 + 1..=w), rng.random_range(y0 + 1..=h))
    }

    /// A coefficient set with `Σ|c| <= 128`.
    pub(crate) fn random_ccalf(rng: &mut ChaCha8Rng) -> [i8; 8] {
        let mut c = [0i8; 8];
        let mut budget = 128i32;
        for v in c.iter_mut() {
            let m = rng.random_range(0..=budget.min(127));
            budget -= m;
            *v = if rng.random() { m as i8 } else { -(m as i8) };
        }
        c
    }

    #[test]
    fn zero_coeffs_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let src: Plane<u8> = random_plane(&mut rng, 32, 16, 8);
        let mut dst = Plane::<u8>::new(32, 16, 8);
        let all = Rect::new(0, 0, 32, 16);
        alf_apply_vector(src.view(), &mut dst.view_mut(), all, &[0; 6], 8);
        assert!(src == dst);
        let chroma: Plane<u8> = random_plane(&mut rng, 16, 8, 8);
        let mut out = Plane::<u8>::new(16, 8, 8);
        ccalf_apply_vector(chroma.view(), src.view(), &mut out.view_mut(), Rect::new(0, 0, 16, 8), &[0; 8], 8);
        assert!(chroma == out);
    }

    #[test]
    fn constant_planes_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let src = Plane::<u16>::filled(24, 24, 10, 700);
        for _ in 0..50 {
            let c: [i16; 6] = std::array::from_fn(|_| rng.random_range(-30..30));
            let mut dst = Plane::<u16>::new(24, 24, 10);
            alf_apply_scalar(src.view(), &mut dst.view_mut(), Rect::new(0, 0, 24, 24), &c, 10);
            assert!(dst == src);
            let chroma: Plane<u16> = random_plane(&mut rng, 12, 12, 10);
            let mut out = Plane::<u16>::new(12, 12, 10);
            ccalf_apply_scalar(chroma.view(), src.view(), &mut out.view_mut(), Rect::new(0, 0, 12, 12), &random_ccalf(&mut rng), 10);
            assert!(out == chroma);
        }
    }

    #[test]
    fn alf_hand_example() {
        // Single bright sample 200 on 0; c5 (horizontal neighbours) = 16:
        // neighbour output = (16 * 200 + 64) >> 7 = 25, centre = (96 * 200 + 64) >> 7 = 150.
        let mut src = Plane::<u8>::new(16, 16, 8);
        src.set(8, 8, 200);
        let mut dst = Plane::<u8>::new(16, 16, 8);
        alf_apply_scalar(src.view(), &mut dst.view_mut(), Rect::new(0, 0, 16, 16), &[0, 0, 0, 0, 0, 16], 8);
        assert_eq!((dst.get(7, 8), dst.get(8, 8), dst.get(9, 8), dst.get(8, 7)), (25, 150, 25, 0));
    }

    fn check_alf<P: Pixel>(bd: u8, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..300 {
            let (w, h) = (8 * rng.random_range(1..10), 8 * rng.random_range(1..8));
            let src: Plane<P> = random_plane(&mut rng, w, h, bd);
            let c: [i16; 6] = std::array::from_fn(|_| rng.random_range(-64..64));
            let rect = random_rect(&mut rng, w, h);
            let mut a = Plane::<P>::new(w, h, bd);
            let mut b = Plane::<P>::new(w, h, bd);
            alf_apply_scalar(src.view(), &mut a.view_mut(), rect, &c, bd);
            alf_apply_vector(src.view(), &mut b.view_mut(), rect, &c, bd);
            assert!(a == b);
        }
    }

    #[test]
    fn alf_scalar_matches_vector() {
        check_alf::<u8>(8, 3);
        check_alf::<u16>(8, 4);
        check_alf::<u16>(10, 5);
    }

    fn check_ccalf<P: Pixel>(bd: u8, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..300 {
            let (w, h) = (4 * rng.random_range(1..12), 4 * rng.random_range(1..10));
            let luma: Plane<P> = random_plane(&mut rng, 2 * w, 2 * h, bd);
            let chroma: Plane<P> = random_plane(&mut rng, w, h, bd);
            let c = random_ccalf(&mut rng);
            let rect = random_rect(&mut rng, w, h);
            let mut a = Plane::<P>::new(w, h, bd);
            let mut b = Plane::<P>::new(w, h, bd);
            ccalf_apply_scalar(chroma.view(), luma.view(), &mut a.view_mut(), rect, &c, bd);
            ccalf_apply_vector(chroma.view(), luma.view(), &mut b.view_mut(), rect, &c, bd);
            assert!(a == b);
        }
    }

    #[test]
    fn ccalf_narrow_accumulator_matches_wide_oracle() {
        // u8 vector uses i16 lanes; the scalar reference accumulates in i32.
        check_ccalf::<u8>(8, 6);
        check_ccalf::<u16>(8, 7);
        check_ccalf::<u16>(10, 8);
    }
}
