//! Deblocking: edge strength derivation and the normal filter applied to
//! vertical and horizontal edges.

use std::ops::Range;

use super::pixel::{max_sample, Acc, Pixel, PlaneMut};

/// Thresholds for a picture QP at the given bit depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeblockParams {
    pub beta: i32,
    pub tc: i32,
    pub bit_depth: u8,
}

impl DeblockParams {
    pub fn new(qp: u8, bit_depth: u8) -> Self {
        let qp = qp as i32;
        let sh = bit_depth as u32 - 8;
        Self { beta: (2 * (qp - 16)).max(0) << sh, tc: ((qp - 10) >> 2).max(1) << sh, bit_depth }
    }
}

/// Side information of one block adjacent to an edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeSide {
    /// Intra, IBC or BDPCM coded.
    pub intra_like: bool,
    /// Nonzero coded residual in the plane being filtered.
    pub cbf: bool,
    pub mv: (i32, i32),
}

pub fn boundary_strength(p: EdgeSide, q: EdgeSide) -> u8 {
    if p.intra_like || q.intra_like {
        2
    } else if p.cbf || q.cbf || (p.mv.0 - q.mv.0).abs() >= 4 || (p.mv.1 - q.mv.1).abs() >= 4 {
        1
    } else {
        0
    }
}

/// Boundary strengths on an edge lattice. For vertical edges `unit_x` is the
/// edge spacing and `unit_y` the segment length; for horizontal edges the
/// roles swap. Entry `(i, j)` covers the edge segment starting at
/// `(i * unit_x, j * unit_y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeGrid {
    pub unit_x: usize,
    pub unit_y: usize,
    pub cols: usize,
    pub rows: usize,
    pub bs: Vec<u8>,
}

impl EdgeGrid {
    pub fn new(width: usize, height: usize, unit_x: usize, unit_y: usize) -> Self {
        let cols = width.div_ceil(unit_x);
        let rows = height.div_ceil(unit_y);
        Self { unit_x, unit_y, cols, rows, bs: vec![0; cols * rows] }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.bs[(y / self.unit_y) * self.cols + x / self.unit_x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        let i = (y / self.unit_y) * self.cols + x / self.unit_x;
        self.bs[i] = v;
    }

    pub fn clear(&mut self) {
        self.bs.fill(0);
    }
}

#[inline(always)]
fn filter4(p1: i32, p0: i32, q0: i32, q1: i32, prm: &DeblockParams, max: i32) -> (i32, i32) {
    if (p0 - q0).abs() >= prm.beta {
        return (p0, q0);
    }
    let d = (((q0 - p0) * 4 + (p1 - q1) + 4) >> 3).clamp(-prm.tc, prm.tc);
    ((p0 + d).clamp(0, max), (q0 - d).clamp(0, max))
}

/// Filter every vertical edge (`x > 0`, multiple of `grid.unit_x`) on `rows`.
pub fn deblock_vertical_scalar<P: Pixel>(buf: &mut PlaneMut<'_, P>, rows: Range<usize>, grid: &EdgeGrid, prm: &DeblockParams) {
    let max = max_sample(prm.bit_depth);
    let w = buf.width;
    for y in rows {
        for x in (grid.unit_x..w).step_by(grid.unit_x) {
            if grid.at(x, y) == 0 {
                continue;
            }
            let (p1, p0, q0, q1) = (buf.get(x - 2, y), buf.get(x - 1, y), buf.get(x, y), buf.get(x + 1, y));
            let (np0, nq0) = filter4(p1, p0, q0, q1, prm, max);
            buf.set(x - 1, y, np0);
            buf.set(x, y, nq0);
        }
    }
}

/// Filter the horizontal edges whose row index lies in `edges` (`y > 0`,
/// multiple of `grid.unit_y`). Rows `y-2..y+2` must be inside `buf`.
pub fn deblock_horizontal_scalar<P: Pixel>(buf: &mut PlaneMut<'_, P>, edges: Range<usize>, grid: &EdgeGrid, prm: &DeblockParams) {
    let max = max_sample(prm.bit_depth);
    let w = buf.width;
    for y in edges {
        if y == 0 || y % grid.unit_y != 0 || y >= buf.height {
            continue;
        }
        for x in 0..w {
            if grid.at(x, y) == 0 {
                continue;
            }
            let (p1, p0, q0, q1) = (buf.get(x, y - 2), buf.get(x, y - 1), buf.get(x, y), buf.get(x, y + 1));
            let (np0, nq0) = filter4(p1, p0, q0, q1, prm, max);
            buf.set(x, y - 1, np0);
            buf.set(x, y, nq0);
        }
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn filter_lanes<A: Acc>(p1: &[A], p0: &mut [A], q0: &mut [A], q1: &[A], on: &[bool], beta: A, tc: A, max: A) {
    let zero = A::default();
    let four = A::from_i32(4);
    let n = p0.len();
    let (p1, q0, q1, on) = (&p1[..n], &mut q0[..n], &q1[..n], &on[..n]);
    for i in 0..n {
        let (a, b) = (p0[i], q0[i]);
        let diff = if a > b { a - b } else { b - a };
        let d = (((b - a) * four + (p1[i] - q1[i]) + four) >> 3).clamp(zero - tc, tc);
        let live = on[i] && diff < beta;
        let d = if live { d } else { zero };
        p0[i] = (a + d).clamp(zero, max);
        q0[i] = (b - d).clamp(zero, max);
    }
}

/// Lane-parallel vertical edges: lanes run across the edges of one row.
pub fn deblock_vertical_vector<P: Pixel>(buf: &mut PlaneMut<'_, P>, rows: Range<usize>, grid: &EdgeGrid, prm: &DeblockParams) {
    let w = buf.width;
    let n = (w - 1) / grid.unit_x;
    if n == 0 {
        return;
    }
    let (beta, tc, max) = (P::Acc::from_i32(prm.beta), P::Acc::from_i32(prm.tc), P::Acc::from_i32(max_sample(prm.bit_depth)));
    let mut p1 = vec![P::Acc::default(); n];
    let mut p0 = p1.clone();
    let mut q0 = p1.clone();
    let mut q1 = p1.clone();
    let mut on = vec![false; n];
    let u = grid.unit_x;
    for y in rows {
        let row = buf.row_mut(y);
        let gy = (y / grid.unit_y) * grid.cols;
        let mut any = false;
        for i in 0..n {
            let x = (i + 1) * u;
            p1[i] = row[x - 2].to_acc();
            p0[i] = row[x - 1].to_acc();
            q0[i] = row[x].to_acc();
            q1[i] = row[x + 1].to_acc();
            on[i] = grid.bs[gy + i + 1] != 0;
            any |= on[i];
        }
        if !any {
            continue;
        }
        filter_lanes(&p1[..n], &mut p0[..n], &mut q0[..n], &q1[..n], &on[..n], beta, tc, max);
        for i in 0..n {
            let x = (i + 1) * u;
            row[x - 1] = P::from_acc(p0[i]);
            row[x] = P::from_acc(q0[i]);
        }
    }
}

/// Lane-parallel horizontal edges: lanes run along the edge.
pub fn deblock_horizontal_vector<P: Pixel>(buf: &mut PlaneMut<'_, P>, edges: Range<usize>, grid: &EdgeGrid, prm: &DeblockParams) {
    let w = buf.width;
    let (beta, tc, max) = (P::Acc::from_i32(prm.beta), P::Acc::from_i32(prm.tc), P::Acc::from_i32(max_sample(prm.bit_depth)));
    let mut p1 = vec![P::Acc::default(); w];
    let mut p0 = p1.clone();
    let mut q0 = p1.clone();
    let mut q1 = p1.clone();
    let mut on = vec![false; w];
    for y in edges {
        if y == 0 || y % grid.unit_y != 0 || y >= buf.height {
            continue;
        }
        let gy = (y / grid.unit_y) * grid.cols;
        let mut any = false;
        for x in 0..w {
            on[x] = grid.bs[gy + x / grid.unit_x] != 0;
            any |= on[x];
        }
        if !any {
            continue;
        }
        for (d, s) in p1[..w].iter_mut().zip(buf.row(y - 2)) {
            *d = s.to_acc();
        }
        for (d, s) in q1[..w].iter_mut().zip(buf.row(y + 1)) {
            *d = s.to_acc();
        }
        for (d, s) in p0[..w].iter_mut().zip(buf.row(y - 1)) {
            *d = s.to_acc();
        }
        for (d, s) in q0[..w].iter_mut().zip(buf.row(y)) {
            *d = s.to_acc();
        }
        filter_lanes(&p1[..w], &mut p0[..w], &mut q0[..w], &q1[..w], &on[..w], beta, tc, max);
        for (d, &s) in buf.row_mut(y - 1).iter_mut().zip(&p0[..w]) {
            *d = P::from_acc(s);
        }
        for (d, &s) in buf.row_mut(y).iter_mut().zip(&q0[..w]) {
            *d = P::from_acc(s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::pixel::Plane;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full_grid(w: usize, h: usize, ux: usize, uy: usize, v: u8) -> EdgeGrid {
        let mut g = EdgeGrid::new(w, h, ux, uy);
        g.bs.fill(v);
        g
    }

    #[test]
    fn thresholds() {
        assert_eq!(DeblockParams::new(32, 8), DeblockParams { beta: 32, tc: 5, bit_depth: 8 });
        assert_eq!(DeblockParams::new(10, 10), DeblockParams { beta: 0, tc: 4, bit_depth: 10 });
    }

    #[test]
    fn strength_rules() {
        let inter = EdgeSide::default();
        let intra = EdgeSide { intra_like: true, ..inter };
        let coded = EdgeSide { cbf: true, ..inter };
        let moved = EdgeSide { mv: (0, -4), ..inter };
        let nudged = EdgeSide { mv: (3, 3), ..inter };
        assert_eq!(boundary_strength(intra, inter), 2);
        assert_eq!(boundary_strength(inter, coded), 1);
        assert_eq!(boundary_strength(inter, moved), 1);
        assert_eq!(boundary_strength(inter, nudged), 0);
    }

    #[test]
    fn flat_region_unchanged() {
        let mut p = Plane::<u8>::filled(32, 16, 8, 100);
        let g = full_grid(32, 16, 4, 4, 2);
        let prm = DeblockParams::new(40, 8);
        let before = p.clone();
        deblock_vertical_vector(&mut p.view_mut(), 0..16, &g, &prm);
        deblock_horizontal_vector(&mut p.view_mut(), 0..16, &g, &prm);
        assert!(p == before);
    }

    #[test]
    fn zero_strength_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<u16> = (0..32 * 16).map(|_| rng.random_range(0..256)).collect();
        let mut p = Plane::<u8>::from_samples(32, 16, 8, &s);
        let before = p.clone();
        let g = full_grid(32, 16, 4, 4, 0);
        let prm = DeblockParams::new(50, 8);
        deblock_vertical_scalar(&mut p.view_mut(), 0..16, &g, &prm);
        deblock_horizontal_scalar(&mut p.view_mut(), 0..16, &g, &prm);
        assert!(p == before);
    }

    #[test]
    fn step_edge_hand_example() {
        // p = 90 | q = 110 at qp 40: delta = (20*4 + 0 + 4) >> 3 = 10, tc = 7.
        let mut p = Plane::<u8>::new(16, 8, 8);
        for y in 0..8 {
            for x in 0..16 {
                p.set(x, y, if x < 8 { 90 } else { 110 });
            }
        }
        let mut g = EdgeGrid::new(16, 8, 8, 4);
        g.set(8, 0, 1);
        deblock_vertical_scalar(&mut p.view_mut(), 0..8, &g, &DeblockParams::new(40, 8));
        assert_eq!(&p.row(0)[6..10], &[90, 97, 103, 110]);
        assert_eq!(&p.row(4)[6..10], &[90, 90, 110, 110]);
    }

    fn check_random<P: Pixel>(bd: u8, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..300 {
            let (w, h) = (8 * rng.random_range(2..12), 8 * rng.random_range(2..6));
            let base = rng.random_range(0..(1 << bd));
            let s: Vec<u16> = (0..w * h)
                .map(|_| (base + rng.random_range(-20..=20i32)).clamp(0, (1 << bd) - 1) as u16)
                .collect();
            let (ux, seg) = if rng.random() { (4, 4) } else { (8, 4) };
            let mut vg = EdgeGrid::new(w, h, ux, seg);
            let mut hg = EdgeGrid::new(w, h, seg, ux);
            for b in vg.bs.iter_mut().chain(hg.bs.iter_mut()) {
                *b = rng.random_range(0..3);
            }
            let prm = DeblockParams::new(rng.random_range(0..64), bd);
            let mut a = Plane::<P>::from_samples(w, h, bd, &s);
            let mut b = a.clone();
            deblock_vertical_scalar(&mut a.view_mut(), 0..h, &vg, &prm);
            deblock_horizontal_scalar(&mut a.view_mut(), 0..h, &hg, &prm);
            deblock_vertical_vector(&mut b.view_mut(), 0..h, &vg, &prm);
            deblock_horizontal_vector(&mut b.view_mut(), 0..h, &hg, &prm);
            assert!(a == b);
            assert!(a.in_range());
        }
    }

    #[test]
    fn random_scalar_matches_vector() {
        check_random::<u8>(8, 1);
        check_random::<u16>(8, 2);
        check_random::<u16>(10, 3);
    }
}
