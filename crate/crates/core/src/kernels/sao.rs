//! Sample adaptive offset (band and edge modes).

use super::pixel::{max_sample, Acc, Pixel, PlaneMut, PlaneRef};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SaoMode {
    #[default]
    Off,
    /// Offsets apply to bands `start..start + 4`, `start <= 28`.
    Band { start: u8 },
    /// 0: horizontal, 1: vertical, 2: 135 degrees, 3: 45 degrees.
    Edge { class: u8 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SaoParams {
    pub mode: SaoMode,
    pub offsets: [i8; 4],
}

pub const SAO_MAX_OFFSET: i8 = 31;
pub const SAO_MAX_BAND_START: u8 = 28;

/// `(dx, dy)` of the two neighbours per edge class.
pub const EDGE_NEIGHBOURS: [[(isize, isize); 2]; 4] = [
    [(-1, 0), (1, 0)],
    [(0, -1), (0, 1)],
    [(-1, -1), (1, 1)],
    [(1, -1), (-1, 1)],
];

/// Category 1..=4 for local minimum .. local maximum, 0 otherwise.
#[inline]
pub fn edge_category(c: i32, a: i32, b: i32) -> usize {
    match (c - a).signum() + (c - b).signum() {
        -2 => 1,
        -1 => 2,
        1 => 3,
        2 => 4,
        _ => 0,
    }
}

impl SaoParams {
    pub fn is_valid(&self) -> bool {
        let ok_off = self.offsets.iter().all(|o| o.unsigned_abs() <= SAO_MAX_OFFSET as u8);
        match self.mode {
            SaoMode::Off => self.offsets == [0; 4],
            SaoMode::Band { start } => ok_off && start <= SAO_MAX_BAND_START,
            SaoMode::Edge { class } => ok_off && class < 4,
        }
    }
}

/// Rectangle `[x0, x1) × [y0, y1)` in plane coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }
}

pub(crate) fn copy_rect<P: Pixel>(src: PlaneRef<'_, P>, dst: &mut PlaneMut<'_, P>, r: Rect) {
    for y in r.y0..r.y1 {
        dst.row_mut(y)[r.x0..r.x1].copy_from_slice(&src.row(y)[r.x0..r.x1]);
    }
}

/// Apply SAO to `rect`, reading deblocked samples from `src` (which must
/// include one row above and below the rectangle, where they exist) and
/// writing to `dst`.
pub fn sao_apply_scalar<P: Pixel>(src: PlaneRef<'_, P>, dst: &mut PlaneMut<'_, P>, rect: Rect, prm: &SaoParams, bit_depth: u8) {
    let max = max_sample(bit_depth);
    let (w, h) = (src.width as isize, src.height as isize);
    for y in rect.y0..rect.y1 {
        for x in rect.x0..rect.x1 {
            let c = src.get(x, y);
            let v = match prm.mode {
                SaoMode::Off => c,
                SaoMode::Band { start } => {
                    let k = (c >> (bit_depth - 5)) - start as i32;
                    if (0..4).contains(&k) {
                        c + prm.offsets[k as usize] as i32
                    } else {
                        c
                    }
                }
                SaoMode::Edge { class } => {
                    let [(ax, ay), (bx, by)] = EDGE_NEIGHBOURS[class as usize];
                    let (xa, ya, xb, yb) = (x as isize + ax, y as isize + ay, x as isize + bx, y as isize + by);
                    let inside = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h;
                    if !inside(xa, ya) || !inside(xb, yb) {
                        c
                    } else {
                        let cat = edge_category(c, src.get(xa as usize, ya as usize), src.get(xb as usize, yb as usize));
                        if cat == 0 {
                            c
                        } else {
                            c + prm.offsets[cat - 1] as i32
                        }
                    }
                }
            };
            dst.set(x, y, v.clamp(0, max));
        }
    }
}

const ROW_LANES: usize = 8192;

/// Lane-parallel SAO over rows of the rectangle, in the path's accumulator
/// lanes.
pub fn sao_apply_vector<P: Pixel>(src: PlaneRef<'_, P>, dst: &mut PlaneMut<'_, P>, rect: Rect, prm: &SaoParams, bit_depth: u8) {
    if rect.is_empty() {
        return;
    }
    let n = rect.x1 - rect.x0;
    assert!(n <= ROW_LANES);
    let zero = P::Acc::default();
    let max = P::Acc::from_i32(max_sample(bit_depth));
    match prm.mode {
        SaoMode::Off => copy_rect(src, dst, rect),
        SaoMode::Band { start } => {
            let mut table = [zero; 32];
            for k in 0..4 {
                table[start as usize + k] = P::Acc::from_i32(prm.offsets[k] as i32);
            }
            let sh = bit_depth as u32 - 5;
            for y in rect.y0..rect.y1 {
                let s = &src.row(y)[rect.x0..rect.x1];
                let d = &mut dst.row_mut(y)[rect.x0..rect.x1];
                for (o, &v) in d.iter_mut().zip(s) {
                    let c = v.to_acc();
                    *o = P::from_acc((c + table[(v.to_i32() >> sh) as usize]).clamp(zero, max));
                }
            }
        }
        SaoMode::Edge { class } => {
            let [(ax, ay), (bx, by)] = EDGE_NEIGHBOURS[class as usize];
            let o = prm.offsets;
            let table: [P::Acc; 5] = [o[0] as i32, o[1] as i32, 0, o[2] as i32, o[3] as i32].map(P::Acc::from_i32);
            let (w, h) = (src.width, src.height);
            // Columns and rows whose neighbours fall outside the picture stay unfiltered.
            let xs = rect.x0.max(if ax != 0 { 1 } else { 0 });
            let xe = rect.x1.min(if ax != 0 { w - 1 } else { w });
            let ys = rect.y0.max(if ay != 0 || by != 0 { 1 } else { 0 });
            let ye = rect.y1.min(if ay != 0 || by != 0 { h - 1 } else { h });
            let mut lane = [zero; ROW_LANES];
            for y in rect.y0..rect.y1 {
                let cur = src.row(y);
                let d = &mut dst.row_mut(y)[rect.x0..rect.x1];
                d.copy_from_slice(&cur[rect.x0..rect.x1]);
                if y < ys || y >= ye || xs >= xe {
                    continue;
                }
                let ra = src.row((y as isize + ay) as usize);
                let rb = src.row((y as isize + by) as usize);
                let m = xe - xs;
                let ca = &cur[xs..xe];
                let na = &ra[(xs as isize + ax) as usize..(xe as isize + ax) as usize];
                let nb = &rb[(xs as isize + bx) as usize..(xe as isize + bx) as usize];
                for i in 0..m {
                    let c = ca[i].to_acc();
                    let (a, b) = (na[i].to_acc(), nb[i].to_acc());
                    let s = (c > a) as usize + (c > b) as usize + 2 - (c < a) as usize - (c < b) as usize;
                    lane[i] = (c + table[s]).clamp(zero, max);
                }
                for (o, &v) in d[xs - rect.x0..xe - rect.x0].iter_mut().zip(&lane[..m]) {
                    *o = P::from_acc(v);
                }
            }
        }
    }
}
