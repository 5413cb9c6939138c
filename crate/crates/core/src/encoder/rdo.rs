//! Quadtree mode decision.

use crate::bitio::PicType;
use crate::kernels::intra::{BdpcmDir, IntraMode};
use crate::kernels::transform::{dequant_level, forward_transform, quant, quant_step, TransformKind, QUANT_SCALE};
use crate::kernels::{Kernels, Plane, PlaneRef};
use crate::pipeline::profile::Profiler;
use crate::pipeline::recon::{commit, predict, reconstruct, PicInfo, PicPlanes, Scratch};
use crate::syntax::{derive_mvp, validate_bv, CuMode, MotionField, ParsedCtu, ParsedCu, SaoParams, MIN_CU};

use super::EncoderConfig;

/// Lagrange multiplier at `qp`.
pub fn lambda(qp: u8) -> f64 {
    0.57 * 2f64.powf((qp as f64 - 12.0) / 3.0)
}

fn log2_bits(v: i32) -> f64 {
    ((v.unsigned_abs() + 1) as f64).log2()
}

fn vector_bits(v: (i32, i32)) -> f64 {
    [v.0, v.1].iter().map(|&c| if c == 0 { 1.0 } else { 3.0 + 2.0 * log2_bits(c) }).sum()
}

fn level_bits(levels: &[i16]) -> f64 {
    let nz = levels.iter().filter(|&&l| l != 0);
    let mut bits = 8.0;
    for &l in nz {
        bits += 3.0 + 2.0 * log2_bits(l as i32);
    }
    bits
}

struct Saved {
    rect: (usize, usize, usize),
    data: Vec<Vec<u16>>,
    mf: Vec<Option<(i32, i32)>>,
}

pub(crate) struct PicEnc<'a> {
    k: &'a Kernels<u16>,
    info: &'a PicInfo,
    planes: &'a PicPlanes<u16>,
    target: &'a [Plane<u16>],
    refs: Option<&'a [PlaneRef<'a, u16>]>,
    cfg: &'a EncoderConfig,
    mf: MotionField,
    lambda: f64,
    s: Scratch<u16>,
    prof: Profiler,
}

impl<'a> PicEnc<'a> {
    pub fn new(
        k: &'a Kernels<u16>,
        info: &'a PicInfo,
        planes: &'a PicPlanes<u16>,
        target: &'a [Plane<u16>],
        refs: Option<&'a [PlaneRef<'a, u16>]>,
        cfg: &'a EncoderConfig,
    ) -> Self {
        // Distortion grows by 4 per extra bit of depth; keep the balance.
        let lambda = lambda(info.qp) * (1u64 << (2 * (info.bit_depth as u32 - 8))) as f64;
        Self {
            k,
            info,
            planes,
            target,
            refs,
            cfg,
            mf: MotionField::new(info.pp.width, info.pp.height),
            lambda,
            s: Scratch::default(),
            prof: Profiler::new(false),
        }
    }

    pub fn encode_ctu(&mut self, r: usize, c: usize) -> ParsedCtu {
        let s = self.info.pp.ctu_size();
        let mut cus = Vec::new();
        self.node(c * s, r * s, s, &mut cus);
        ParsedCtu { row: r, col: c, cus, sao: [SaoParams::default(); 3], alf: false, ccalf: [false; 2] }
    }

    /// Returns the cost of the chosen coding of the node; appends its CUs.
    fn node(&mut self, x: usize, y: usize, s: usize, out: &mut Vec<ParsedCu>) -> f64 {
        let (w, h) = (self.info.pp.width, self.info.pp.height);
        if x >= w || y >= h {
            return 0.0;
        }
        let half = s / 2;
        if x + s > w || y + s > h {
            let mut cost = 0.0;
            for (dx, dy) in [(0, 0), (half, 0), (0, half), (half, half)] {
                cost += self.node(x + dx, y + dy, half, out);
            }
            return cost;
        }
        let min = if self.cfg.fast { 16 } else { MIN_CU };
        let flag = if s > MIN_CU { self.lambda } else { 0.0 };
        let (leaf_cost, leaf) = self.best_leaf(x, y, s);
        let leaf_cost = leaf_cost + flag;
        if s <= min {
            out.push(leaf);
            return leaf_cost;
        }
        let saved = self.save(x, y, s);
        self.mf.set_block(x, y, s, None);
        let mut kids = Vec::new();
        let mut split_cost = flag;
        for (dx, dy) in [(0, 0), (half, 0), (0, half), (half, half)] {
            split_cost += self.node(x + dx, y + dy, half, &mut kids);
            if split_cost >= leaf_cost {
                break;
            }
        }
        if split_cost < leaf_cost {
            out.extend(kids);
            split_cost
        } else {
            self.restore(&saved);
            out.push(leaf);
            leaf_cost
        }
    }

    fn save(&self, x: usize, y: usize, s: usize) -> Saved {
        let mut data = Vec::new();
        for p in 0..self.info.pp.num_planes() {
            let sh = (p > 0) as usize;
            let (bx, by, n) = (x >> sh, y >> sh, s >> sh);
            for pl in [&self.planes.recon[p], &self.planes.dbk[p]] {
                // SAFETY: single-threaded encoder.
                data.push((0..n).flat_map(|j| unsafe { pl.span(by + j, bx, bx + n) }.to_vec()).collect());
            }
        }
        let cells = s / 8;
        let mf = (0..cells * cells).map(|i| self.mf.at((x + (i % cells) * 8) as isize, (y + (i / cells) * 8) as isize)).collect();
        Saved { rect: (x, y, s), data, mf }
    }

    fn restore(&mut self, saved: &Saved) {
        let (x, y, s) = saved.rect;
        let mut it = saved.data.iter();
        for p in 0..self.info.pp.num_planes() {
            let sh = (p > 0) as usize;
            let (bx, by, n) = (x >> sh, y >> sh, s >> sh);
            for pl in [&self.planes.recon[p], &self.planes.dbk[p]] {
                let d = it.next().unwrap();
                for j in 0..n {
                    // SAFETY: single-threaded encoder.
                    unsafe { pl.span_mut(by + j, bx, bx + n) }.copy_from_slice(&d[j * n..(j + 1) * n]);
                }
            }
        }
        let cells = s / 8;
        for (i, mv) in saved.mf.iter().enumerate() {
            self.mf.set_block(x + (i % cells) * 8, y + (i / cells) * 8, 8, *mv);
        }
    }

    fn best_leaf(&mut self, x: usize, y: usize, s: usize) -> (f64, ParsedCu) {
        let tools = self.info.pp.tools;
        let is_p = self.info.pp.pic_type == PicType::P;
        let mut cands: Vec<(CuMode, u8)> = Vec::new();
        let mut ranked: Vec<(u64, IntraMode)> = IntraMode::ALL.iter().map(|&m| (self.pred_ssd(x, y, s, CuMode::Intra(m)), m)).collect();
        ranked.sort_by_key(|r| r.0);
        cands.extend(ranked.iter().take(2).map(|r| (CuMode::Intra(r.1), 0)));
        if tools.bdpcm() {
            cands.push((CuMode::Bdpcm(BdpcmDir::Hor), 0));
            cands.push((CuMode::Bdpcm(BdpcmDir::Ver), 0));
        }
        if !is_p && tools.ibc() && s <= 32 {
            if let Some(bv) = self.ibc_search(x, y, s) {
                cands.push((CuMode::Ibc { bv }, 0));
            }
        }
        if is_p {
            let mvp = derive_mvp(&self.mf, x, y, s);
            let mv = self.motion_search(x, y, s, mvp);
            cands.push((CuMode::Inter { mv }, 0));
        }
        let mut best: Option<(f64, ParsedCu, (CuMode, u8))> = None;
        for c in cands {
            let (cost, cu) = self.eval(x, y, s, c.0, c.1);
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, cu, c));
            }
        }
        let (mut cost, mut cu, mut choice) = best.unwrap();
        if let CuMode::Intra(m) = choice.0 {
            if s <= 32 && cu.cbf[0] {
                for mts in 1..3 {
                    let (c2, cu2) = self.eval(x, y, s, CuMode::Intra(m), mts);
                    if c2 < cost {
                        (cost, cu, choice) = (c2, cu2, (CuMode::Intra(m), mts));
                    }
                }
            }
        }
        // Re-run the winner so its samples are the ones left in the planes.
        let (c, cu2) = self.eval(x, y, s, choice.0, choice.1);
        debug_assert_eq!(c, cost);
        debug_assert_eq!(cu2, cu);
        let mv = if let CuMode::Inter { mv } = cu.mode { Some(mv) } else { None };
        self.mf.set_block(x, y, s, mv);
        (cost, cu)
    }

    fn mode_bits(&self, cu: &ParsedCu) -> f64 {
        let tools = self.info.pp.tools;
        let is_p = self.info.pp.pic_type == PicType::P;
        let intra_tail = |b: f64| b + if tools.bdpcm() { 1.0 } else { 0.0 } + if is_p || tools.ibc() { 1.0 } else { 0.0 };
        let mut bits = match cu.mode {
            CuMode::Intra(_) => intra_tail(2.0),
            CuMode::Bdpcm(_) => intra_tail(1.0),
            CuMode::Ibc { bv } => 1.0 + vector_bits(bv),
            CuMode::Inter { mv } => {
                let mvp = derive_mvp(&self.mf, cu.x, cu.y, cu.size);
                1.0 + vector_bits((mv.0 - mvp.0, mv.1 - mvp.1))
            }
        };
        bits += 3.0;
        if matches!(cu.mode, CuMode::Intra(_)) && cu.cbf[0] && cu.size <= 32 {
            bits += if cu.mts_idx == 0 { 1.0 } else { 2.0 };
        }
        bits
    }

    fn ssd_out(&self, p: usize, cu: &ParsedCu, buf: &[u16]) -> u64 {
        let sh = (p > 0) as usize;
        let (bx, by, n) = (cu.x >> sh, cu.y >> sh, cu.size >> sh);
        let t = &self.target[p];
        let mut acc = 0u64;
        for j in 0..n {
            let row = &t.row(by + j)[bx..bx + n];
            for (a, b) in row.iter().zip(&buf[j * n..(j + 1) * n]) {
                let d = *a as i64 - *b as i64;
                acc += (d * d) as u64;
            }
        }
        acc
    }

    fn proto(&self, x: usize, y: usize, s: usize, mode: CuMode, mts: u8) -> ParsedCu {
        ParsedCu { x, y, size: s, mode, cbf: [false; 3], mts_idx: mts, coeffs: Default::default() }
    }

    fn pred_ssd(&mut self, x: usize, y: usize, s: usize, mode: CuMode) -> u64 {
        let cu = self.proto(x, y, s, mode, 0);
        // SAFETY: single-threaded encoder.
        unsafe { predict(self.k, self.info, self.planes, self.refs, &cu, 0, None, &mut self.s, &self.prof) };
        let n = s;
        let pred = self.s.pred[..n * n].to_vec();
        self.ssd_out(0, &cu, &pred)
    }

    /// Full coding of one leaf candidate; leaves its samples in the planes.
    fn eval(&mut self, x: usize, y: usize, s: usize, mode: CuMode, mts: u8) -> (f64, ParsedCu) {
        let mut cu = self.proto(x, y, s, mode, mts);
        let mut ssd = 0u64;
        let mut bits = 0.0;
        for p in 0..self.info.pp.num_planes() {
            // SAFETY: single-threaded encoder.
            unsafe { predict(self.k, self.info, self.planes, self.refs, &cu, p, None, &mut self.s, &self.prof) };
            let n = cu.plane_size(p);
            let pred_ssd = self.ssd_out(p, &cu, &self.s.pred[..n * n]);
            let levels = match mode {
                CuMode::Bdpcm(d) => self.bdpcm_levels(&cu, p, d),
                _ => self.transform_levels(&mut cu, p),
            };
            cu.cbf[p] = false;
            cu.coeffs[p] = Vec::new();
            let mut plane_cost = pred_ssd as f64;
            let mut plane_ssd = pred_ssd;
            let mut plane_bits = 0.0;
            if let Some(levels) = levels {
                let mut trial = cu.clone();
                trial.cbf[p] = true;
                trial.coeffs[p] = levels;
                reconstruct(self.k, self.info, &trial, p, &mut self.s, &self.prof);
                let coded_ssd = self.ssd_out(p, &trial, &self.s.out[..n * n]);
                let lb = level_bits(&trial.coeffs[p]);
                let coded = coded_ssd as f64 + self.lambda * lb;
                if coded < plane_cost {
                    plane_cost = coded;
                    plane_ssd = coded_ssd;
                    plane_bits = lb;
                    cu = trial;
                }
            }
            let _ = plane_cost;
            if p == 0 && !cu.cbf[0] {
                cu.mts_idx = 0;
            }
            reconstruct(self.k, self.info, &cu, p, &mut self.s, &self.prof);
            // SAFETY: single-threaded encoder.
            unsafe { commit(self.k, self.info, self.planes, &cu, p, &mut self.s, &self.prof) };
            ssd += plane_ssd;
            bits += plane_bits;
        }
        bits += self.mode_bits(&cu);
        (ssd as f64 + self.lambda * bits, cu)
    }

    fn residual_of_pred(&self, cu: &ParsedCu, p: usize, out: &[u16]) -> Vec<i16> {
        let sh = (p > 0) as usize;
        let (bx, by, n) = (cu.x >> sh, cu.y >> sh, cu.size >> sh);
        let t = &self.target[p];
        let mut r = vec![0i16; n * n];
        for j in 0..n {
            for i in 0..n {
                r[j * n + i] = (t.get(bx + i, by + j) - out[j * n + i] as i32) as i16;
            }
        }
        r
    }

    /// Forward transform of a residual block, 64×64 as four quadrants.
    fn forward(&self, resid: &[i16], n: usize, kinds: (TransformKind, TransformKind)) -> Vec<i16> {
        let bd = self.info.bit_depth;
        let mut out = vec![0i16; n * n];
        if n <= 32 {
            forward_transform(resid, n, kinds.0, kinds.1, bd, &mut out);
            return out;
        }
        let h = n / 2;
        let mut q = vec![0i16; h * h];
        let mut c = vec![0i16; h * h];
        for qy in 0..2 {
            for qx in 0..2 {
                for y in 0..h {
                    let o = (qy * h + y) * n + qx * h;
                    q[y * h..(y + 1) * h].copy_from_slice(&resid[o..o + h]);
                }
                forward_transform(&q, h, kinds.0, kinds.1, bd, &mut c);
                for y in 0..h {
                    let o = (qy * h + y) * n + qx * h;
                    out[o..o + h].copy_from_slice(&c[y * h..(y + 1) * h]);
                }
            }
        }
        out
    }

    /// Quantized levels for a transform-coded plane, refined in closed loop
    /// against the actual reconstruction. `None` when everything quantizes to zero.
    fn transform_levels(&mut self, cu: &mut ParsedCu, p: usize) -> Option<Vec<i16>> {
        let n = cu.plane_size(p);
        let kinds = match cu.mode {
            CuMode::Intra(_) if p == 0 => TransformKind::from_mts(cu.mts_idx),
            _ => (TransformKind::Dct2, TransformKind::Dct2),
        };
        let pred = self.s.pred[..n * n].to_vec();
        let resid = self.residual_of_pred(cu, p, &pred);
        let coeffs = self.forward(&resid, n, kinds);
        let mut levels = vec![0i16; n * n];
        quant(&coeffs, self.info.qp, cu.mode.is_intra_like(), &mut levels);
        let mut best: Option<(u64, Vec<i16>)> = None;
        let mut trial = cu.clone();
        for _ in 0..4 {
            if levels.iter().all(|&l| l == 0) {
                break;
            }
            trial.cbf[p] = true;
            trial.coeffs[p] = levels.clone();
            self.s.pred[..n * n].copy_from_slice(&pred);
            reconstruct(self.k, self.info, &trial, p, &mut self.s, &self.prof);
            let out = self.s.out[..n * n].to_vec();
            let ssd = self.ssd_out(p, &trial, &out);
            if best.as_ref().is_none_or(|b| ssd < b.0) {
                best = Some((ssd, levels.clone()));
            } else {
                break;
            }
            if ssd == 0 {
                break;
            }
            let err = self.residual_of_pred(&trial, p, &out);
            let delta = round_quant(&self.forward(&err, n, kinds), self.info.qp);
            if delta.iter().all(|&d| d == 0) {
                break;
            }
            for (l, d) in levels.iter_mut().zip(&delta) {
                *l = (*l as i32 + *d as i32).clamp(-32767, 32767) as i16;
            }
        }
        self.s.pred[..n * n].copy_from_slice(&pred);
        best.map(|b| b.1)
    }

    /// DPCM levels: cumulative levels chosen sample by sample so each running
    /// sum dequantizes closest to the prediction error.
    fn bdpcm_levels(&self, cu: &ParsedCu, p: usize, dir: BdpcmDir) -> Option<Vec<i16>> {
        let n = cu.plane_size(p);
        let resid = self.residual_of_pred(cu, p, &self.s.pred[..n * n]);
        let qp = self.info.qp;
        let step = quant_step(qp);
        let mut levels = vec![0i16; n * n];
        for a in 0..n {
            let mut run = 0i32;
            for b in 0..n {
                let idx = match dir {
                    BdpcmDir::Ver => b * n + a,
                    BdpcmDir::Hor => a * n + b,
                };
                let d = resid[idx] as i32;
                let c0 = (d as f64 / step).round() as i32;
                let c = (c0 - 1..=c0 + 1)
                    .min_by_key(|&c| ((dequant_level(c, qp) as i32 - d).abs(), (c - run).abs()))
                    .unwrap();
                let l = (c - run).clamp(-32767, 32767);
                levels[idx] = l as i16;
                run += l;
            }
        }
        levels.iter().any(|&l| l != 0).then_some(levels)
    }

    fn ibc_search(&self, x: usize, y: usize, s: usize) -> Option<(i32, i32)> {
        let pp = &self.info.pp;
        let si = s as i32;
        let mut cands: Vec<(i32, i32)> = (1..=4).flat_map(|k| [(-k * si, 0), (0, -k * si)]).collect();
        if !self.cfg.fast {
            for dy in (-64..=0).step_by(8) {
                for dx in (-64..=64).step_by(8) {
                    cands.push((dx, dy));
                }
            }
        }
        let mut best: Option<(u64, (i32, i32))> = None;
        for bv in cands {
            if !validate_bv(pp, bv, x, y, s) {
                continue;
            }
            let sad = self.block_sad(x, y, s, |i, j| {
                // SAFETY: validated block vectors only read reconstructed samples.
                unsafe { self.planes.recon[0].span((y as i32 + bv.1) as usize + j, 0, pp.width)[(x as i32 + bv.0) as usize + i] as i32 }
            }, best.map_or(u64::MAX, |b| b.0));
            let key = (sad, bv.0.abs() + bv.1.abs());
            if best.is_none_or(|b| key < (b.0, b.1 .0.abs() + b.1 .1.abs())) {
                best = Some((sad, bv));
            }
        }
        best.map(|b| b.1)
    }

    fn block_sad(&self, x: usize, y: usize, s: usize, f: impl Fn(usize, usize) -> i32, limit: u64) -> u64 {
        let t = &self.target[0];
        let mut sad = 0u64;
        for j in 0..s {
            let row = &t.row(y + j)[x..x + s];
            for (i, &v) in row.iter().enumerate() {
                sad += (v as i32 - f(i, j)).unsigned_abs() as u64;
            }
            if sad > limit {
                break;
            }
        }
        sad
    }

    fn motion_search(&self, x: usize, y: usize, s: usize, mvp: (i32, i32)) -> (i32, i32) {
        let refs = self.refs.expect("P-picture without reference");
        let range = if self.cfg.fast { 4 } else { 8 };
        motion_search_plane(self.k, &self.target[0], refs[0], x, y, s, mvp, range, 4 * self.info.pp.max_mv_y as i32, self.info.bit_depth)
    }
}

/// Quantization with round-to-nearest, for closed-loop corrections.
fn round_quant(coeffs: &[i16], qp: u8) -> Vec<i16> {
    let fs = QUANT_SCALE[(qp % 6) as usize];
    let shift = 16 + (qp / 6) as u32;
    coeffs
        .iter()
        .map(|&c| {
            let mag = (((c as i64).abs() * fs + (1 << (shift - 1))) >> shift).min(32767) as i16;
            if c < 0 {
                -mag
            } else {
                mag
            }
        })
        .collect()
}

/// Integer full search of ±`range` samples around the rounded predictor,
/// then half- and quarter-sample refinement over the 8 neighbours. Ties go to
/// the smaller |mvd_y|, then |mvd_x|, then non-negative components.
#[allow(clippy::too_many_arguments)]
pub fn motion_search_plane(
    k: &Kernels<u16>,
    target: &Plane<u16>,
    reference: PlaneRef<'_, u16>,
    x: usize,
    y: usize,
    s: usize,
    mvp: (i32, i32),
    range: i32,
    mv_y_limit: i32,
    bit_depth: u8,
) -> (i32, i32) {
    let mut buf = vec![0u16; s * s];
    let mut sad_of = |mv: (i32, i32), limit: u64| -> u64 {
        (k.interp_luma)(reference, x, y, mv.0, mv.1, s, s, bit_depth, &mut buf);
        let mut sad = 0u64;
        for j in 0..s {
            let row = &target.row(y + j)[x..x + s];
            for (a, b) in row.iter().zip(&buf[j * s..(j + 1) * s]) {
                sad += (*a as i32 - *b as i32).unsigned_abs() as u64;
            }
            if sad > limit {
                break;
            }
        }
        sad
    };
    let key = |sad: u64, mv: (i32, i32)| {
        let d = (mv.0 - mvp.0, mv.1 - mvp.1);
        (sad, d.1.abs(), d.0.abs(), d.1 < 0, d.0 < 0)
    };
    let ok = |mv: (i32, i32)| mv.1.abs() <= mv_y_limit;
    let start = if ok(mvp) { mvp } else { (mvp.0, mvp.1.clamp(-mv_y_limit, mv_y_limit)) };
    let mut best = (key(sad_of(start, u64::MAX), start), start);
    let base = ((mvp.0 + 2) >> 2, (mvp.1 + 2) >> 2);
    for dy in -range..=range {
        for dx in -range..=range {
            let mv = (4 * (base.0 + dx), 4 * (base.1 + dy));
            if !ok(mv) {
                continue;
            }
            let sad = sad_of(mv, best.0 .0);
            let kk = key(sad, mv);
            if kk < best.0 {
                best = (kk, mv);
            }
        }
    }
    for step in [2, 1] {
        let c = best.1;
        for (dx, dy) in [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
            let mv = (c.0 + dx * step, c.1 + dy * step);
            if !ok(mv) {
                continue;
            }
            let sad = sad_of(mv, best.0 .0);
            let kk = key(sad, mv);
            if kk < best.0 {
                best = (kk, mv);
            }
        }
    }
    best.1
}
