//! Integer DCT-II / DST-VII / DCT-VIII transforms and (de)quantization.
//!
//! Matrices are 64x the orthonormal basis. Coefficients live in a domain
//! scaled by `2^(15 - bit_depth - log2 N)` relative to the orthonormal
//! transform, which keeps every legal residual block inside i16.

use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Dct2,
    Dst7,
    Dct8,
}

impl TransformKind {
    pub const ALL: [TransformKind; 3] = [TransformKind::Dct2, TransformKind::Dst7, TransformKind::Dct8];

    /// Horizontal and vertical kinds selected by an MTS index.
    pub fn from_mts(mts_idx: u8) -> (TransformKind, TransformKind) {
        match mts_idx {
            0 => (TransformKind::Dct2, TransformKind::Dct2),
            1 => (TransformKind::Dst7, TransformKind::Dst7),
            2 => (TransformKind::Dct8, TransformKind::Dct8),
            _ => panic!("invalid mts index {mts_idx}"),
        }
    }
}

pub const TRANSFORM_SIZES: [usize; 4] = [4, 8, 16, 32];

/// `N x N` integer transform matrix, `entry(k, n)` with k the frequency index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformMatrix {
    pub kind: TransformKind,
    pub n: usize,
    pub entries: Vec<i32>,
}

impl TransformMatrix {
    #[inline]
    pub fn entry(&self, k: usize, n: usize) -> i32 {
        self.entries[k * self.n + n]
    }

    pub fn row(&self, k: usize) -> &[i32] {
        &self.entries[k * self.n..(k + 1) * self.n]
    }
}

pub fn gen_transform_matrix(kind: TransformKind, n: usize) -> TransformMatrix {
    assert!(TRANSFORM_SIZES.contains(&n), "unsupported transform size {n}");
    use std::f64::consts::PI;
    let nf = n as f64;
    let mut entries = Vec::with_capacity(n * n);
    for k in 0..n {
        for i in 0..n {
            let (kf, xf) = (k as f64, i as f64);
            let v = match kind {
                TransformKind::Dct2 => {
                    let ck = if k == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
                    64.0 * (2.0 / nf).sqrt() * ck * (PI * kf * (2.0 * xf + 1.0) / (2.0 * nf)).cos()
                }
                TransformKind::Dst7 => {
                    64.0 * (2.0 / (2.0 * nf + 1.0).sqrt())
                        * (PI * (2.0 * xf + 1.0) * (kf + 1.0) / (2.0 * nf + 1.0)).sin()
                }
                TransformKind::Dct8 => {
                    64.0 * (2.0 / (2.0 * nf + 1.0).sqrt())
                        * (PI * (2.0 * kf + 1.0) * (2.0 * xf + 1.0) / (4.0 * nf + 2.0)).cos()
                }
            };
            entries.push(v.round() as i32);
        }
    }
    TransformMatrix { kind, n, entries }
}

/// Cached matrix for `kind` and size `n`.
pub fn matrix(kind: TransformKind, n: usize) -> &'static TransformMatrix {
    static TABLE: OnceLock<Vec<TransformMatrix>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        TransformKind::ALL
            .iter()
            .flat_map(|&k| TRANSFORM_SIZES.iter().map(move |&n| gen_transform_matrix(k, n)))
            .collect()
    });
    let ki = TransformKind::ALL.iter().position(|&k| k == kind).unwrap();
    let ni = TRANSFORM_SIZES.iter().position(|&s| s == n).expect("transform size");
    &table[ki * TRANSFORM_SIZES.len() + ni]
}

#[inline(always)]
fn clip16(v: i32) -> i32 {
    v.clamp(i16::MIN as i32, i16::MAX as i32)
}

#[inline(always)]
fn log2(n: usize) -> u32 {
    n.trailing_zeros()
}

/// Shift of the second (row) inverse pass.
#[inline]
pub fn inverse_row_shift(n: usize, bit_depth: u8) -> u32 {
    20 - bit_depth as u32 - log2(n)
}

pub const INVERSE_COL_SHIFT: u32 = 7;

/// Scalar inverse transform of an `n x n` coefficient block into residuals.
pub fn inverse_transform_scalar(
    coeffs: &[i16],
    n: usize,
    kind_h: TransformKind,
    kind_v: TransformKind,
    bit_depth: u8,
    out: &mut [i16],
) {
    let tv = matrix(kind_v, n);
    let th = matrix(kind_h, n);
    let mut tmp = vec![0i32; n * n];
    for u in 0..n {
        for y in 0..n {
            let mut sum = 0i32;
            for v in 0..n {
                sum += tv.entry(v, y) * coeffs[v * n + u] as i32;
            }
            tmp[y * n + u] = clip16((sum + 64) >> INVERSE_COL_SHIFT);
        }
    }
    let s2 = inverse_row_shift(n, bit_depth);
    let rnd = 1 << (s2 - 1);
    for y in 0..n {
        for x in 0..n {
            let mut sum = 0i32;
            for u in 0..n {
                sum += th.entry(u, x) * tmp[y * n + u];
            }
            out[y * n + x] = clip16((sum + rnd) >> s2) as i16;
        }
    }
}

/// Lane-parallel inverse transform: broadcast-multiply-accumulate over whole
/// rows, skipping all-zero coefficient rows and zero intermediates.
pub fn inverse_transform_vector(
    coeffs: &[i16],
    n: usize,
    kind_h: TransformKind,
    kind_v: TransformKind,
    bit_depth: u8,
    out: &mut [i16],
) {
    let tv = matrix(kind_v, n);
    let th = matrix(kind_h, n);
    let mut acc = [0i32; 32 * 32];
    let acc = &mut acc[..n * n];
    let mut crow = [0i32; 32];
    for v in 0..n {
        let src = &coeffs[v * n..(v + 1) * n];
        if src.iter().all(|&c| c == 0) {
            continue;
        }
        for (d, &s) in crow[..n].iter_mut().zip(src) {
            *d = s as i32;
        }
        let trow = tv.row(v);
        for y in 0..n {
            let m = trow[y];
            for (a, &c) in acc[y * n..(y + 1) * n].iter_mut().zip(&crow[..n]) {
                *a += m * c;
            }
        }
    }
    for a in acc.iter_mut() {
        *a = clip16((*a + 64) >> INVERSE_COL_SHIFT);
    }
    let s2 = inverse_row_shift(n, bit_depth);
    let rnd = 1 << (s2 - 1);
    let mut row = [0i32; 32];
    for y in 0..n {
        let row = &mut row[..n];
        row.fill(rnd);
        for u in 0..n {
            let t = acc[y * n + u];
            if t == 0 {
                continue;
            }
            for (r, &m) in row.iter_mut().zip(th.row(u)) {
                *r += t * m;
            }
        }
        for (o, &r) in out[y * n..(y + 1) * n].iter_mut().zip(row.iter()) {
            *o = clip16(r >> s2) as i16;
        }
    }
}

/// Encoder-side forward transform.
pub fn forward_transform(
    residual: &[i16],
    n: usize,
    kind_h: TransformKind,
    kind_v: TransformKind,
    bit_depth: u8,
    out: &mut [i16],
) {
    let tv = matrix(kind_v, n);
    let th = matrix(kind_h, n);
    let s1 = log2(n) + bit_depth as u32 - 9;
    let s2 = 6;
    let mut tmp = vec![0i64; n * n];
    for y in 0..n {
        for u in 0..n {
            let mut sum = 0i64;
            for x in 0..n {
                sum += (th.entry(u, x) * residual[y * n + x] as i32) as i64;
            }
            tmp[y * n + u] = (sum + (1 << (s1 - 1))) >> s1;
        }
    }
    for v in 0..n {
        for u in 0..n {
            let mut sum = 0i64;
            for y in 0..n {
                sum += tv.entry(v, y) as i64 * tmp[y * n + u];
            }
            let c = (sum + (1 << (s2 - 1))) >> s2;
            out[v * n + u] = c.clamp(i16::MIN as i64, i16::MAX as i64) as i16;
        }
    }
}

pub const DEQUANT_SCALE: [i32; 6] = [40, 45, 51, 57, 64, 72];
pub const QUANT_SCALE: [i64; 6] = [26214, 23302, 20560, 18396, 16384, 14564];

/// Dequantization of one level. `level` is saturated to i16 first, which does
/// not change the saturated result.
#[inline(always)]
pub fn dequant_level(level: i32, qp: u8) -> i16 {
    let level = level.clamp(i16::MIN as i32, i16::MAX as i32);
    let v = level * DEQUANT_SCALE[(qp % 6) as usize];
    let s = (qp / 6) as u32;
    let d = if s >= 4 { v << (s - 4) } else { v >> (4 - s) };
    clip16(d) as i16
}

pub fn dequant_scalar(levels: &[i16], qp: u8, out: &mut [i16]) {
    let ls = DEQUANT_SCALE[(qp % 6) as usize] as i64;
    let s = (qp / 6) as u32;
    for (o, &l) in out.iter_mut().zip(levels) {
        let d = ((l as i64 * ls) << s) >> 4;
        *o = d.clamp(i16::MIN as i64, i16::MAX as i64) as i16;
    }
}

/// Lane-parallel dequantization in i32 lanes. `level * ls` fits 23 bits, so
/// the combined shift never leaves i32.
pub fn dequant_vector(levels: &[i16], qp: u8, out: &mut [i16]) {
    let ls = DEQUANT_SCALE[(qp % 6) as usize];
    let s = (qp / 6) as u32;
    const L: usize = 16;
    let mut chunks_out = out.chunks_exact_mut(L);
    let mut chunks_in = levels.chunks_exact(L);
    for (o, l) in (&mut chunks_out).zip(&mut chunks_in) {
        let mut lane = [0i32; L];
        for (d, &v) in lane.iter_mut().zip(l) {
            *d = v as i32 * ls;
        }
        if s >= 4 {
            for d in lane.iter_mut() {
                *d <<= s - 4;
            }
        } else {
            for d in lane.iter_mut() {
                *d >>= 4 - s;
            }
        }
        for (o, &d) in o.iter_mut().zip(&lane) {
            *o = clip16(d) as i16;
        }
    }
    for (o, &l) in chunks_out.into_remainder().iter_mut().zip(chunks_in.remainder()) {
        *o = dequant_level(l as i32, qp);
    }
}

/// Encoder-side scalar quantizer.
pub fn quant(coeffs: &[i16], qp: u8, is_intra: bool, out: &mut [i16]) {
    let fs = QUANT_SCALE[(qp % 6) as usize];
    let shift = 16 + (qp / 6) as u32;
    let off = (1i64 << shift) / if is_intra { 3 } else { 6 };
    for (o, &c) in out.iter_mut().zip(coeffs) {
        let mag = ((c as i64).abs() * fs + off) >> shift;
        let mag = mag.min(i16::MAX as i64) as i16;
        *o = if c < 0 { -mag } else { mag };
    }
}

/// Size of one quantization step in coefficient units.
pub fn quant_step(qp: u8) -> f64 {
    DEQUANT_SCALE[(qp % 6) as usize] as f64 * (1u64 << (qp / 6)) as f64 / 16.0
}
