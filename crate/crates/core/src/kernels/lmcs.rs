//! Luma mapping: piecewise-linear inverse LUT built from 16 codeword
//! counts, and its forward counterpart used by the encoder.

use super::pixel::{max_sample, Pixel};

pub const LMCS_PIECES: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LmcsLut {
    pub bit_depth: u8,
    pub table: Vec<u16>,
}

fn pivots(cw: &[u16; LMCS_PIECES], bit_depth: u8) -> (i64, [i64; LMCS_PIECES + 1]) {
    let org = (1i64 << bit_depth) / LMCS_PIECES as i64;
    let mut mapped = [0i64; LMCS_PIECES + 1];
    for i in 0..LMCS_PIECES {
        mapped[i + 1] = mapped[i] + cw[i] as i64;
    }
    (org, mapped)
}

/// Inverse LUT. Counts must be valid (each at least 1, summing to
/// `2^bit_depth`); headers are validated before reaching here.
pub fn lmcs_build_inverse(cw: &[u16; LMCS_PIECES], bit_depth: u8) -> LmcsLut {
    assert!(cw.iter().all(|&c| c >= 1));
    let (org, mapped) = pivots(cw, bit_depth);
    let max = max_sample(bit_depth) as i64;
    let table = (0..1i64 << bit_depth)
        .map(|y| {
            let j = (0..LMCS_PIECES).rfind(|&j| mapped[j] <= y).unwrap_or(0).min(LMCS_PIECES - 1);
            let x = j as i64 * org + (((y - mapped[j]) * (org << 11) / cw[j] as i64 + 1024) >> 11);
            x.clamp(0, max) as u16
        })
        .collect();
    LmcsLut { bit_depth, table }
}

/// Forward mapping (original domain to mapped domain).
pub fn lmcs_build_forward(cw: &[u16; LMCS_PIECES], bit_depth: u8) -> LmcsLut {
    let (org, mapped) = pivots(cw, bit_depth);
    let max = max_sample(bit_depth) as i64;
    let table = (0..1i64 << bit_depth)
        .map(|x| {
            let j = (x / org) as usize;
            let y = mapped[j] + ((x - j as i64 * org) * cw[j] as i64 + org / 2) / org;
            y.clamp(0, max) as u16
        })
        .collect();
    LmcsLut { bit_depth, table }
}

impl LmcsLut {
    pub fn identity(bit_depth: u8) -> Self {
        Self { bit_depth, table: (0..1u32 << bit_depth).map(|v| v as u16).collect() }
    }

    #[inline(always)]
    pub fn map(&self, v: i32) -> i32 {
        self.table[v as usize] as i32
    }

    pub fn is_monotonic(&self) -> bool {
        self.table.windows(2).all(|w| w[0] <= w[1])
    }
}

pub fn uniform_counts(bit_depth: u8) -> [u16; LMCS_PIECES] {
    [((1u32 << bit_depth) / LMCS_PIECES as u32) as u16; LMCS_PIECES]
}

pub fn lmcs_apply_scalar<P: Pixel>(lut: &LmcsLut, src: &[P], dst: &mut [P]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = P::from_i32(lut.map(s.to_i32()));
    }
}

/// Table lookups in fixed-size lane groups.
pub fn lmcs_apply_vector<P: Pixel>(lut: &LmcsLut, src: &[P], dst: &mut [P]) {
    const L: usize = 16;
    let t = &lut.table[..];
    let mut so = src.chunks_exact(L);
    let mut dof = dst.chunks_exact_mut(L);
    for (s, d) in (&mut so).zip(&mut dof) {
        let idx: [usize; L] = std::array::from_fn(|i| s[i].to_i32() as usize);
        for i in 0..L {
            d[i] = P::from_i32(t[idx[i]] as i32);
        }
    }
    lmcs_apply_scalar(lut, so.remainder(), dof.into_remainder());
}
