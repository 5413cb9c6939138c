use super::scan::{zigzag_inverse, zigzag_scan};
use super::CtxBank;
use crate::bitio::{RangeDecoder, RangeEncoder};
use crate::Error;
use crate::Result;

pub const MAX_LEVEL: u32 = i16::MAX as u32;

#[inline]
fn sig_class(idx: usize, total: usize) -> usize {
    (3 * idx / total).min(2)
}

/// Writes a nonzero `n × n` block of levels.
pub fn write_residual(enc: &mut RangeEncoder, ctx: &mut CtxBank, levels: &[i16], n: usize) {
    let scan = zigzag_scan(n);
    let total = n * n;
    let last = (0..total).rev().find(|&i| levels[scan[i] as usize] != 0).expect("write_residual needs a nonzero block");
    let pos = scan[last] as usize;
    let bits = n.trailing_zeros();
    enc.encode_bypass_bits((pos % n) as u32, bits);
    enc.encode_bypass_bits((pos / n) as u32, bits);
    for i in (0..=last).rev() {
        let l = levels[scan[i] as usize];
        let class = sig_class(i, total);
        enc.encode_bit(&mut ctx.sig[class], l != 0);
        if l == 0 {
            continue;
        }
        let a = l.unsigned_abs() as u32;
        enc.encode_bit(&mut ctx.gt1, a > 1);
        if a > 1 {
            enc.encode_eg(a - 2, 0);
        }
        enc.encode_bypass(l < 0);
    }
}

/// Parses an `n × n` block written by [`write_residual`].
pub fn parse_residual(dec: &mut RangeDecoder<'_>, ctx: &mut CtxBank, n: usize) -> Result<Vec<i16>> {
    let total = n * n;
    let scan = zigzag_scan(n);
    let bits = n.trailing_zeros();
    let lx = dec.decode_bypass_bits(bits)? as usize;
    let ly = dec.decode_bypass_bits(bits)? as usize;
    let last = zigzag_inverse(n)[ly * n + lx] as usize;
    let mut out = vec![0i16; total];
    for i in (0..=last).rev() {
        let class = sig_class(i, total);
        let sig = dec.decode_bit(&mut ctx.sig[class])?;
        if !sig {
            if i == last {
                return Err(Error::corrupt("last significant coefficient coded as zero"));
            }
            continue;
        }
        let mut a = 1u32;
        if dec.decode_bit(&mut ctx.gt1)? {
            let rem = dec.decode_eg(0)?;
            a = rem.checked_add(2).filter(|&v| v <= MAX_LEVEL).ok_or_else(|| Error::corrupt("coefficient level overflow"))?;
        }
        let neg = dec.decode_bypass()?;
        out[scan[i] as usize] = if neg { -(a as i16) } else { a as i16 };
    }
    Ok(out)
}
