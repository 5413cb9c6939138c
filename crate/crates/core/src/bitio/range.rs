//! Adaptive binary range coder.
//!
//! Byte-oriented carry-propagating coder with 12-bit probabilities. The
//! encoder emits one leading zero byte (the initial carry cache), so the
//! decoder always preloads exactly five bytes.

use crate::error::{Error, Result};

const PROB_BITS: u32 = 12;
const PROB_ONE: u16 = 1 << PROB_BITS;
const ADAPT_SHIFT: u32 = 5;
const TOP: u32 = 1 << 24;

/// Adaptive probability that the next bin is 0, in units of 1/4096.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProbContext {
    p: u16,
}

impl Default for ProbContext {
    fn default() -> Self {
        Self { p: PROB_ONE / 2 }
    }
}

impl ProbContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_prob(p: u16) -> Self {
        assert!((1..PROB_ONE).contains(&p), "probability {p} out of range");
        Self { p }
    }

    pub fn prob(&self) -> u16 {
        self.p
    }

    #[inline]
    fn update(&mut self, bit: bool) {
        if bit {
            self.p -= self.p >> ADAPT_SHIFT;
        } else {
            self.p += (PROB_ONE - self.p) >> ADAPT_SHIFT;
        }
        debug_assert!((1..PROB_ONE).contains(&self.p));
    }
}

/// Range encoder writing into an in-memory byte buffer.
#[derive(Debug, Clone)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
    flushed: bool,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
            flushed: false,
        }
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    /// Bytes emitted so far (excluding pending carry bytes).
    pub fn bytes_emitted(&self) -> usize {
        self.out.len()
    }

    #[inline]
    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.out.push(temp.wrapping_add(carry));
                temp = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low >> 24) & 0xFF) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    #[inline]
    fn normalize(&mut self) {
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    /// Codes one bin with an adaptive context.
    #[inline]
    pub fn encode_bit(&mut self, ctx: &mut ProbContext, bit: bool) {
        debug_assert!(!self.flushed, "encode after flush");
        let bound = (self.range >> PROB_BITS) * ctx.p as u32;
        if bit {
            self.low += bound as u64;
            self.range -= bound;
        } else {
            self.range = bound;
        }
        ctx.update(bit);
        self.normalize();
    }

    /// Codes one equiprobable bin.
    #[inline]
    pub fn encode_bypass(&mut self, bit: bool) {
        debug_assert!(!self.flushed, "encode after flush");
        let bound = self.range >> 1;
        if bit {
            self.low += bound as u64;
            self.range -= bound;
        } else {
            self.range = bound;
        }
        self.normalize();
    }

    /// Writes `n` bits of `value`, most significant first, as bypass bins.
    pub fn encode_bypass_bits(&mut self, value: u32, n: u32) {
        for i in (0..n).rev() {
            self.encode_bypass((value >> i) & 1 != 0);
        }
    }

    /// Order-k Exp-Golomb code in bypass bins.
    pub fn encode_eg(&mut self, mut value: u32, k: u32) {
        debug_assert!(value < 1 << 30);
        let mut k = k;
        while value >= 1 << k {
            self.encode_bypass(true);
            value -= 1 << k;
            k += 1;
        }
        self.encode_bypass(false);
        self.encode_bypass_bits(value, k);
    }

    /// Terminates the stream. A second call is an error.
    pub fn flush(&mut self) -> Result<()> {
        if self.flushed {
            return Err(Error::Misuse("range encoder flushed twice"));
        }
        for _ in 0..5 {
            self.shift_low();
        }
        self.flushed = true;
        Ok(())
    }

    pub fn is_flushed(&self) -> bool {
        self.flushed
    }

    /// Flushes (if needed) and returns the terminated byte stream.
    pub fn finish(mut self) -> Vec<u8> {
        if !self.flushed {
            self.flush().expect("first flush cannot fail");
        }
        self.out
    }

    /// Returns the bytes of a flushed encoder.
    pub fn into_bytes(self) -> Result<Vec<u8>> {
        if !self.flushed {
            return Err(Error::Misuse("range encoder not flushed"));
        }
        Ok(self.out)
    }
}

/// Range decoder over a borrowed payload.
#[derive(Debug, Clone)]
pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    data: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Result<Self> {
        if data.len() < 5 {
            return Err(Error::Truncated("range coder payload shorter than 5 bytes"));
        }
        if data[0] != 0 {
            return Err(Error::corrupt("range coder payload must start with a zero byte"));
        }
        let code = u32::from_be_bytes([data[1], data[2], data[3], data[4]]);
        Ok(Self { code, range: u32::MAX, data, pos: 5 })
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    /// Number of payload bytes consumed so far.
    pub fn consumed(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    #[inline]
    fn normalize(&mut self) -> Result<()> {
        while self.range < TOP {
            let Some(&b) = self.data.get(self.pos) else {
                return Err(Error::Truncated("range coder payload exhausted"));
            };
            self.pos += 1;
            self.range <<= 8;
            self.code = (self.code << 8) | b as u32;
        }
        Ok(())
    }

    #[inline]
    pub fn decode_bit(&mut self, ctx: &mut ProbContext) -> Result<bool> {
        let bound = (self.range >> PROB_BITS) * ctx.p as u32;
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        ctx.update(bit);
        self.normalize()?;
        Ok(bit)
    }

    #[inline]
    pub fn decode_bypass(&mut self) -> Result<bool> {
        let bound = self.range >> 1;
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        self.normalize()?;
        Ok(bit)
    }

    pub fn decode_bypass_bits(&mut self, n: u32) -> Result<u32> {
        let mut v = 0u32;
        for _ in 0..n {
            v = (v << 1) | self.decode_bypass()? as u32;
        }
        Ok(v)
    }

    pub fn decode_eg(&mut self, k: u32) -> Result<u32> {
        let mut k = k;
        let mut base = 0u32;
        let mut prefix = 0;
        while self.decode_bypass()? {
            prefix += 1;
            if prefix > 32 || k >= 31 {
                return Err(Error::corrupt("exp-golomb prefix too long"));
            }
            base += 1 << k;
            k += 1;
        }
        let suffix = self.decode_bypass_bits(k)?;
        base.checked_add(suffix)
            .ok_or_else(|| Error::corrupt("exp-golomb value overflow"))
    }
}
