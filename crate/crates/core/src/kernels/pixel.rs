//! Sample storage for the two decoding paths: `u8` planes for 8-bit
//! streams and `u16` planes for 10-bit streams (or 8-bit streams forced onto
//! the wide path).

use std::fmt::Debug;
use std::ops::{Add, Mul, Shr, Sub};

/// Lane width, in samples, that plane strides are padded to.
pub const MAX_LANES: usize = 32;

/// Intermediate type used by lane-parallel kernels whose precision depends
/// on the storage path (`i16` for 8-bit, `i32` for 16-bit).
pub trait Acc:
    Copy
    + Default
    + Debug
    + Ord
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Shr<u32, Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_i32(v: i32) -> Self;
    fn to_i32(self) -> i32;
}

impl Acc for i16 {
    #[inline(always)]
    fn from_i32(v: i32) -> Self {
        debug_assert!(v >= i16::MIN as i32 && v <= i16::MAX as i32, "i16 lane overflow: {v}");
        v as i16
    }
    #[inline(always)]
    fn to_i32(self) -> i32 {
        self as i32
    }
}

impl Acc for i32 {
    #[inline(always)]
    fn from_i32(v: i32) -> Self {
        v
    }
    #[inline(always)]
    fn to_i32(self) -> i32 {
        self
    }
}

pub trait Pixel: Copy + Default + Debug + PartialEq + Eq + Send + Sync + 'static {
    type Acc: Acc;
    /// Storage width in bits.
    const BITS: u32;
    const NAME: &'static str;

    fn to_i32(self) -> i32;
    /// Caller guarantees `0 <= v < 2^BITS`.
    fn from_i32(v: i32) -> Self;

    #[inline(always)]
    fn to_acc(self) -> Self::Acc {
        Self::Acc::from_i32(self.to_i32())
    }
    #[inline(always)]
    fn from_acc(v: Self::Acc) -> Self {
        Self::from_i32(v.to_i32())
    }
    #[inline(always)]
    fn to_u16(self) -> u16 {
        self.to_i32() as u16
    }
}

impl Pixel for u8 {
    type Acc = i16;
    const BITS: u32 = 8;
    const NAME: &'static str = "8bit";
    #[inline(always)]
    fn to_i32(self) -> i32 {
        self as i32
    }
    #[inline(always)]
    fn from_i32(v: i32) -> Self {
        debug_assert!((0..256).contains(&v), "sample {v} out of u8 range");
        v as u8
    }
}

impl Pixel for u16 {
    type Acc = i32;
    const BITS: u32 = 16;
    const NAME: &'static str = "16bit";
    #[inline(always)]
    fn to_i32(self) -> i32 {
        self as i32
    }
    #[inline(always)]
    fn from_i32(v: i32) -> Self {
        debug_assert!((0..65536).contains(&v), "sample {v} out of u16 range");
        v as u16
    }
}

#[inline(always)]
pub fn clip_sample(v: i32, max: i32) -> i32 {
    v.clamp(0, max)
}

#[inline(always)]
pub fn max_sample(bit_depth: u8) -> i32 {
    (1 << bit_depth) - 1
}

/// Stride for a plane of `width` samples: padded to a whole number of lanes.
pub fn padded_stride(width: usize) -> usize {
    width.div_ceil(MAX_LANES) * MAX_LANES
}

/// A single plane of samples.
#[derive(Clone)]
pub struct Plane<P: Pixel> {
    data: Vec<P>,
    width: usize,
    height: usize,
    stride: usize,
    bit_depth: u8,
}

/// Equality over visible samples; stride padding is ignored.
impl<P: Pixel> PartialEq for Plane<P> {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bit_depth == other.bit_depth
            && (0..self.height).all(|y| self.row(y) == other.row(y))
    }
}

impl<P: Pixel> Eq for Plane<P> {}

impl<P: Pixel> Debug for Plane<P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Plane")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("stride", &self.stride)
            .field("bit_depth", &self.bit_depth)
            .finish()
    }
}

impl<P: Pixel> Plane<P> {
    pub fn new(width: usize, height: usize, bit_depth: u8) -> Self {
        assert!(bit_depth as u32 <= P::BITS, "{}-bit samples do not fit {} storage", bit_depth, P::NAME);
        let stride = padded_stride(width);
        Self { data: vec![P::default(); stride * height], width, height, stride, bit_depth }
    }

    pub fn filled(width: usize, height: usize, bit_depth: u8, value: i32) -> Self {
        let mut p = Self::new(width, height, bit_depth);
        p.fill(value);
        p
    }

    /// Builds a plane from tightly packed row-major samples.
    pub fn from_samples(width: usize, height: usize, bit_depth: u8, samples: &[u16]) -> Self {
        assert_eq!(samples.len(), width * height);
        let mut p = Self::new(width, height, bit_depth);
        let max = max_sample(bit_depth);
        for y in 0..height {
            for (d, &s) in p.row_mut(y).iter_mut().zip(&samples[y * width..(y + 1) * width]) {
                assert!(s as i32 <= max, "sample {s} exceeds {bit_depth}-bit range");
                *d = P::from_i32(s as i32);
            }
        }
        p
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn stride(&self) -> usize {
        self.stride
    }
    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }
    pub fn max_value(&self) -> i32 {
        max_sample(self.bit_depth)
    }

    pub fn data(&self) -> &[P] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [P] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.data[y * self.stride + x].to_i32()
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: i32) {
        debug_assert!(v >= 0 && v <= self.max_value());
        self.data[y * self.stride + x] = P::from_i32(v);
    }

    /// Sample at clamped coordinates (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> i32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn row(&self, y: usize) -> &[P] {
        &self.data[y * self.stride..y * self.stride + self.width]
    }

    pub fn row_mut(&mut self, y: usize) -> &mut [P] {
        &mut self.data[y * self.stride..y * self.stride + self.width]
    }

    pub fn fill(&mut self, value: i32) {
        assert!(value >= 0 && value <= self.max_value());
        self.data.fill(P::from_i32(value));
    }

    /// Row-major samples without padding, widened to u16.
    pub fn to_u16_vec(&self) -> Vec<u16> {
        let mut v = Vec::with_capacity(self.width * self.height);
        for y in 0..self.height {
            v.extend(self.row(y).iter().map(|s| s.to_u16()));
        }
        v
    }

    /// Converts to another storage type. Values are preserved.
    pub fn convert<Q: Pixel>(&self) -> Plane<Q> {
        let mut out = Plane::<Q>::new(self.width, self.height, self.bit_depth);
        for y in 0..self.height {
            for (d, s) in out.row_mut(y).iter_mut().zip(self.row(y)) {
                *d = Q::from_i32(s.to_i32());
            }
        }
        out
    }

    /// True when every sample is within the bit-depth range.
    pub fn in_range(&self) -> bool {
        let max = self.max_value();
        (0..self.height).all(|y| self.row(y).iter().all(|s| s.to_i32() <= max))
    }
}


/// Read-only view of rows `[first_row, last_row)` of a plane. `height` is the
/// full plane height, used for edge clamping.
#[derive(Clone, Copy)]
pub struct PlaneRef<'a, P: Pixel> {
    data: &'a [P],
    pub stride: usize,
    pub width: usize,
    pub height: usize,
    pub first_row: usize,
    pub last_row: usize,
}

impl<'a, P: Pixel> PlaneRef<'a, P> {
    /// `data` starts at `first_row` and must hold `last_row - first_row` rows.
    pub fn new(data: &'a [P], stride: usize, width: usize, height: usize, first_row: usize, last_row: usize) -> Self {
        assert!(last_row <= height && first_row <= last_row);
        assert!(data.len() >= (last_row - first_row).saturating_sub(1) * stride + width.min(stride) || first_row == last_row);
        Self { data, stride, width, height, first_row, last_row }
    }

    #[inline(always)]
    pub fn row(&self, y: usize) -> &'a [P] {
        debug_assert!(y >= self.first_row && y < self.last_row, "row {y} outside view {}..{}", self.first_row, self.last_row);
        let o = (y - self.first_row) * self.stride;
        &self.data[o..o + self.width]
    }

    #[inline(always)]
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.row(y)[x].to_i32()
    }

    /// Sample at clamped coordinates (edge replication against the full plane).
    #[inline(always)]
    pub fn get_clamped(&self, x: isize, y: isize) -> i32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }
}

/// Mutable view of rows `[first_row, last_row)` of a plane.
pub struct PlaneMut<'a, P: Pixel> {
    data: &'a mut [P],
    pub stride: usize,
    pub width: usize,
    pub height: usize,
    pub first_row: usize,
    pub last_row: usize,
}

impl<'a, P: Pixel> PlaneMut<'a, P> {
    pub fn new(data: &'a mut [P], stride: usize, width: usize, height: usize, first_row: usize, last_row: usize) -> Self {
        assert!(last_row <= height && first_row <= last_row);
        Self { data, stride, width, height, first_row, last_row }
    }

    #[inline(always)]
    pub fn row(&self, y: usize) -> &[P] {
        debug_assert!(y >= self.first_row && y < self.last_row, "row {y} outside view {}..{}", self.first_row, self.last_row);
        let o = (y - self.first_row) * self.stride;
        &self.data[o..o + self.width]
    }

    #[inline(always)]
    pub fn row_mut(&mut self, y: usize) -> &mut [P] {
        debug_assert!(y >= self.first_row && y < self.last_row, "row {y} outside view {}..{}", self.first_row, self.last_row);
        let o = (y - self.first_row) * self.stride;
        &mut self.data[o..o + self.width]
    }

    #[inline(always)]
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.row(y)[x].to_i32()
    }

    #[inline(always)]
    pub fn set(&mut self, x: usize, y: usize, v: i32) {
        self.row_mut(y)[x] = P::from_i32(v);
    }

    pub fn as_ref(&self) -> PlaneRef<'_, P> {
        PlaneRef { data: self.data, stride: self.stride, width: self.width, height: self.height, first_row: self.first_row, last_row: self.last_row }
    }
}

impl<P: Pixel> Plane<P> {
    pub fn view(&self) -> PlaneRef<'_, P> {
        PlaneRef::new(&self.data, self.stride, self.width, self.height, 0, self.height)
    }

    pub fn view_mut(&mut self) -> PlaneMut<'_, P> {
        let (s, w, h) = (self.stride, self.width, self.height);
        PlaneMut::new(&mut self.data, s, w, h, 0, h)
    }
}

/// Read access to exact row spans, for sources shared with concurrent
/// writers of other spans.
pub trait RowSource<P: Pixel> {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn span(&self, y: usize, x0: usize, x1: usize) -> &[P];
    fn sample(&self, x: usize, y: usize) -> i32 {
        self.span(y, x, x + 1)[0].to_i32()
    }
}

impl<P: Pixel> RowSource<P> for PlaneRef<'_, P> {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn span(&self, y: usize, x0: usize, x1: usize) -> &[P] {
        &self.row(y)[x0..x1]
    }
}

impl<P: Pixel> RowSource<P> for Plane<P> {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn span(&self, y: usize, x0: usize, x1: usize) -> &[P] {
        &self.row(y)[x0..x1]
    }
}
