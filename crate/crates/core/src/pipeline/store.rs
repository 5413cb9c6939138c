//! Sample planes shared between pipeline jobs without locks. Every accessor
//! that hands out a slice is `unsafe`: the caller guarantees that no
//! concurrent job writes the span it reads, or touches the span it writes.

use std::cell::UnsafeCell;

use crate::kernels::{Pixel, Plane, PlaneMut, PlaneRef, RowSource};

pub struct SharedPlane<P: Pixel> {
    cell: UnsafeCell<Plane<P>>,
    ptr: *mut P,
    width: usize,
    height: usize,
    stride: usize,
    bit_depth: u8,
}

// SAFETY: access discipline is enforced by the job graph (see module docs).
unsafe impl<P: Pixel> Sync for SharedPlane<P> {}
unsafe impl<P: Pixel> Send for SharedPlane<P> {}

impl<P: Pixel> SharedPlane<P> {
    pub fn new(mut plane: Plane<P>) -> Self {
        let ptr = plane.data_mut().as_mut_ptr();
        let (width, height, stride, bit_depth) = (plane.width(), plane.height(), plane.stride(), plane.bit_depth());
        Self { cell: UnsafeCell::new(plane), ptr, width, height, stride, bit_depth }
    }

    pub fn zeroed(width: usize, height: usize, bit_depth: u8) -> Self {
        Self::new(Plane::new(width, height, bit_depth))
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    /// # Safety
    /// No concurrent writer of `(y, x0..x1)`.
    #[inline]
    pub unsafe fn span(&self, y: usize, x0: usize, x1: usize) -> &[P] {
        assert!(y < self.height && x0 <= x1 && x1 <= self.width);
        std::slice::from_raw_parts(self.ptr.add(y * self.stride + x0), x1 - x0)
    }

    /// # Safety
    /// Exclusive access to `(y, x0..x1)` for the lifetime of the slice.
    #[inline]
    #[allow(clippy::mut_from_ref)]
    pub unsafe fn span_mut(&self, y: usize, x0: usize, x1: usize) -> &mut [P] {
        assert!(y < self.height && x0 <= x1 && x1 <= self.width);
        std::slice::from_raw_parts_mut(self.ptr.add(y * self.stride + x0), x1 - x0)
    }

    /// Full-width view of rows `y0..y1`.
    ///
    /// # Safety
    /// No concurrent writer of those rows.
    pub unsafe fn rows(&self, y0: usize, y1: usize) -> PlaneRef<'_, P> {
        assert!(y0 <= y1 && y1 <= self.height);
        let data = std::slice::from_raw_parts(self.ptr.add(y0 * self.stride), (y1 - y0) * self.stride);
        PlaneRef::new(data, self.stride, self.width, self.height, y0, y1)
    }

    /// # Safety
    /// Exclusive access to rows `y0..y1`.
    #[allow(clippy::mut_from_ref)]
    pub unsafe fn rows_mut(&self, y0: usize, y1: usize) -> PlaneMut<'_, P> {
        assert!(y0 <= y1 && y1 <= self.height);
        let data = std::slice::from_raw_parts_mut(self.ptr.add(y0 * self.stride), (y1 - y0) * self.stride);
        PlaneMut::new(data, self.stride, self.width, self.height, y0, y1)
    }

    /// Span-granular reader for kernels that take a [`RowSource`].
    ///
    /// # Safety
    /// Every span the kernel reads is free of concurrent writers.
    pub unsafe fn source(&self) -> SpanSource<'_, P> {
        SpanSource(self)
    }

    pub fn plane(&mut self) -> &Plane<P> {
        self.cell.get_mut()
    }

    pub fn into_plane(self) -> Plane<P> {
        self.cell.into_inner()
    }
}

pub struct SpanSource<'a, P: Pixel>(&'a SharedPlane<P>);

impl<P: Pixel> RowSource<P> for SpanSource<'_, P> {
    fn width(&self) -> usize {
        self.0.width
    }
    fn height(&self) -> usize {
        self.0.height
    }
    fn span(&self, y: usize, x0: usize, x1: usize) -> &[P] {
        // SAFETY: upheld by the creator of this source.
        unsafe { self.0.span(y, x0, x1) }
    }
}
