//! Axis-aligned box arithmetic.
//!
//! Continuous boxes are stored COCO-style as `(x, y, w, h)`. Rectangles derived
//! from raster masks are [`PixelRect`]s with inclusive pixel extents, so a single
//! pixel at `(3, 4)` is the rectangle `(3, 4, 1, 1)`.
//!
//! Containment is decided on the stored coordinates: when one interval lies inside
//! another, the inner interval is returned untouched instead of being recomputed as
//! `min(right) - max(left)`. This keeps `iou(a, a) == 1` exact and lets clipping a
//! fully interior box return it bit-for-bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Area threshold between small and medium objects (32²).
pub const SMALL_AREA_MAX: f64 = 32.0 * 32.0;
/// Area threshold between medium and large objects (96²).
pub const MEDIUM_AREA_MAX: f64 = 96.0 * 96.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox<T> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

/// COCO size bucket of a box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AreaClass {
    Small,
    Medium,
    Large,
}

impl AreaClass {
    pub const ALL: [AreaClass; 3] = [AreaClass::Small, AreaClass::Medium, AreaClass::Large];

    /// Boundary areas go to the larger class.
    pub fn of_area(area: f64) -> AreaClass {
        if area < SMALL_AREA_MAX {
            AreaClass::Small
        } else if area < MEDIUM_AREA_MAX {
            AreaClass::Medium
        } else {
            AreaClass::Large
        }
    }
}

/// Overlap of `[a0, a0 + al)` and `[b0, b0 + bl)` as `(start, length)`.
/// The length is non-positive when the intervals do not overlap.
fn interval_overlap<T: Scalar>(a0: T, al: T, b0: T, bl: T) -> (T, T) {
    let a1 = a0 + al;
    let b1 = b0 + bl;
    let a_in_b = a0 >= b0 && a1 <= b1;
    let b_in_a = b0 >= a0 && b1 <= a1;
    match (a_in_b, b_in_a) {
        (true, true) => (a0, al.min(bl)),
        (true, false) => (a0, al),
        (false, true) => (b0, bl),
        (false, false) => {
            let start = a0.max(b0);
            let end = a1.min(b1);
            let mut len = end - start;
            // keep start + len within both intervals despite rounding
            while len > T::zero() && start + len > end {
                len -= end.abs() * T::epsilon();
            }
            (start, len)
        }
    }
}

impl<T: Scalar> BoundingBox<T> {
    /// Builds a validated box: finite coordinates, `x, y >= 0`, `w, h > 0`.
    pub fn new(x: T, y: T, w: T, h: T) -> Result<Self> {
        let b = BoundingBox { x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite();
        if !finite {
            return Err(Error::InvalidBox(format!("non-finite coordinates {self:?}")));
        }
        if self.x < T::zero() || self.y < T::zero() {
            return Err(Error::InvalidBox(format!("negative origin {self:?}")));
        }
        if self.w <= T::zero() || self.h <= T::zero() {
            return Err(Error::InvalidBox(format!("non-positive size {self:?}")));
        }
        Ok(())
    }

    /// Box spanning `[x1, x2) × [y1, y2)`, or `None` when degenerate.
    pub fn from_corners(x1: T, y1: T, x2: T, y2: T) -> Option<Self> {
        let (w, h) = (x2 - x1, y2 - y1);
        (w > T::zero() && h > T::zero()).then_some(BoundingBox { x: x1, y: y1, w, h })
    }

    pub fn right(&self) -> T {
        self.x + self.w
    }

    pub fn bottom(&self) -> T {
        self.y + self.h
    }

    pub fn area(&self) -> T {
        self.w * self.h
    }

    pub fn center(&self) -> (T, T) {
        let half = T::lit(0.5);
        (self.x + self.w * half, self.y + self.h * half)
    }

    pub fn area_class(&self) -> AreaClass {
        AreaClass::of_area(self.area().as_f64())
    }

    /// Intersection rectangle, or `None` when it is empty or degenerate.
    pub fn clip(&self, region: &BoundingBox<T>) -> Option<BoundingBox<T>> {
        let (x, w) = interval_overlap(self.x, self.w, region.x, region.w);
        let (y, h) = interval_overlap(self.y, self.h, region.y, region.h);
        (w > T::zero() && h > T::zero()).then_some(BoundingBox { x, y, w, h })
    }

    pub fn intersection_area(&self, other: &BoundingBox<T>) -> T {
        let (_, w) = interval_overlap(self.x, self.w, other.x, other.w);
        let (_, h) = interval_overlap(self.y, self.h, other.y, other.h);
        if w > T::zero() && h > T::zero() {
            w * h
        } else {
            T::zero()
        }
    }

    /// Intersection over union, in `[0, 1]`.
    pub fn iou(&self, other: &BoundingBox<T>) -> T {
        let inter = self.intersection_area(other);
        if inter <= T::zero() {
            return T::zero();
        }
        let union = self.area() + other.area() - inter;
        (inter / union).min(T::one())
    }

    pub fn contains(&self, other: &BoundingBox<T>) -> bool {
        other.x >= self.x && other.y >= self.y && other.right() <= self.right() && other.bottom() <= self.bottom()
    }

    /// Half-open containment test `[x, x + w) × [y, y + h)`.
    pub fn contains_point(&self, px: T, py: T) -> bool {
        px >= self.x && py >= self.y && px < self.right() && py < self.bottom()
    }

    pub fn translate(&self, dx: T, dy: T) -> BoundingBox<T> {
        BoundingBox { x: self.x + dx, y: self.y + dy, w: self.w, h: self.h }
    }

    pub fn scale(&self, factor: T) -> BoundingBox<T> {
        BoundingBox { x: self.x * factor, y: self.y * factor, w: self.w * factor, h: self.h * factor }
    }

    pub fn cast<U: Scalar>(&self) -> BoundingBox<U> {
        BoundingBox {
            x: U::lit(self.x.as_f64()),
            y: U::lit(self.y.as_f64()),
            w: U::lit(self.w.as_f64()),
            h: U::lit(self.h.as_f64()),
        }
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.x, self.y, self.w, self.h]
    }
}

/// Free-function form of [`BoundingBox::iou`].
pub fn iou<T: Scalar>(a: &BoundingBox<T>, b: &BoundingBox<T>) -> T {
    a.iou(b)
}

/// Integer pixel rectangle with inclusive extents: covers columns `x..x + w`
/// and rows `y..y + h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl PixelRect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::InvalidBox(format!("empty pixel rect {w}x{h}")));
        }
        Ok(PixelRect { x, y, w, h })
    }

    /// Last covered column.
    pub fn max_x(&self) -> u32 {
        self.x + self.w - 1
    }

    /// Last covered row.
    pub fn max_y(&self) -> u32 {
        self.y + self.h - 1
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn contains_pixel(&self, px: u32, py: u32) -> bool {
        px >= self.x && py >= self.y && px <= self.max_x() && py <= self.max_y()
    }

    /// The continuous box covering every pixel of the rectangle.
    pub fn to_box<T: Scalar>(&self) -> BoundingBox<T> {
        BoundingBox {
            x: T::lit(self.x as f64),
            y: T::lit(self.y as f64),
            w: T::lit(self.w as f64),
            h: T::lit(self.h as f64),
        }
    }
}

/// Minimal rectangle containing every pixel coordinate `(x, y)`.
pub fn circumscribed_rect<I>(points: I) -> Result<PixelRect>
where
    I: IntoIterator<Item = (u32, u32)>,
{
    let mut iter = points.into_iter();
    let (x0, y0) = iter.next().ok_or(Error::EmptyRegion)?;
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (x0, y0, x0, y0);
    for (x, y) in iter {
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    }
    Ok(PixelRect { x: min_x, y: min_y, w: max_x - min_x + 1, h: max_y - min_y + 1 })
}
