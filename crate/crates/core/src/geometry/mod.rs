//! Planar geometry over convex text regions.
//!
//! All coordinates are image pixels with `y` growing downward. Orientation
//! words ("counterclockwise", "bottom-left") describe how a region looks on
//! screen, so a counterclockwise ring has a *negative* raw shoelace sum.
//! The helpers [`turn`] and [`ring_area2`] flip that sign so positive always
//! means counterclockwise on screen.

mod polygon;
mod quad;
mod rect;

pub use polygon::{difference, intersect, iou, ConvexPolygon};
pub use quad::{canonicalize, QuadBox};
pub use rect::min_area_rect;

use thiserror::Error;

/// Absolute area tolerance in squared pixels.
pub const AREA_EPS: f64 = 1e-9;

/// Pieces of a difference smaller than this fraction of the minuend are dropped.
pub const DUST_FRACTION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("coordinate is not finite")]
    NonFiniteCoordinate,
    #[error("quadrilateral is not convex")]
    NonConvexQuad,
    #[error("quadrilateral edges cross each other")]
    SelfIntersectingQuad,
    #[error("quadrilateral has zero area")]
    ZeroAreaQuad,
    #[error("polygon is not convex")]
    NonConvexPolygon,
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
}

/// A point in image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub(crate) fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    #[inline]
    pub(crate) fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Twice the signed area of triangle `a, b, c`; positive when `a -> b -> c`
/// turns counterclockwise on screen.
#[inline]
pub(crate) fn turn(a: Point, b: Point, c: Point) -> f64 {
    let u = b.sub(a);
    let v = c.sub(a);
    // raw cross product is positive for a counterclockwise turn in y-up space
    -(u.x * v.y - u.y * v.x)
}

/// Twice the signed area of a ring, positive when counterclockwise on screen.
pub(crate) fn ring_area2(pts: &[Point]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        acc += p.x * q.y - q.x * p.y;
    }
    -acc
}
