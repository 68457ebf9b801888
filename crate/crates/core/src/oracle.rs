//! Brute-force raster measurements used to cross-check the exact geometry.
//!
//! Every cell of a regular grid is sampled at its center with a plain
//! point-in-convex-polygon test. Slow on purpose; nothing here shares code
//! with the clipping routines in [`crate::geometry`].

use rand::Rng;

use crate::geometry::{canonicalize, ConvexPolygon, GeometryError, Point, QuadBox};

pub const MIN_RESOLUTION: usize = 64;

/// A regular sampling grid over an axis-aligned window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterGrid {
    resolution: usize,
    origin: Point,
    cell_w: f64,
    cell_h: f64,
}

impl RasterGrid {
    /// A `resolution`×`resolution` grid covering every polygon with one
    /// spare cell on each side.
    pub fn covering(polys: &[&ConvexPolygon], resolution: usize) -> Result<Self, GeometryError> {
        if resolution < MIN_RESOLUTION {
            return Err(GeometryError::DegenerateInput("raster resolution below 64"));
        }
        let bounds = polys
            .iter()
            .filter_map(|p| p.bounds())
            .reduce(|a, b| (a.0.min(b.0), a.1.min(b.1), a.2.max(b.2), a.3.max(b.3)))
            .ok_or(GeometryError::DegenerateInput("nothing to rasterize"))?;
        let (x0, y0, x1, y1) = bounds;
        let inner = (resolution - 2) as f64;
        let cell_w = ((x1 - x0) / inner).max(f64::MIN_POSITIVE);
        let cell_h = ((y1 - y0) / inner).max(f64::MIN_POSITIVE);
        Ok(Self {
            resolution,
            origin: Point::new(x0 - cell_w, y0 - cell_h),
            cell_w,
            cell_h,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_w * self.cell_h
    }

    fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        let n = self.resolution;
        (0..n).flat_map(move |j| {
            let y = self.origin.y + (j as f64 + 0.5) * self.cell_h;
            (0..n).map(move |i| Point::new(self.origin.x + (i as f64 + 0.5) * self.cell_w, y))
        })
    }
}

/// Strict inside test: points on an edge are outside. Orientation-agnostic,
/// so it also works on rings that were never normalized.
pub fn strictly_inside(ring: &[Point], p: Point) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut sign = 0.0f64;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let c = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if c == 0.0 || (sign != 0.0 && c.signum() != sign) {
            return false;
        }
        sign = c.signum();
    }
    true
}

/// Area estimate: covered cell centers times cell area.
pub fn raster_area(p: &ConvexPolygon, grid: &RasterGrid) -> f64 {
    let ring = p.vertices();
    let hits = grid.centers().filter(|&c| strictly_inside(ring, c)).count();
    hits as f64 * grid.cell_area()
}

/// IoU estimate: centers inside both over centers inside either.
pub fn raster_iou(a: &ConvexPolygon, b: &ConvexPolygon, grid: &RasterGrid) -> Result<f64, GeometryError> {
    let (ra, rb) = (a.vertices(), b.vertices());
    let (mut both, mut either) = (0usize, 0usize);
    for c in grid.centers() {
        let ia = strictly_inside(ra, c);
        let ib = strictly_inside(rb, c);
        both += (ia && ib) as usize;
        either += (ia || ib) as usize;
    }
    if either == 0 {
        return Err(GeometryError::DegenerateInput("no raster cell falls in either polygon"));
    }
    Ok(both as f64 / either as f64)
}

/// Grid covering both polygons, then [`raster_iou`].
pub fn raster_iou_at(a: &ConvexPolygon, b: &ConvexPolygon, resolution: usize) -> Result<f64, GeometryError> {
    let grid = RasterGrid::covering(&[a, b], resolution)?;
    raster_iou(a, b, &grid)
}

/// A random convex quad inside `[0, extent]²`: four points on a rotated
/// ellipse, one per quarter turn.
pub fn random_convex_quad<R: Rng + ?Sized>(rng: &mut R, extent: f64) -> QuadBox {
    let rx = rng.gen_range(0.02..0.3) * extent;
    let ry = rng.gen_range(0.01..0.15) * extent;
    let r = rx.max(ry);
    let cx = rng.gen_range(r..extent - r);
    let cy = rng.gen_range(r..extent - r);
    random_quad_around(rng, cx, cy, rx, ry)
}

fn random_quad_around<R: Rng + ?Sized>(rng: &mut R, cx: f64, cy: f64, rx: f64, ry: f64) -> QuadBox {
    let tilt: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (ts, tc) = tilt.sin_cos();
    let corners = [0.0, 1.0, 2.0, 3.0].map(|k: f64| {
        let a = k * std::f64::consts::FRAC_PI_2 + rng.gen_range(-0.6..0.6);
        let (s, c) = a.sin_cos();
        let (u, v) = (rx * c, ry * s);
        Point::new(cx + u * tc - v * ts, cy + u * ts + v * tc)
    });
    canonicalize(corners).expect("points on an ellipse in angular order form a convex quad")
}

/// Two random quads. Half the time the second is a perturbed copy of the
/// first so that heavy overlaps are well represented.
pub fn random_quad_pair<R: Rng + ?Sized>(rng: &mut R, extent: f64) -> (QuadBox, QuadBox) {
    let a = random_convex_quad(rng, extent);
    if rng.gen_bool(0.5) {
        return (a, random_convex_quad(rng, extent));
    }
    let (x0, y0, x1, y1) = a.to_polygon().bounds().unwrap_or_default();
    let (w, h) = (x1 - x0, y1 - y0);
    let r = 0.6 * w.max(h);
    let cx = ((x0 + x1) / 2.0 + rng.gen_range(-0.3..0.3) * w).clamp(r, extent - r);
    let cy = ((y0 + y1) / 2.0 + rng.gen_range(-0.3..0.3) * h).clamp(r, extent - r);
    let (rx, ry) = (w * rng.gen_range(0.3..0.6), h * rng.gen_range(0.3..0.6));
    let b = random_quad_around(rng, cx, cy, rx, ry);
    (a, b)
}
