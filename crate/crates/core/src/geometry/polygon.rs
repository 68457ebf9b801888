use super::{ring_area2, turn, GeometryError, Point, AREA_EPS, DUST_FRACTION};

/// A convex polygon stored counterclockwise (on screen).
///
/// The empty polygon has no vertices and zero area. Any polygon whose area
/// falls under [`AREA_EPS`] collapses to the empty polygon.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        Self { vertices: Vec::new() }
    }

    /// Builds a polygon from vertices in either orientation.
    ///
    /// Repeated and collinear vertices are removed. Rings that are not convex
    /// are rejected; rings with no area become the empty polygon.
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        let mut ring = simplify(vertices);
        if ring.len() < 3 || ring_area2(&ring).abs() / 2.0 <= AREA_EPS {
            return Ok(Self::empty());
        }
        if ring_area2(&ring) < 0.0 {
            ring.reverse();
        }
        let n = ring.len();
        let convex = (0..n).all(|i| turn(ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]) > 0.0);
        if !convex {
            return Err(GeometryError::NonConvexPolygon);
        }
        Ok(Self { vertices: ring })
    }

    /// Wraps the output of a convex clip. The ring is already oriented.
    pub(crate) fn from_clip(vertices: Vec<Point>) -> Self {
        let ring = simplify(vertices);
        if ring.len() < 3 || ring_area2(&ring) / 2.0 <= AREA_EPS {
            return Self::empty();
        }
        Self { vertices: ring }
    }

    /// Axis-aligned rectangle spanning two opposite corners.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Self::new(vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        (ring_area2(&self.vertices) / 2.0).max(0.0)
    }

    /// Closed containment test.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        n >= 3 && (0..n).all(|i| turn(self.vertices[i], self.vertices[(i + 1) % n], p) >= 0.0)
    }

    /// `(min_x, min_y, max_x, max_y)`, or `None` for the empty polygon.
    pub fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let first = self.vertices.first()?;
        Some(self.vertices.iter().fold(
            (first.x, first.y, first.x, first.y),
            |(x0, y0, x1, y1), p| (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y)),
        ))
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Drops repeated vertices and vertices that sit on the segment between
/// their neighbours.
fn simplify(mut ring: Vec<Point>) -> Vec<Point> {
    loop {
        let n = ring.len();
        if n < 3 {
            return ring;
        }
        let flat = (0..n).find(|&i| {
            let prev = ring[(i + n - 1) % n];
            let next = ring[(i + 1) % n];
            turn(prev, ring[i], next).abs() / 2.0 <= AREA_EPS
        });
        match flat {
            Some(i) => {
                ring.remove(i);
            }
            None => return ring,
        }
    }
}

/// Keeps the part of `ring` on the left of (or on) the directed line `a -> b`.
fn clip_half_plane(ring: &[Point], a: Point, b: Point) -> Vec<Point> {
    let n = ring.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let cur = ring[i];
        let next = ring[(i + 1) % n];
        let sc = turn(a, b, cur);
        let sn = turn(a, b, next);
        if sc >= 0.0 {
            out.push(cur);
        }
        if (sc >= 0.0) != (sn >= 0.0) {
            let t = sc / (sc - sn);
            out.push(cur.lerp(next, t));
        }
    }
    out
}

/// Intersection of two convex polygons, clipping `a` by each edge of `b`.
pub fn intersect(a: &ConvexPolygon, b: &ConvexPolygon) -> ConvexPolygon {
    if a.is_empty() || b.is_empty() {
        return ConvexPolygon::empty();
    }
    let mut ring = a.vertices.clone();
    for (p, q) in b.edges() {
        ring = clip_half_plane(&ring, p, q);
        if ring.len() < 3 {
            return ConvexPolygon::empty();
        }
    }
    ConvexPolygon::from_clip(ring)
}

/// Intersection over union. Symmetric and clamped to `[0, 1]`.
pub fn iou(a: &ConvexPolygon, b: &ConvexPolygon) -> Result<f64, GeometryError> {
    let (area_a, area_b) = (a.area(), b.area());
    if area_a + area_b <= 0.0 {
        return Err(GeometryError::DegenerateInput("both polygons have zero area"));
    }
    // clip the smaller-indexed one by the other so iou(a, b) == iou(b, a) bitwise
    let inter = if order_key(a) <= order_key(b) {
        intersect(a, b).area()
    } else {
        intersect(b, a).area()
    };
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        return Ok(0.0);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

fn order_key(p: &ConvexPolygon) -> Vec<(u64, u64)> {
    p.vertices.iter().map(|v| (v.x.to_bits(), v.y.to_bits())).collect()
}

/// Splits `a \ b` into disjoint convex pieces.
///
/// Piece `i` is the part of `a` outside edge `i` of `b` but inside edges
/// `0..i`, so at most one piece per edge of `b`. Whatever survives all edges
/// is exactly `intersect(a, b)`, which makes the areas add up.
pub fn difference(a: &ConvexPolygon, b: &ConvexPolygon) -> Vec<ConvexPolygon> {
    if a.is_empty() {
        return Vec::new();
    }
    if b.is_empty() {
        return vec![a.clone()];
    }
    let dust = DUST_FRACTION * a.area();
    let mut pieces = Vec::new();
    let mut rest = a.vertices.clone();
    for (p, q) in b.edges() {
        if rest.len() < 3 {
            break;
        }
        let outside = ConvexPolygon::from_clip(clip_half_plane(&rest, q, p));
        if !outside.is_empty() && outside.area() >= dust {
            pieces.push(outside);
        }
        rest = clip_half_plane(&rest, p, q);
    }
    if ConvexPolygon::from_clip(rest).is_empty() {
        // b misses a entirely: return a untouched rather than its shards
        return vec![a.clone()];
    }
    pieces
}
