use super::{ring_area2, turn, ConvexPolygon, GeometryError, Point, AREA_EPS};

/// A convex four-corner text region.
///
/// Corners run counterclockwise on screen starting from the bottom-left
/// corner, i.e. the corner with the largest `y` (ties: smallest `x`).
/// Only [`canonicalize`] constructs one, so the invariants always hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadBox {
    corners: [Point; 4],
}

impl QuadBox {
    pub fn corners(&self) -> &[Point; 4] {
        &self.corners
    }

    /// The bottom-left corner, which sorts output files.
    pub fn anchor(&self) -> Point {
        self.corners[0]
    }

    pub fn area(&self) -> f64 {
        ring_area2(&self.corners) / 2.0
    }

    pub fn to_polygon(&self) -> ConvexPolygon {
        ConvexPolygon::from_clip(self.corners.to_vec())
    }

    /// Axis-aligned box spanning two opposite corners.
    pub fn axis_aligned(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        canonicalize([
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    /// Builds a box from `x1,y1,...,x4,y4`.
    pub fn from_coords(c: [f64; 8]) -> Result<Self, GeometryError> {
        canonicalize([
            Point::new(c[0], c[1]),
            Point::new(c[2], c[3]),
            Point::new(c[4], c[5]),
            Point::new(c[6], c[7]),
        ])
    }

    pub fn to_coords(&self) -> [f64; 8] {
        let c = &self.corners;
        [c[0].x, c[0].y, c[1].x, c[1].y, c[2].x, c[2].y, c[3].x, c[3].y]
    }

    pub fn iou(&self, other: &QuadBox) -> f64 {
        // both areas are positive by construction
        super::iou(&self.to_polygon(), &other.to_polygon()).unwrap_or(0.0)
    }
}

/// Orders four raw corners counterclockwise from the bottom-left corner.
pub fn canonicalize(raw: [Point; 4]) -> Result<QuadBox, GeometryError> {
    if raw.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::NonFiniteCoordinate);
    }
    if segments_cross(raw[0], raw[1], raw[2], raw[3]) || segments_cross(raw[1], raw[2], raw[3], raw[0]) {
        return Err(GeometryError::SelfIntersectingQuad);
    }
    let area2 = ring_area2(&raw);
    if area2.abs() / 2.0 <= AREA_EPS {
        return Err(GeometryError::ZeroAreaQuad);
    }
    let mut corners = raw;
    if area2 < 0.0 {
        corners.reverse();
    }
    // a straight angle counts as convex; anything turning the wrong way does not
    let reflex = (0..4).any(|i| turn(corners[(i + 3) % 4], corners[i], corners[(i + 1) % 4]) / 2.0 < -AREA_EPS);
    if reflex {
        return Err(GeometryError::NonConvexQuad);
    }
    let start = (0..4)
        .max_by(|&i, &j| {
            let (a, b) = (corners[i], corners[j]);
            a.y.total_cmp(&b.y).then(b.x.total_cmp(&a.x)).then(j.cmp(&i))
        })
        .unwrap_or(0);
    corners.rotate_left(start);
    Ok(QuadBox { corners })
}

/// True when the open segments `p1-p2` and `q1-q2` cross at a single point.
fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = turn(p1, p2, q1);
    let d2 = turn(p1, p2, q2);
    let d3 = turn(q1, q2, p1);
    let d4 = turn(q1, q2, p2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(c: [(f64, f64); 4]) -> [Point; 4] {
        c.map(Point::from)
    }

    #[test]
    fn clockwise_input_is_reordered() {
        // bottom-left, top-left, top-right, bottom-right: clockwise on screen
        let q = canonicalize(pts([(0.0, 5.0), (0.0, 0.0), (10.0, 0.0), (10.0, 5.0)])).unwrap();
        assert_eq!(
            q.corners(),
            &pts([(0.0, 5.0), (10.0, 5.0), (10.0, 0.0), (0.0, 0.0)])
        );
        assert_eq!(q.area(), 50.0);
    }

    #[test]
    fn bow_tie_is_rejected() {
        let err = canonicalize(pts([(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]));
        assert_eq!(err, Err(GeometryError::SelfIntersectingQuad));
    }

    #[test]
    fn dart_is_rejected() {
        let err = canonicalize(pts([(0.0, 0.0), (4.0, 0.0), (1.0, 1.0), (0.0, 4.0)]));
        assert_eq!(err, Err(GeometryError::NonConvexQuad));
    }

    #[test]
    fn flat_and_non_finite_are_rejected() {
        let flat = canonicalize(pts([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]));
        assert_eq!(flat, Err(GeometryError::ZeroAreaQuad));
        let nan = canonicalize(pts([(f64::NAN, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]));
        assert_eq!(nan, Err(GeometryError::NonFiniteCoordinate));
    }

    #[test]
    fn rotated_quad_starts_at_lowest_corner() {
        // diamond; the lowest corner on screen is (5, 10)
        let raw = pts([(10.0, 5.0), (5.0, 0.0), (0.0, 5.0), (5.0, 10.0)]);
        let q = canonicalize(raw).unwrap();
        let expected_first = raw
            .iter()
            .copied()
            .max_by(|a, b| a.y.total_cmp(&b.y).then(b.x.total_cmp(&a.x)))
            .unwrap();
        assert_eq!(q.anchor(), expected_first);
        assert!(q.area() > 0.0);
        assert_eq!(canonicalize(*q.corners()).unwrap(), q);
    }

    #[test]
    fn tie_on_y_takes_smaller_x() {
        let q = QuadBox::axis_aligned(3.0, 1.0, 9.0, 4.0).unwrap();
        assert_eq!(q.anchor(), Point::new(3.0, 4.0));
        assert_eq!(q.corners()[1], Point::new(9.0, 4.0));
    }
}
