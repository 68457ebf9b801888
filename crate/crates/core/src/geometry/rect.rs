use super::{canonicalize, ConvexPolygon, GeometryError, Point, QuadBox, AREA_EPS};

/// Smallest-area rectangle enclosing a convex polygon.
///
/// The optimal rectangle has a side flush with some polygon edge, so trying
/// every edge direction finds it. Ties keep the earliest edge.
pub fn min_area_rect(p: &ConvexPolygon) -> Result<QuadBox, GeometryError> {
    if p.area() <= AREA_EPS {
        return Err(GeometryError::DegenerateInput("polygon has zero area"));
    }
    let vs = p.vertices();
    let n = vs.len();
    let mut best: Option<(f64, [Point; 4])> = None;
    for i in 0..n {
        let d = vs[(i + 1) % n].sub(vs[i]);
        let len = d.x.hypot(d.y);
        if len == 0.0 {
            continue;
        }
        let u = Point::new(d.x / len, d.y / len);
        let v = Point::new(-u.y, u.x);
        let (mut u_lo, mut u_hi, mut v_lo, mut v_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for q in vs {
            let a = q.x * u.x + q.y * u.y;
            let b = q.x * v.x + q.y * v.y;
            u_lo = u_lo.min(a);
            u_hi = u_hi.max(a);
            v_lo = v_lo.min(b);
            v_hi = v_hi.max(b);
        }
        let area = (u_hi - u_lo) * (v_hi - v_lo);
        if best.as_ref().is_none_or(|(b, _)| area < *b * (1.0 - 1e-12)) {
            let at = |s: f64, t: f64| Point::new(s * u.x + t * v.x, s * u.y + t * v.y);
            best = Some((area, [at(u_lo, v_lo), at(u_hi, v_lo), at(u_hi, v_hi), at(u_lo, v_hi)]));
        }
    }
    let (_, corners) = best.ok_or(GeometryError::DegenerateInput("polygon has no edges"))?;
    canonicalize(corners)
}
