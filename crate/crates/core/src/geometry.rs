//! Planar and spatial geometry helpers shared by the world, visibility and
//! roadmap code.

use nalgebra::{Point2, Point3, Vector2, Vector3};

pub type P2 = Point2<f64>;
pub type V2 = Vector2<f64>;
pub type P3 = Point3<f64>;
pub type V3 = Vector3<f64>;

/// Tolerance for orientation tests on floorplan coordinates (meters).
pub const GEOM_EPS: f64 = 1e-12;

/// Twice the signed area of the triangle (a, b, c); positive when CCW.
#[inline]
pub fn orient(a: &P2, b: &P2, c: &P2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

#[inline]
fn sign_eps(v: f64) -> i8 {
    if v > GEOM_EPS {
        1
    } else if v < -GEOM_EPS {
        -1
    } else {
        0
    }
}

#[inline]
fn on_segment(a: &P2, b: &P2, p: &P2) -> bool {
    p.x >= a.x.min(b.x) - GEOM_EPS
        && p.x <= a.x.max(b.x) + GEOM_EPS
        && p.y >= a.y.min(b.y) - GEOM_EPS
        && p.y <= a.y.max(b.y) + GEOM_EPS
}

/// Closed-segment intersection, counting touching endpoints and collinear
/// overlap as intersecting.
pub fn segments_intersect(p1: &P2, p2: &P2, q1: &P2, q2: &P2) -> bool {
    let d1 = sign_eps(orient(q1, q2, p1));
    let d2 = sign_eps(orient(q1, q2, p2));
    let d3 = sign_eps(orient(p1, p2, q1));
    let d4 = sign_eps(orient(p1, p2, q2));
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && on_segment(q1, q2, p1))
        || (d2 == 0 && on_segment(q1, q2, p2))
        || (d3 == 0 && on_segment(p1, p2, q1))
        || (d4 == 0 && on_segment(p1, p2, q2))
}

/// Signed area of a polygon (positive when counter-clockwise).
pub fn polygon_area(poly: &[P2]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

/// Even-odd point-in-polygon. Points on the boundary may go either way.
pub fn point_in_polygon(p: &P2, poly: &[P2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Euclidean distance from `p` to the closed segment [a, b].
pub fn point_segment_distance(p: &P2, a: &P2, b: &P2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// True when the polygon has no pair of non-adjacent edges that touch.
pub fn is_simple_polygon(poly: &[P2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a1, a2) = (poly[i], poly[(i + 1) % n]);
        if (a2 - a1).norm() == 0.0 {
            return false;
        }
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b1, b2) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(&a1, &a2, &b1, &b2) {
                return false;
            }
        }
    }
    true
}

/// Closest distance from `p` to a triangle in 3D.
pub fn point_triangle_distance(p: &P3, a: &P3, b: &P3, c: &P3) -> f64 {
    (p - closest_point_on_triangle(p, a, b, c)).norm()
}

/// Closest point on triangle (a, b, c) to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &P3, a: &P3, b: &P3, c: &P3) -> P3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Möller–Trumbore ray/triangle test. Returns the ray parameter of the hit.
pub fn ray_triangle(origin: &P3, dir: &V3, a: &P3, b: &P3, c: &P3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-15 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = inv * s.dot(&h);
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = inv * dir.dot(&q);
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = inv * e2.dot(&q);
    (t > 0.0).then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_and_touching_segments() {
        let p = |x, y| P2::new(x, y);
        assert!(segments_intersect(&p(0., 0.), &p(1., 1.), &p(0., 1.), &p(1., 0.)));
        assert!(!segments_intersect(&p(0., 0.), &p(1., 0.), &p(0., 1.), &p(1., 1.)));
        // endpoint grazing counts
        assert!(segments_intersect(&p(0., 0.), &p(2., 0.), &p(1., 0.), &p(1., 1.)));
        // collinear overlap
        assert!(segments_intersect(&p(0., 0.), &p(2., 0.), &p(1., 0.), &p(3., 0.)));
        assert!(!segments_intersect(&p(0., 0.), &p(1., 0.), &p(2., 0.), &p(3., 0.)));
    }

    #[test]
    fn polygon_helpers() {
        let sq = [P2::new(0., 0.), P2::new(1., 0.), P2::new(1., 1.), P2::new(0., 1.)];
        assert!((polygon_area(&sq) - 1.0).abs() < 1e-15);
        assert!(point_in_polygon(&P2::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(&P2::new(1.5, 0.5), &sq));
        assert!(is_simple_polygon(&sq));
        let bow = [P2::new(0., 0.), P2::new(1., 1.), P2::new(1., 0.), P2::new(0., 1.)];
        assert!(!is_simple_polygon(&bow));
    }

    #[test]
    fn triangle_distance_and_ray() {
        let a = P3::new(0., 0., 0.);
        let b = P3::new(1., 0., 0.);
        let c = P3::new(0., 1., 0.);
        assert!((point_triangle_distance(&P3::new(0.2, 0.2, 0.5), &a, &b, &c) - 0.5).abs() < 1e-12);
        assert!((point_triangle_distance(&P3::new(2., 0., 0.), &a, &b, &c) - 1.0).abs() < 1e-12);
        let t = ray_triangle(&P3::new(0.2, 0.2, 1.0), &V3::new(0., 0., -1.), &a, &b, &c);
        assert!((t.unwrap() - 1.0).abs() < 1e-12);
        assert!(ray_triangle(&P3::new(2., 2., 1.0), &V3::new(0., 0., -1.), &a, &b, &c).is_none());
    }
}
