use super::{aabb_of, is_convex, signed_area, triangulate, Vertex2D, EPS};

/// Intersections below this area (m²) are treated as numerical slivers.
pub const SLIVER_AREA: f64 = 1e-6;

/// Keeps the part of `subject` on the left of the directed line `a -> b`
/// (one Sutherland–Hodgman stage).
pub fn clip_half_plane(subject: &[Vertex2D], a: Vertex2D, b: Vertex2D) -> Vec<Vertex2D> {
    let n = subject.len();
    let mut out = Vec::with_capacity(n + 2);
    if n == 0 {
        return out;
    }
    let dir = b.sub(a);
    let side = |p: Vertex2D| dir.cross(p.sub(a));
    for i in 0..n {
        let cur = subject[i];
        let next = subject[(i + 1) % n];
        let (sc, sn) = (side(cur), side(next));
        let cur_in = sc >= -EPS;
        let next_in = sn >= -EPS;
        if cur_in {
            out.push(cur);
        }
        if cur_in != next_in {
            let t = sc / (sc - sn);
            if t.is_finite() {
                out.push(cur.add(next.sub(cur).scale(t)));
            }
        }
    }
    out
}

/// Sutherland–Hodgman clip of an arbitrary simple `subject` against a convex
/// CCW `clip` polygon. For concave subjects the output may contain zero-width
/// bridges, which do not change its signed area.
pub fn clip_convex(subject: &[Vertex2D], clip: &[Vertex2D]) -> Vec<Vertex2D> {
    let n = clip.len();
    let mut out = subject.to_vec();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        out = clip_half_plane(&out, clip[i], clip[(i + 1) % n]);
    }
    out
}

fn ccw(polygon: &[Vertex2D]) -> Vec<Vertex2D> {
    let mut p = polygon.to_vec();
    if signed_area(&p) < 0.0 {
        p.reverse();
    }
    p
}

/// Area of the intersection of two simple polygons.
///
/// When either operand is convex it serves as the clip window directly.
/// Otherwise one operand is ear-clipped into triangles and the other is
/// clipped against each triangle; the triangles partition the operand, so the
/// partial areas sum to the exact intersection. Results under
/// [`SLIVER_AREA`] resolve to zero.
pub fn polygon_intersection_area(a: &[Vertex2D], b: &[Vertex2D]) -> f64 {
    if a.len() < 3 || b.len() < 3 || !aabb_of(a).overlaps(&aabb_of(b)) {
        return 0.0;
    }
    let a = ccw(a);
    let b = ccw(b);
    let area = if is_convex(&b) {
        signed_area(&clip_convex(&a, &b))
    } else if is_convex(&a) {
        signed_area(&clip_convex(&b, &a))
    } else {
        match triangulate(&b) {
            Ok(tris) => tris
                .iter()
                .map(|t| {
                    let tri = [b[t[0]], b[t[1]], b[t[2]]];
                    signed_area(&clip_convex(&a, &tri))
                })
                .sum(),
            Err(_) => return 0.0,
        }
    };
    if area < SLIVER_AREA {
        0.0
    } else {
        area
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pts;

    fn square(x: f64, y: f64, s: f64) -> Vec<Vertex2D> {
        pts(&[(x, y), (x + s, y), (x + s, y + s), (x, y + s)])
    }

    #[test]
    fn convex_cases() {
        assert_eq!(polygon_intersection_area(&square(0.0, 0.0, 10.0), &square(20.0, 0.0, 10.0)), 0.0);
        let a = square(0.0, 0.0, 10.0);
        assert!((polygon_intersection_area(&a, &a) - 100.0).abs() < 1e-9);
        let b = square(5.0, 5.0, 10.0);
        assert!((polygon_intersection_area(&a, &b) - 25.0).abs() < 1e-9);
    }

    #[test]
    fn concave_pair() {
        // Two L-shapes; the second is the first shifted by (1, 1).
        let l = pts(&[(0.0, 0.0), (4.0, 0.0), (4.0, 1.0), (1.0, 1.0), (1.0, 3.0), (0.0, 3.0)]);
        let shifted: Vec<_> = l.iter().map(|p| Vertex2D::new(p.x + 0.5, p.y + 0.5)).collect();
        // Overlap: [0.5,4]x[0.5,1] plus [0.5,1]x[1,3], i.e. 3.5*0.5 + 0.5*2.0.
        let got = polygon_intersection_area(&l, &shifted);
        assert!((got - 2.75).abs() < 1e-9, "{got}");
    }

    #[test]
    fn touching_is_zero() {
        let a = square(0.0, 0.0, 10.0);
        let b = square(10.0, 0.0, 10.0);
        assert_eq!(polygon_intersection_area(&a, &b), 0.0);
    }
}
