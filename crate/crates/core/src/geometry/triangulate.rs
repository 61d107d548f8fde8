use thiserror::Error;

use super::{signed_area, Vertex2D, EPS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TriangulationError {
    #[error("polygon has fewer than three vertices")]
    TooFewVertices,
    #[error("no ear found with {remaining} vertices left; polygon is not simple")]
    NoEar { remaining: usize },
}

fn strictly_inside_or_on(p: Vertex2D, a: Vertex2D, b: Vertex2D, c: Vertex2D) -> bool {
    let d1 = b.sub(a).cross(p.sub(a));
    let d2 = c.sub(b).cross(p.sub(b));
    let d3 = a.sub(c).cross(p.sub(c));
    d1 >= -EPS && d2 >= -EPS && d3 >= -EPS
}

/// Ear-clipping triangulation of a simple, hole-free polygon.
///
/// Returns index triples into `polygon`, each wound counter-clockwise. Ears
/// must be strictly convex, so collinear vertices never produce zero-area
/// triangles.
pub fn triangulate(polygon: &[Vertex2D]) -> Result<Vec<[usize; 3]>, TriangulationError> {
    let n = polygon.len();
    if n < 3 {
        return Err(TriangulationError::TooFewVertices);
    }
    let mut ring: Vec<usize> = (0..n).collect();
    if signed_area(polygon) < 0.0 {
        ring.reverse();
    }
    let mut out = Vec::with_capacity(n - 2);
    while ring.len() > 3 {
        let m = ring.len();
        let ear = (0..m).find(|&i| {
            let ia = ring[(i + m - 1) % m];
            let ib = ring[i];
            let ic = ring[(i + 1) % m];
            let (a, b, c) = (polygon[ia], polygon[ib], polygon[ic]);
            if b.sub(a).cross(c.sub(b)) <= EPS {
                return false;
            }
            ring.iter().all(|&k| {
                k == ia || k == ib || k == ic || {
                    let p = polygon[k];
                    // A coincident vertex elsewhere on the ring is allowed only
                    // if it is literally one of the ear's corners.
                    !strictly_inside_or_on(p, a, b, c)
                }
            })
        });
        let Some(i) = ear else {
            return Err(TriangulationError::NoEar { remaining: m });
        };
        out.push([ring[(i + m - 1) % m], ring[i], ring[(i + 1) % m]]);
        ring.remove(i);
    }
    let (a, b, c) = (polygon[ring[0]], polygon[ring[1]], polygon[ring[2]]);
    if b.sub(a).cross(c.sub(a)).abs() <= EPS {
        return Err(TriangulationError::NoEar { remaining: 3 });
    }
    out.push([ring[0], ring[1], ring[2]]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pts;

    fn total_area(poly: &[Vertex2D], tris: &[[usize; 3]]) -> f64 {
        tris.iter()
            .map(|t| signed_area(&[poly[t[0]], poly[t[1]], poly[t[2]]]))
            .sum()
    }

    #[test]
    fn square_gives_two_triangles() {
        let sq = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let tris = triangulate(&sq).unwrap();
        assert_eq!(tris.len(), 2);
        assert!((total_area(&sq, &tris) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l_shape_and_collinear_points() {
        let l = pts(&[(0.0, 0.0), (4.0, 0.0), (4.0, 1.0), (1.0, 1.0), (1.0, 3.0), (0.0, 3.0)]);
        let tris = triangulate(&l).unwrap();
        assert_eq!(tris.len(), 4);
        assert!((total_area(&l, &tris) - 6.0).abs() < 1e-12);

        let ring = pts(&[
            (0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 1.0), (2.0, 2.0), (1.0, 2.0), (0.0, 2.0), (0.0, 1.0),
        ]);
        let tris = triangulate(&ring).unwrap();
        assert_eq!(tris.len(), 6);
        for t in &tris {
            assert!(signed_area(&[ring[t[0]], ring[t[1]], ring[t[2]]]) > 1e-9);
        }
        assert!((total_area(&ring, &tris) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn clockwise_input_is_wound_ccw() {
        let cw = pts(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]);
        let tris = triangulate(&cw).unwrap();
        assert!(total_area(&cw, &tris) > 0.0);
    }
}
