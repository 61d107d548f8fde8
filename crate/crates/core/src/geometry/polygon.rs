use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{clip_half_plane, Vector2D, Vertex2D, EPS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("edge {index} is shorter than {EPS} m")]
    DegenerateEdge { index: usize },
}

/// Shoelace area; positive for counter-clockwise rings.
pub fn signed_area(polygon: &[Vertex2D]) -> f64 {
    let n = polygon.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    0.5 * twice
}

/// Area-weighted centroid. Falls back to the vertex mean for degenerate rings.
pub fn centroid(polygon: &[Vertex2D]) -> Vertex2D {
    let n = polygon.len();
    let area = signed_area(polygon);
    if n == 0 {
        return Vertex2D::default();
    }
    if area.abs() < EPS {
        let sum = polygon.iter().fold(Vertex2D::default(), |acc, p| acc.add(*p));
        return sum.scale(1.0 / n as f64);
    }
    // Shift to the first vertex to keep the products small.
    let origin = polygon[0];
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let a = polygon[i].sub(origin);
        let b = polygon[(i + 1) % n].sub(origin);
        let w = a.cross(b);
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
    }
    Vertex2D::new(origin.x + cx / (6.0 * area), origin.y + cy / (6.0 * area))
}

fn orient(a: Vertex2D, b: Vertex2D, c: Vertex2D) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn sign(v: f64) -> i8 {
    if v > EPS {
        1
    } else if v < -EPS {
        -1
    } else {
        0
    }
}

fn on_segment(p: Vertex2D, a: Vertex2D, b: Vertex2D) -> bool {
    p.x >= a.x.min(b.x) - EPS
        && p.x <= a.x.max(b.x) + EPS
        && p.y >= a.y.min(b.y) - EPS
        && p.y <= a.y.max(b.y) + EPS
}

/// Closed-segment intersection test; touching counts as intersecting.
pub fn segments_intersect(p1: Vertex2D, p2: Vertex2D, q1: Vertex2D, q2: Vertex2D) -> bool {
    let d1 = sign(orient(q1, q2, p1));
    let d2 = sign(orient(q1, q2, p2));
    let d3 = sign(orient(p1, p2, q1));
    let d4 = sign(orient(p1, p2, q2));
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && on_segment(p1, q1, q2))
        || (d2 == 0 && on_segment(p2, q1, q2))
        || (d3 == 0 && on_segment(q1, p1, p2))
        || (d4 == 0 && on_segment(q2, p1, p2))
}

/// Adjacent edges `a -> v` and `v -> w` overlap beyond `v` when they are
/// collinear and fold back onto each other.
fn adjacent_edges_fold(a: Vertex2D, v: Vertex2D, w: Vertex2D) -> bool {
    let d0 = v.sub(a);
    let d1 = w.sub(v);
    sign(d0.cross(d1)) == 0 && d0.dot(d1) < 0.0
}

/// True when no two edges intersect except adjacent edges at their shared
/// vertex.
///
/// Edges are swept in order of their minimum x so that only pairs with
/// overlapping x-extents are tested.
pub fn is_simple(polygon: &[Vertex2D]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let edge = |i: usize| (polygon[i], polygon[(i + 1) % n]);
    let mut order: Vec<usize> = (0..n).collect();
    let x_min = |i: usize| {
        let (a, b) = edge(i);
        a.x.min(b.x)
    };
    order.sort_by(|&i, &j| x_min(i).total_cmp(&x_min(j)).then(i.cmp(&j)));

    for (pos, &i) in order.iter().enumerate() {
        let (a, b) = edge(i);
        let reach = a.x.max(b.x) + EPS;
        for &j in &order[pos + 1..] {
            if x_min(j) > reach {
                break;
            }
            let (c, d) = edge(j);
            let next_i = (i + 1) % n;
            let next_j = (j + 1) % n;
            if next_i == j || next_j == i {
                // Adjacent pair: only the shared vertex may be common.
                let (first, second) = if next_i == j { (i, j) } else { (j, i) };
                let (p, v) = edge(first);
                let (_, w) = edge(second);
                if adjacent_edges_fold(p, v, w) {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    // Zero-length edges make the ring non-simple (two vertices coincide).
    (0..n).all(|i| polygon[i].distance(polygon[(i + 1) % n]) > EPS)
}

pub fn is_convex(polygon: &[Vertex2D]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let orientation = signed_area(polygon).signum();
    (0..n).all(|i| {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        let c = polygon[(i + 2) % n];
        orient(a, b, c) * orientation >= -EPS
    })
}

/// Even-odd containment. Points on the boundary count as inside.
pub fn point_in_polygon(p: Vertex2D, polygon: &[Vertex2D]) -> bool {
    let n = polygon.len();
    let mut inside = false;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if sign(orient(a, b, p)) == 0 && on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn point_segment_distance(p: Vertex2D, a: Vertex2D, b: Vertex2D) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 <= EPS * EPS {
        return p.distance(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a.add(ab.scale(t)))
}

pub fn distance_to_boundary(p: Vertex2D, polygon: &[Vertex2D]) -> f64 {
    let n = polygon.len();
    (0..n)
        .map(|i| point_segment_distance(p, polygon[i], polygon[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

pub fn scale_about(polygon: &[Vertex2D], anchor: Vertex2D, factor: f64) -> Vec<Vertex2D> {
    polygon
        .iter()
        .map(|p| anchor.add(p.sub(anchor).scale(factor)))
        .collect()
}

pub fn translate(polygon: &[Vertex2D], offset: Vector2D) -> Vec<Vertex2D> {
    polygon.iter().map(|p| p.add(offset)).collect()
}

/// The set of points from which the whole (CCW) polygon is visible, or `None`
/// when it is empty or degenerate.
pub fn kernel(polygon: &[Vertex2D]) -> Option<Vec<Vertex2D>> {
    let n = polygon.len();
    if n < 3 {
        return None;
    }
    let bounds = aabb_of(polygon);
    let mut region = vec![
        Vertex2D::new(bounds.x_min, bounds.y_min),
        Vertex2D::new(bounds.x_max, bounds.y_min),
        Vertex2D::new(bounds.x_max, bounds.y_max),
        Vertex2D::new(bounds.x_min, bounds.y_max),
    ];
    for i in 0..n {
        region = clip_half_plane(&region, polygon[i], polygon[(i + 1) % n]);
        if region.len() < 3 {
            return None;
        }
    }
    (signed_area(&region) > EPS).then_some(region)
}

/// Axis-aligned bounding box in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Aabb {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn intersection_area(&self, other: &Aabb) -> f64 {
        aabb_intersection_area(self, other)
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        self.x_min <= other.x_max
            && other.x_min <= self.x_max
            && self.y_min <= other.y_max
            && other.y_min <= self.y_max
    }
}

/// Tight bounds over the vertices. An empty slice yields an all-zero box.
pub fn aabb_of(polygon: &[Vertex2D]) -> Aabb {
    let Some(first) = polygon.first() else {
        return Aabb { x_min: 0.0, x_max: 0.0, y_min: 0.0, y_max: 0.0 };
    };
    polygon.iter().fold(
        Aabb { x_min: first.x, x_max: first.x, y_min: first.y, y_max: first.y },
        |b, p| Aabb {
            x_min: b.x_min.min(p.x),
            x_max: b.x_max.max(p.x),
            y_min: b.y_min.min(p.y),
            y_max: b.y_max.max(p.y),
        },
    )
}

pub fn aabb_intersection_area(a: &Aabb, b: &Aabb) -> f64 {
    let dx = a.x_max.min(b.x_max) - a.x_min.max(b.x_min);
    let dy = a.y_max.min(b.y_max) - a.y_min.max(b.y_min);
    dx.max(0.0) * dy.max(0.0)
}

/// Per-edge placement frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFrame {
    pub start: Vertex2D,
    pub end: Vertex2D,
    pub length: f64,
    /// Unit vector from `start` to `end`.
    pub direction: Vector2D,
    /// Unit vector pointing away from the interior: `direction` rotated by -90 degrees.
    pub outward_normal: Vector2D,
}

impl EdgeFrame {
    pub fn midpoint(&self) -> Vertex2D {
        self.start.add(self.end).scale(0.5)
    }

    pub fn point_at(&self, distance: f64) -> Vertex2D {
        self.start.add(self.direction.scale(distance))
    }

    /// Heading of the edge in radians, measured from +x.
    pub fn heading(&self) -> f64 {
        self.direction.y.atan2(self.direction.x)
    }
}

/// One frame per edge of a CCW polygon, in vertex order.
pub fn edge_frames(polygon: &[Vertex2D]) -> Result<Vec<EdgeFrame>, GeometryError> {
    let n = polygon.len();
    (0..n)
        .map(|index| {
            let start = polygon[index];
            let end = polygon[(index + 1) % n];
            let delta = end.sub(start);
            let length = delta.length();
            if length < EPS {
                return Err(GeometryError::DegenerateEdge { index });
            }
            let direction = delta.scale(1.0 / length);
            Ok(EdgeFrame {
                start,
                end,
                length,
                direction,
                outward_normal: Vertex2D::new(direction.y, -direction.x),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pts;

    fn unit_square() -> Vec<Vertex2D> {
        pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    }

    #[test]
    fn shoelace_signs() {
        let sq = unit_square();
        assert_eq!(signed_area(&sq), 1.0);
        let mut rev = sq.clone();
        rev.reverse();
        assert_eq!(signed_area(&rev), -1.0);
        let mixed = pts(&[(0.0, 0.0), (22.0, 0.0), (22.0, 22.0), (0.0, 22.0)]);
        assert_eq!(signed_area(&mixed), 484.0);
    }

    #[test]
    fn simplicity() {
        assert!(is_simple(&unit_square()));
        let bowtie = pts(&[(0.0, 0.0), (10.0, 10.0), (10.0, 0.0), (0.0, 10.0)]);
        assert!(!is_simple(&bowtie));
        // collinear spike folding back on itself
        let spike = pts(&[(0.0, 0.0), (4.0, 0.0), (2.0, 0.0), (2.0, 3.0)]);
        assert!(!is_simple(&spike));
        // collinear vertex along an edge is fine
        let mid = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]);
        assert!(is_simple(&mid));
        // vertex touching a non-adjacent edge
        let touch = pts(&[(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (2.0, 0.0), (0.0, 4.0)]);
        assert!(!is_simple(&touch));
        let flat = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert!(!is_simple(&flat));
    }

    #[test]
    fn l_shape_bounds() {
        let l = pts(&[(0.0, 0.0), (4.0, 0.0), (4.0, 1.0), (1.0, 1.0), (1.0, 3.0), (0.0, 3.0)]);
        let b = aabb_of(&l);
        assert_eq!((b.x_min, b.x_max, b.y_min, b.y_max), (0.0, 4.0, 0.0, 3.0));
        assert!(!is_convex(&l));
        assert!(kernel(&l).is_some());
    }

    #[test]
    fn box_overlap() {
        let a = Aabb { x_min: 0.0, x_max: 2.0, y_min: 0.0, y_max: 2.0 };
        let b = Aabb { x_min: 1.0, x_max: 3.0, y_min: 1.0, y_max: 3.0 };
        let c = Aabb { x_min: 5.0, x_max: 6.0, y_min: 5.0, y_max: 6.0 };
        assert_eq!(aabb_intersection_area(&a, &b), 1.0);
        assert_eq!(aabb_intersection_area(&a, &c), 0.0);
        assert_eq!(aabb_intersection_area(&a, &a), 4.0);
    }

    #[test]
    fn frames_of_unit_square() {
        let frames = edge_frames(&unit_square()).unwrap();
        assert_eq!(frames.len(), 4);
        assert_eq!(frames[0].direction, Vertex2D::new(1.0, 0.0));
        assert_eq!(frames[0].outward_normal, Vertex2D::new(0.0, -1.0));
        let closure = frames
            .iter()
            .fold(Vertex2D::default(), |acc, f| acc.add(f.direction.scale(f.length)));
        assert!(closure.length() < 1e-12);
        let c = centroid(&unit_square());
        for f in &frames {
            assert!(f.outward_normal.dot(c.sub(f.midpoint())) < 0.0);
            assert!(f.direction.dot(f.outward_normal).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_edge_rejected() {
        let p = pts(&[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(edge_frames(&p), Err(GeometryError::DegenerateEdge { index: 0 }));
    }

    #[test]
    fn containment_and_distance() {
        let sq = pts(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]);
        assert!(point_in_polygon(Vertex2D::new(5.0, 5.0), &sq));
        assert!(point_in_polygon(Vertex2D::new(10.0, 5.0), &sq));
        assert!(!point_in_polygon(Vertex2D::new(11.0, 5.0), &sq));
        assert_eq!(distance_to_boundary(Vertex2D::new(5.0, 2.0), &sq), 2.0);
    }
}
