//! Planar polygon mathematics in block coordinates (meters, f64).
//!
//! Polygons are plain vertex slices with implicit closure. Functions that care
//! about orientation expect counter-clockwise input unless stated otherwise.

mod clip;
mod polygon;
mod triangulate;

pub use clip::{clip_convex, clip_half_plane, polygon_intersection_area, SLIVER_AREA};
pub use polygon::{
    aabb_intersection_area, aabb_of, centroid, distance_to_boundary, edge_frames, is_convex,
    is_simple, kernel, point_in_polygon, scale_about, segments_intersect, signed_area, translate,
    Aabb, EdgeFrame, GeometryError,
};
pub use triangulate::{triangulate, TriangulationError};

/// Coincidence tolerance for lengths, in meters.
pub const EPS: f64 = 1e-9;

/// A point (or, when documented, a free vector) in block coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vertex2D {
    pub x: f64,
    pub y: f64,
}

/// Direction vectors share the point representation.
pub type Vector2D = Vertex2D;

#[allow(clippy::should_implement_trait)]
impl Vertex2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn sub(self, other: Self) -> Self {
        Self::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Self) -> Self {
        Self::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        self.sub(other).length()
    }
}

impl From<(f64, f64)> for Vertex2D {
    fn from((x, y): (f64, f64)) -> Self {
        Self::new(x, y)
    }
}

impl From<[f64; 2]> for Vertex2D {
    fn from([x, y]: [f64; 2]) -> Self {
        Self::new(x, y)
    }
}

/// Convenience for fixtures: `pts(&[(0.0, 0.0), (1.0, 0.0), ...])`.
pub fn pts(coords: &[(f64, f64)]) -> Vec<Vertex2D> {
    coords.iter().copied().map(Vertex2D::from).collect()
}
