use super::mesh::{MaterialTag, Mesh};
use super::ExecutorError;
use crate::geometry::{signed_area, triangulate, Vertex2D};
use crate::program::BlockElement;

/// Materials for the three face groups of a prism.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrismMaterials {
    pub walls: MaterialTag,
    pub bottom: MaterialTag,
    pub top: MaterialTag,
}

impl PrismMaterials {
    pub fn uniform(m: MaterialTag) -> Self {
        Self { walls: m, bottom: m, top: m }
    }
}

/// Extrudes a simple CCW polygon through the increasing heights `levels`.
///
/// One vertex ring per level; each wall segment between consecutive levels is
/// a quad split along the same diagonal. The caps reuse the first and last
/// rings, so the result is closed.
pub fn prism(polygon: &[Vertex2D], levels: &[f64], materials: PrismMaterials) -> Result<Mesh, ExecutorError> {
    debug_assert!(levels.len() >= 2 && levels.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(signed_area(polygon) > 0.0);
    let cap = triangulate(polygon).map_err(|e| ExecutorError::TriangulationFailure(e.to_string()))?;
    let n = polygon.len() as u32;
    let mut mesh = Mesh::default();
    for &z in levels {
        for v in polygon {
            mesh.push_vertex([v.x, v.y, z]);
        }
    }
    let at = |level: u32, i: u32| level * n + i;
    for level in 0..levels.len() as u32 - 1 {
        for i in 0..n {
            let j = (i + 1) % n;
            let (a, b, c, d) = (at(level, i), at(level, j), at(level + 1, j), at(level + 1, i));
            mesh.push_triangle([a, b, c], materials.walls);
            mesh.push_triangle([a, c, d], materials.walls);
        }
    }
    let top = levels.len() as u32 - 1;
    for t in &cap {
        let [a, b, c] = t.map(|i| i as u32);
        mesh.push_triangle([at(0, a), at(0, c), at(0, b)], materials.bottom);
        mesh.push_triangle([at(top, a), at(top, b), at(top, c)], materials.top);
    }
    Ok(mesh)
}

/// Building shell: a prism of `floors * floor_height`, with a vertex ring at
/// every floor line.
pub fn extrude_footprint(
    element: &BlockElement,
    floor_height: f64,
    materials: PrismMaterials,
) -> Result<Mesh, ExecutorError> {
    if !element.is_building() {
        return Err(ExecutorError::NotABuilding(element.id.clone()));
    }
    let floors = element.floors().max(1);
    let levels: Vec<f64> = (0..=floors).map(|k| k as f64 * floor_height).collect();
    prism(element.polygon.vertices(), &levels, materials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pts;
    use crate::program::FootprintPolygon;

    fn building(coords: &[(f64, f64)], floors: u32) -> BlockElement {
        BlockElement {
            id: "b".into(),
            element_type: "office".into(),
            polygon: FootprintPolygon::new(pts(coords)).unwrap(),
            floor_count: Some(floors),
            facade: None,
        }
    }

    #[test]
    fn unit_box_volume() {
        let m = extrude_footprint(
            &building(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)], 1),
            3.0,
            PrismMaterials::uniform(MaterialTag::Concrete),
        )
        .unwrap();
        assert!((m.volume() - 3.0).abs() < 1e-12);
        assert_eq!(m.triangles.len(), 12);
        assert!(m.is_closed_manifold());
    }

    #[test]
    fn mixed_1_prism() {
        let m = extrude_footprint(
            &building(&[(0.0, 0.0), (22.0, 0.0), (22.0, 22.0), (0.0, 22.0)], 12),
            3.0,
            PrismMaterials::uniform(MaterialTag::Glass),
        )
        .unwrap();
        let (lo, hi) = m.bounds().unwrap();
        assert_eq!(hi[2] - lo[2], 36.0);
        assert_eq!(m.triangles.len(), 4 * 12 * 2 + 4);
        assert!(m.is_closed_manifold());
        assert!((m.volume() - 22.0 * 22.0 * 36.0).abs() < 1e-6);
    }

    #[test]
    fn l_shape_is_a_sphere() {
        let l = [(0.0, 0.0), (10.0, 0.0), (10.0, 4.0), (4.0, 4.0), (4.0, 10.0), (0.0, 10.0)];
        let m = extrude_footprint(&building(&l, 3), 3.0, PrismMaterials::uniform(MaterialTag::Concrete)).unwrap();
        assert!(m.is_closed_manifold());
        assert_eq!(m.euler_characteristic(), 2);
        assert!((m.volume() - 64.0 * 9.0).abs() < 1e-9);
    }

    #[test]
    fn greenspace_is_rejected() {
        let mut g = building(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)], 1);
        g.element_type = "greenspace".into();
        g.floor_count = None;
        assert!(matches!(
            extrude_footprint(&g, 3.0, PrismMaterials::uniform(MaterialTag::Concrete)),
            Err(ExecutorError::NotABuilding(_))
        ));
    }
}
