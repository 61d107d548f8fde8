use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::components::ComponentTable;
use super::extrude::{extrude_footprint, PrismMaterials};
use super::facade::{layout_facade, FacadeEdge};
use super::mesh::{MaterialTag, Mesh, Vec3};
use super::{ExecutorConfig, ExecutorError};
use crate::geometry::{aabb_of, distance_to_boundary, edge_frames, point_in_polygon, triangulate, EdgeFrame, Vertex2D};
use crate::program::{serialize_block, serialize_building, BlockElement, BlockProgram, BuildingProgram};

pub const SUPPORTED_COMPONENTS: &[&str] = &["window", "door", "roof", "balcony"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneBuilding {
    pub id: String,
    /// The closed extruded shell.
    pub shell: Mesh,
    /// Facade components and pitched roofs, outside the shell.
    pub attachments: Mesh,
}

impl SceneBuilding {
    pub fn combined(&self) -> Mesh {
        let mut m = self.shell.clone();
        m.append(&self.attachments);
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGreenspace {
    pub id: String,
    pub mesh: Mesh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropKind {
    Tree,
    Streetlight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop {
    pub kind: PropKind,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetadata {
    /// SHA-256 of the canonical block program text.
    pub block_hash: String,
    pub building_hashes: BTreeMap<String, String>,
    pub floor_height: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePackage {
    pub buildings: Vec<SceneBuilding>,
    pub greenspaces: Vec<SceneGreenspace>,
    pub streets: Mesh,
    pub props: Vec<Prop>,
    pub metadata: SceneMetadata,
    pub warnings: Vec<String>,
}

impl ScenePackage {
    pub fn building(&self, id: &str) -> Option<&SceneBuilding> {
        self.buildings.iter().find(|b| b.id == id)
    }

    /// All prop geometry merged into one mesh.
    pub fn props_mesh(&self) -> Mesh {
        let mut m = Mesh::default();
        for p in &self.props {
            m.append(&prop_mesh(p));
        }
        m
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn prop_mesh(prop: &Prop) -> Mesh {
    let [x, y, z] = prop.position;
    let mut m = Mesh::default();
    match prop.kind {
        PropKind::Tree => {
            m.append(&Mesh::cuboid([x - 0.15, y - 0.15, z], [x + 0.15, y + 0.15, z + 2.0], MaterialTag::Wood));
            m.append(&Mesh::cuboid([x - 1.2, y - 1.2, z + 2.0], [x + 1.2, y + 1.2, z + 4.4], MaterialTag::Greenery));
        }
        PropKind::Streetlight => {
            m.append(&Mesh::cuboid([x - 0.075, y - 0.075, z], [x + 0.075, y + 0.075, z + 6.0], MaterialTag::Metal));
            m.append(&Mesh::cuboid([x - 0.3, y - 0.15, z + 6.0], [x + 0.3, y + 0.15, z + 6.2], MaterialTag::Glass));
        }
    }
    m
}

fn flat_polygon(polygon: &[Vertex2D], z: f64, material: MaterialTag) -> Result<Mesh, ExecutorError> {
    let tris = triangulate(polygon).map_err(|e| ExecutorError::TriangulationFailure(e.to_string()))?;
    let mut m = Mesh::default();
    for v in polygon {
        m.push_vertex([v.x, v.y, z]);
    }
    for t in tris {
        m.push_triangle(t.map(|i| i as u32), material);
    }
    Ok(m)
}

/// Flat street ring of `width` around `[0, w] x [0, h]`.
pub fn street_ring(w: f64, h: f64, width: f64) -> Mesh {
    let mut m = Mesh::default();
    let inner = [[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]];
    let outer = [[-width, -width], [w + width, -width], [w + width, h + width], [-width, h + width]];
    for p in inner.iter().chain(&outer) {
        m.push_vertex([p[0], p[1], 0.0]);
    }
    for i in 0..4u32 {
        let j = (i + 1) % 4;
        m.push_triangle([4 + i, 4 + j, j], MaterialTag::Asphalt);
        m.push_triangle([4 + i, j, i], MaterialTag::Asphalt);
    }
    m
}

/// Lights every `spacing` meters along the ring centreline, starting at the
/// south-west corner and running counter-clockwise.
pub fn streetlights(w: f64, h: f64, width: f64, spacing: f64) -> Vec<Prop> {
    if spacing <= 0.0 || width <= 0.0 {
        return Vec::new();
    }
    let o = width / 2.0;
    let corners = [(-o, -o), (w + o, -o), (w + o, h + o), (-o, h + o)];
    let sides: Vec<(Vertex2D, Vertex2D)> = (0..4)
        .map(|i| (Vertex2D::from(corners[i]), Vertex2D::from(corners[(i + 1) % 4])))
        .collect();
    let perimeter: f64 = sides.iter().map(|(a, b)| a.distance(*b)).sum();
    let n = (perimeter / spacing + 1e-9).floor() as usize;
    (0..n)
        .map(|k| {
            let mut t = k as f64 * spacing;
            let mut pos = sides[0].0;
            for (a, b) in &sides {
                let len = a.distance(*b);
                if t <= len {
                    pos = a.add(b.sub(*a).scale(t / len));
                    break;
                }
                t -= len;
            }
            Prop { kind: PropKind::Streetlight, position: [pos.x, pos.y, 0.0] }
        })
        .collect()
}

fn element_rng(seed: u64, id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Trees on a global grid offset by half a cell, kept where the point is at
/// least `inset` inside the greenspace, then jittered. A jittered point that
/// leaves the inset area falls back to its grid point.
pub fn sample_trees(element: &BlockElement, config: &ExecutorConfig) -> Vec<Prop> {
    let step = config.tree_spacing;
    if step <= 0.0 {
        return Vec::new();
    }
    let poly = element.polygon.vertices();
    let bb = aabb_of(poly);
    let ok = |p: Vertex2D| point_in_polygon(p, poly) && distance_to_boundary(p, poly) >= config.tree_inset;
    let range = |lo: f64, hi: f64| {
        let first = ((lo - step / 2.0) / step).ceil() as i64;
        let last = ((hi - step / 2.0) / step).floor() as i64;
        first..=last
    };
    let mut rng = element_rng(config.seed, &element.id);
    let mut out = Vec::new();
    for i in range(bb.x_min, bb.x_max) {
        for j in range(bb.y_min, bb.y_max) {
            let grid = Vertex2D::new(step / 2.0 + i as f64 * step, step / 2.0 + j as f64 * step);
            let jx: f64 = rng.random_range(-1.0..=1.0);
            let jy: f64 = rng.random_range(-1.0..=1.0);
            if !ok(grid) {
                continue;
            }
            let jittered = grid.add(Vertex2D::new(jx, jy).scale(config.tree_jitter));
            let p = if ok(jittered) { jittered } else { grid };
            out.push(Prop { kind: PropKind::Tree, position: [p.x, p.y, 0.0] });
        }
    }
    out
}

fn is_rectangle(poly: &[Vertex2D]) -> bool {
    poly.len() == 4
        && edge_frames(poly)
            .map(|f| (0..4).all(|i| f[i].direction.dot(f[(i + 1) % 4].direction).abs() < 1e-6))
            .unwrap_or(false)
}

/// Gable roof on a rectangle, ridge along the longer side.
fn gable_roof(poly: &[Vertex2D], base: f64, pitch_ratio: f64, material: MaterialTag) -> Mesh {
    let long_first = poly[0].distance(poly[1]) >= poly[1].distance(poly[2]);
    let p: Vec<Vertex2D> = if long_first { poly.to_vec() } else { vec![poly[1], poly[2], poly[3], poly[0]] };
    let short = p[1].distance(p[2]);
    let top = base + pitch_ratio.max(0.01) * short;
    let r0 = p[0].add(p[3]).scale(0.5);
    let r1 = p[1].add(p[2]).scale(0.5);
    let mut m = Mesh::default();
    for v in &p {
        m.push_vertex([v.x, v.y, base]);
    }
    m.push_vertex([r0.x, r0.y, top]);
    m.push_vertex([r1.x, r1.y, top]);
    for t in [[0, 2, 1], [0, 3, 2], [0, 1, 5], [0, 5, 4], [2, 3, 4], [2, 4, 5], [1, 2, 5], [3, 0, 4]] {
        m.push_triangle(t, material);
    }
    m
}

/// Index of the longest edge; the first one wins ties.
fn longest_edge(frames: &[EdgeFrame]) -> usize {
    let mut best = 0;
    for (i, f) in frames.iter().enumerate() {
        if f.length > frames[best].length + 1e-9 {
            best = i;
        }
    }
    best
}

fn build_building(
    element: &BlockElement,
    program: Option<&BuildingProgram>,
    config: &ExecutorConfig,
    table: &ComponentTable,
    warnings: &mut Vec<String>,
) -> Result<SceneBuilding, ExecutorError> {
    let fh = config.floor_height;
    let walls = table.wall_material(element.facade.as_deref());
    let empty = BuildingProgram::default();
    let program = match program {
        Some(p) => p,
        None => {
            warnings.push(format!("{}: no building program, bare shell", element.id));
            &empty
        }
    };
    for c in &program.components {
        if !SUPPORTED_COMPONENTS.contains(&c.component_type.as_str()) {
            warnings.push(format!("{}: component `{}` is not supported, skipped", element.id, c.component_type));
        }
    }
    let roof = program.component("roof").map(|c| table.realize(c));
    let poly = element.polygon.vertices();
    let gable = match &roof {
        Some(r) if r.text("shape") == Some("gable") => {
            if is_rectangle(poly) {
                true
            } else {
                warnings.push(format!("{}: pitched roof needs a rectangular footprint, using flat", element.id));
                false
            }
        }
        _ => false,
    };
    let top = match &roof {
        Some(r) if !gable => r.material_tag,
        _ => MaterialTag::Concrete,
    };
    let shell = extrude_footprint(element, fh, PrismMaterials { walls, bottom: MaterialTag::Concrete, top })?;

    let mut attachments = Mesh::default();
    let frames = edge_frames(poly).map_err(|e| ExecutorError::TriangulationFailure(e.to_string()))?;
    let door_edge = longest_edge(&frames);
    let floors = element.floors().max(1);
    for (i, edge) in frames.iter().enumerate() {
        let facade = FacadeEdge { edge, floors, floor_height: fh, door: i == door_edge };
        for placement in layout_facade(facade, program, table, config) {
            attachments.append(&placement.mesh());
        }
    }
    if let (true, Some(r)) = (gable, &roof) {
        attachments.append(&gable_roof(poly, floors as f64 * fh, r.number("pitch_ratio", 0.25), r.material_tag));
    }
    Ok(SceneBuilding { id: element.id.clone(), shell, attachments })
}

/// Builds the whole scene. Output order follows the program's element order.
pub fn assemble_scene(
    block: &BlockProgram,
    buildings: &BTreeMap<String, BuildingProgram>,
    config: &ExecutorConfig,
) -> Result<ScenePackage, ExecutorError> {
    let table = &config.components;
    let mut warnings = Vec::new();
    let mut scene_buildings = Vec::new();
    let mut greenspaces = Vec::new();
    let mut props = Vec::new();
    let annotate = |id: &str| {
        let id = id.to_string();
        move |e: ExecutorError| ExecutorError::Element { id, source: Box::new(e) }
    };
    for element in &block.elements {
        if element.is_building() {
            let b = build_building(element, buildings.get(&element.id), config, table, &mut warnings)
                .map_err(annotate(&element.id))?;
            scene_buildings.push(b);
        } else {
            let mesh = flat_polygon(element.polygon.vertices(), 0.0, MaterialTag::Greenery)
                .map_err(annotate(&element.id))?;
            greenspaces.push(SceneGreenspace { id: element.id.clone(), mesh });
            props.extend(sample_trees(element, config));
        }
    }
    for id in buildings.keys() {
        if block.element(id).is_none_or(|e| !e.is_building()) {
            warnings.push(format!("{id}: building program has no matching building element, ignored"));
        }
    }
    let (w, h) = (block.region.width, block.region.height);
    props.extend(streetlights(w, h, config.street_width, config.streetlight_spacing));
    let metadata = SceneMetadata {
        block_hash: sha256_hex(serialize_block(block).as_bytes()),
        building_hashes: buildings
            .iter()
            .map(|(id, p)| (id.clone(), sha256_hex(serialize_building(p).as_bytes())))
            .collect(),
        floor_height: config.floor_height,
        seed: config.seed,
    };
    Ok(ScenePackage {
        buildings: scene_buildings,
        greenspaces,
        streets: street_ring(w, h, config.street_width),
        props,
        metadata,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pts;
    use crate::program::FootprintPolygon;

    fn element(id: &str, ty: &str, coords: &[(f64, f64)], floors: Option<u32>) -> BlockElement {
        BlockElement {
            id: id.into(),
            element_type: ty.into(),
            polygon: FootprintPolygon::new(pts(coords)).unwrap(),
            floor_count: floors,
            facade: None,
        }
    }

    #[test]
    fn empty_block_has_only_streets() {
        let block = BlockProgram::new(vec![]);
        let s = assemble_scene(&block, &BTreeMap::new(), &ExecutorConfig::default()).unwrap();
        assert!(s.buildings.is_empty() && s.greenspaces.is_empty());
        assert_eq!(s.streets.triangles.len(), 8);
        assert!(s.props.iter().all(|p| p.kind == PropKind::Streetlight));
        // ring centreline 2 * (106 + 106) = 424 m
        assert_eq!(s.props.len(), 21);
    }

    #[test]
    fn trees_respect_inset_and_are_seeded() {
        let g = element("park", "greenspace", &[(0.0, 0.0), (30.0, 0.0), (30.0, 20.0), (0.0, 20.0)], None);
        let cfg = ExecutorConfig::default();
        let trees = sample_trees(&g, &cfg);
        assert_eq!(trees.len(), 5 * 3);
        for t in &trees {
            let p = Vertex2D::new(t.position[0], t.position[1]);
            assert!(distance_to_boundary(p, g.polygon.vertices()) >= 1.0);
        }
        assert_eq!(trees, sample_trees(&g, &cfg));
        let other = ExecutorConfig { seed: 7, ..ExecutorConfig::default() };
        assert_ne!(trees, sample_trees(&g, &other));
    }

    #[test]
    fn gable_roof_only_on_rectangles() {
        let rect = element("r", "residential", &[(0.0, 0.0), (12.0, 0.0), (12.0, 8.0), (0.0, 8.0)], Some(2));
        let tri = element("t", "residential", &[(20.0, 0.0), (32.0, 0.0), (26.0, 8.0)], Some(2));
        let mut roof = BuildingProgram::default();
        roof.upsert(crate::program::BuildingComponent::canonical("roof", "pitched, tiled").unwrap());
        let programs: BTreeMap<_, _> = [("r".to_string(), roof.clone()), ("t".to_string(), roof)].into();
        let s = assemble_scene(&BlockProgram::new(vec![rect, tri]), &programs, &ExecutorConfig::default()).unwrap();
        let r = s.building("r").unwrap();
        assert!(r.attachments.is_closed_manifold());
        assert_eq!(r.attachments.triangles.len(), 8);
        let (_, hi) = r.attachments.bounds().unwrap();
        assert!((hi[2] - (6.0 + 0.25 * 8.0)).abs() < 1e-12);
        assert!(s.building("t").unwrap().attachments.is_empty());
        assert_eq!(s.warnings.len(), 1, "{:?}", s.warnings);
    }

    #[test]
    fn flat_roof_retags_top_cap() {
        let b = element("b", "office", &[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)], Some(1));
        let mut p = BuildingProgram::default();
        p.upsert(crate::program::BuildingComponent::canonical("roof", "flat, planted").unwrap());
        let s = assemble_scene(&BlockProgram::new(vec![b]), &[("b".to_string(), p)].into(), &ExecutorConfig::default())
            .unwrap();
        let shell = &s.buildings[0].shell;
        let greens = shell.face_material.iter().filter(|m| **m == MaterialTag::Greenery).count();
        assert_eq!(greens, 2);
        assert!(s.buildings[0].attachments.is_empty());
    }
}
