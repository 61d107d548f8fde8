//! Fixtures, random generators and slow reference oracles for the test suites.
//!
//! The oracles here deliberately share no code with `cityforge-core`: areas
//! come from scanline sampling and simplicity from exact integer predicates.

use cityforge_core::edit::{EditCommand, EditTarget, EditVerb, StyleLexicon};
use cityforge_core::geometry::{Aabb, Vertex2D};
use cityforge_core::program::{
    parse_block_program, parse_building_program, BlockElement, BlockProgram, BuildingComponent, BuildingProgram,
    CityProgram, FootprintPolygon, Region, KNOWN_TYPES,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SAMPLE_BLOCK: &str = r#"[
  {
    "id": "mixed_1",
    "type": "mixed-use building",
    "polygon": [[0, 0], [22, 0], [22, 22], [0, 22]],
    "floor_count": 12,
    "facade": "modern glass and steel with terracotta accents"
  },
  {
    "id": "mixed_2",
    "type": "mixed-use building",
    "polygon": [[25, 0], [47, 0], [47, 22], [25, 22]],
    "floor_count": 10,
    "facade": "concrete with greenery on the upper floors"
  },
  {
    "id": "park_1",
    "type": "greenspace",
    "polygon": [[36, 50], [55, 50], [55, 67], [36, 67]]
  },
  {
    "id": "park_2",
    "type": "greenspace",
    "polygon": [[36, 71], [55, 71], [55, 89], [36, 89]]
  }
]"#;

pub const SAMPLE_BUILDING: &str = r#"{
  "window": "expansive, glass, modern, blue-tinted",
  "door": "sleek, modern, glass, automatic",
  "roof": "flat, sleek, modern, weather-resistant"
}"#;

pub const BOWTIE_BLOCK: &str =
    r#"[{"id": "bow", "type": "office", "polygon": [[0, 0], [10, 10], [10, 0], [0, 10]], "floor_count": 3}]"#;

pub fn sample_block() -> BlockProgram {
    parse_block_program(SAMPLE_BLOCK.as_bytes()).expect("fixture parses").program
}

pub fn sample_building() -> BuildingProgram {
    parse_building_program(SAMPLE_BUILDING.as_bytes()).expect("fixture parses").program
}

/// The block plus the building program attached to every building.
pub fn sample_city() -> CityProgram {
    let block = sample_block();
    let mut city = CityProgram::new(block);
    for id in ["mixed_1", "mixed_2"] {
        city.buildings.insert(id.into(), sample_building());
    }
    city
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v(x: f64, y: f64) -> Vertex2D {
    Vertex2D::new(x, y)
}

pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Vertex2D> {
    vec![v(x0, y0), v(x1, y0), v(x1, y1), v(x0, y1)]
}

fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

/// A random simple CCW footprint fitting in `w` x `h` at the origin.
/// Shapes: rectangles, L-shapes, convex n-gons and star-shaped 12-gons.
pub fn random_shape(rng: &mut impl Rng, w: f64, h: f64) -> Vec<Vertex2D> {
    match rng.random_range(0..4) {
        0 => rect(0.0, 0.0, w, h),
        1 => {
            let cx = round_to(rng.random_range(0.3..0.7) * w, 0.5).clamp(0.5, w - 0.5);
            let cy = round_to(rng.random_range(0.3..0.7) * h, 0.5).clamp(0.5, h - 0.5);
            vec![v(0.0, 0.0), v(w, 0.0), v(w, cy), v(cx, cy), v(cx, h), v(0.0, h)]
        }
        kind => {
            let n = if kind == 2 { rng.random_range(3..9) } else { 12 };
            let (cx, cy) = (w / 2.0, h / 2.0);
            (0..n)
                .map(|i| {
                    let base = std::f64::consts::TAU * i as f64 / n as f64;
                    let a = base + rng.random_range(-0.25..0.25) * std::f64::consts::TAU / n as f64;
                    let r = if kind == 2 { 1.0 } else { rng.random_range(0.35..1.0) };
                    v(round_to(cx + r * cx * a.cos(), 0.01), round_to(cy + r * cy * a.sin(), 0.01))
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LayoutOptions {
    pub max_elements: usize,
    /// Reject candidates whose bounding boxes overlap earlier ones.
    pub disjoint: bool,
    pub greenspace_share: f64,
}

impl Default for LayoutOptions {
    fn default() -> Self {
        Self { max_elements: 10, disjoint: false, greenspace_share: 0.25 }
    }
}

const FACADES: &[&str] = &[
    "red brick with white trim",
    "modern glass and steel",
    "concrete with greenery on the upper floors",
    "timber cladding, large windows",
    "stone base with stucco upper floors",
    "blue-tinted glass curtain wall",
];

fn building_type(rng: &mut impl Rng) -> &'static str {
    let types: Vec<&str> = KNOWN_TYPES.iter().copied().filter(|t| *t != "greenspace").collect();
    types[rng.random_range(0..types.len())]
}

const PHRASES: &[&str] = &[
    "glass", "arched", "wooden", "modern", "sleek", "red", "tall", "narrow", "steel", "flat", "gable", "tiled",
    "automatic", "double", "ornate", "minimal",
];

pub fn random_element(rng: &mut impl Rng, id: String, region: Region, greenspace_share: f64) -> BlockElement {
    let w = round_to(rng.random_range(4.0..region.width.min(40.0)), 0.5);
    let h = round_to(rng.random_range(4.0..region.height.min(40.0)), 0.5);
    let x = round_to(rng.random_range(0.0..=(region.width - w)), 0.5);
    let y = round_to(rng.random_range(0.0..=(region.height - h)), 0.5);
    let shape: Vec<Vertex2D> = random_shape(rng, w, h).into_iter().map(|p| v(p.x + x, p.y + y)).collect();
    let polygon = FootprintPolygon::new(shape).expect("generated shapes are simple");
    if rng.random_bool(greenspace_share) {
        BlockElement { id, element_type: "greenspace".into(), polygon, floor_count: None, facade: None }
    } else {
        let ty = building_type(rng);
        let facade = rng.random_bool(0.8).then(|| FACADES[rng.random_range(0..FACADES.len())].to_string());
        BlockElement { id, element_type: ty.into(), polygon, floor_count: Some(rng.random_range(1..=30)), facade }
    }
}

/// A valid block program; overlapping footprints unless `disjoint`.
pub fn random_layout(rng: &mut impl Rng, opts: LayoutOptions) -> BlockProgram {
    let region = Region {
        width: round_to(rng.random_range(40.0..120.0), 1.0),
        height: round_to(rng.random_range(40.0..120.0), 1.0),
    };
    let n = rng.random_range(1..=opts.max_elements.max(1));
    let mut elements: Vec<BlockElement> = Vec::new();
    let mut attempts = 0;
    while elements.len() < n && attempts < 50 * n {
        attempts += 1;
        let e = random_element(rng, format!("e_{}", elements.len()), region, opts.greenspace_share);
        if opts.disjoint {
            let b = oracle_aabb(e.polygon.vertices());
            if elements.iter().any(|o| oracle_aabb_overlap(&b, &oracle_aabb(o.polygon.vertices())) > 0.0) {
                continue;
            }
        }
        elements.push(e);
    }
    let description = rng.random_bool(0.5).then(|| "generated block".to_string());
    BlockProgram { description, region, elements }
}

pub fn random_building_program(rng: &mut impl Rng) -> BuildingProgram {
    let mut p = BuildingProgram::default();
    for ty in ["window", "door", "roof", "balcony"] {
        if ty == "balcony" && rng.random_bool(0.5) {
            continue;
        }
        let k = rng.random_range(1..=4);
        let words: Vec<&str> = (0..k).map(|_| PHRASES[rng.random_range(0..PHRASES.len())]).collect();
        p.upsert(BuildingComponent::canonical(ty, &words.join(", ")).expect("non-empty"));
    }
    p
}

/// A block with building programs attached to a random subset of buildings.
pub fn random_city(rng: &mut impl Rng, opts: LayoutOptions) -> CityProgram {
    let block = random_layout(rng, opts);
    let mut city = CityProgram::new(block);
    let ids: Vec<String> = city.block.buildings().map(|e| e.id.clone()).collect();
    for id in ids {
        if rng.random_bool(0.7) {
            city.buildings.insert(id, random_building_program(rng));
        }
    }
    city
}

/// A command that is usually, but not always, applicable to `city`.
pub fn random_edit_command(rng: &mut impl Rng, city: &CityProgram) -> EditCommand {
    let ids: Vec<&str> = city.block.elements.iter().map(|e| e.id.as_str()).collect();
    let pick = |rng: &mut _| -> EditTarget {
        if ids.is_empty() || Rng::random_bool(rng, 0.05) {
            EditTarget::Element("missing".into())
        } else {
            EditTarget::Element(ids[Rng::random_range(rng, 0..ids.len())].to_string())
        }
    };
    match rng.random_range(0..7) {
        0 => EditCommand { target: pick(rng), verb: EditVerb::SetFloorCount { floors: rng.random_range(1..=40) } },
        1 => EditCommand {
            target: EditTarget::Block,
            verb: EditVerb::ScaleDensity { target: rng.random_range(0.05..0.95), allow_move: rng.random_bool(0.3) },
        },
        2 => {
            let styles = StyleLexicon::builtin();
            let names = styles.names();
            let style = names[rng.random_range(0..names.len())].to_string();
            let target = if rng.random_bool(0.5) { EditTarget::Block } else { pick(rng) };
            EditCommand { target, verb: EditVerb::SetStyle { style } }
        }
        3 => {
            let ty = ["window", "door", "roof", "balcony"][rng.random_range(0..4)];
            let d = PHRASES[rng.random_range(0..PHRASES.len())];
            let component = BuildingComponent::canonical(ty, d).expect("non-empty");
            EditCommand { target: pick(rng), verb: EditVerb::SetComponent { component } }
        }
        4 => {
            let id = format!("added_{}", rng.random_range(0..1000));
            let element = random_element(rng, id, city.block.region, 0.3);
            EditCommand { target: EditTarget::Block, verb: EditVerb::AddElement { element } }
        }
        5 => EditCommand { target: pick(rng), verb: EditVerb::RemoveElement },
        _ => {
            let ty = if rng.random_bool(0.3) { "greenspace" } else { building_type(rng) };
            EditCommand { target: pick(rng), verb: EditVerb::RetypeElement { element_type: ty.into() } }
        }
    }
}

/// Random vertices, usually self-intersecting, for simplicity checks.
pub fn random_ngon(rng: &mut impl Rng, n: usize) -> Vec<Vertex2D> {
    (0..n).map(|_| v(rng.random_range(0..20) as f64, rng.random_range(0..20) as f64)).collect()
}

// ---- reference oracles -------------------------------------------------

pub const RASTER_CELL: f64 = 0.01;

/// x-intervals where the horizontal line at `y` lies inside `polygon`
/// (even-odd), sorted and disjoint.
fn row_intervals(polygon: &[Vertex2D], y: f64) -> Vec<(f64, f64)> {
    let mut xs = Vec::new();
    let n = polygon.len();
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
        if (a.y <= y) != (b.y <= y) {
            xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.chunks_exact(2).map(|c| (c[0], c[1])).collect()
}

fn intersect_intervals(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            total += (a1.min(b1) - a0.max(b0)).max(0.0);
        }
    }
    total
}

fn rows(y0: f64, y1: f64, cell: f64) -> impl Iterator<Item = f64> {
    let first = (y0 / cell).floor() as i64;
    let last = (y1 / cell).ceil() as i64;
    (first..last).map(move |k| (k as f64 + 0.5) * cell)
}

/// Polygon area by sampling one scanline per `cell` rows.
pub fn raster_area(polygon: &[Vertex2D], cell: f64) -> f64 {
    let b = oracle_aabb(polygon);
    rows(b.y_min, b.y_max, cell)
        .map(|y| row_intervals(polygon, y).iter().map(|(a, b)| b - a).sum::<f64>() * cell)
        .sum()
}

/// Area of `a ∩ b` by scanline sampling.
pub fn raster_intersection(a: &[Vertex2D], b: &[Vertex2D], cell: f64) -> f64 {
    let (ba, bb) = (oracle_aabb(a), oracle_aabb(b));
    let (y0, y1) = (ba.y_min.max(bb.y_min), ba.y_max.min(bb.y_max));
    if y1 <= y0 {
        return 0.0;
    }
    rows(y0, y1, cell).map(|y| intersect_intervals(&row_intervals(a, y), &row_intervals(b, y)) * cell).sum()
}

pub fn oracle_aabb(polygon: &[Vertex2D]) -> Aabb {
    let mut b = Aabb { x_min: f64::INFINITY, x_max: f64::NEG_INFINITY, y_min: f64::INFINITY, y_max: f64::NEG_INFINITY };
    for p in polygon {
        b.x_min = b.x_min.min(p.x);
        b.x_max = b.x_max.max(p.x);
        b.y_min = b.y_min.min(p.y);
        b.y_max = b.y_max.max(p.y);
    }
    b
}

fn aabb_ring(b: &Aabb) -> Vec<Vertex2D> {
    rect(b.x_min, b.y_min, b.x_max, b.y_max)
}

/// Closed-form box overlap, used only to reject candidates in generators.
fn oracle_aabb_overlap(a: &Aabb, b: &Aabb) -> f64 {
    (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0) * (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0)
}

/// Rasterized intersection of two boxes.
pub fn raster_aabb_intersection(a: &Aabb, b: &Aabb, cell: f64) -> f64 {
    raster_intersection(&aabb_ring(a), &aabb_ring(b), cell)
}

fn pairwise(program: &BlockProgram, f: impl Fn(&BlockElement, &BlockElement) -> f64) -> f64 {
    let e = &program.elements;
    let mut total = 0.0;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            total += f(&e[i], &e[j]);
        }
    }
    total / program.region.area()
}

/// Sum of rasterized pairwise bounding-box overlaps over the region area.
pub fn raster_overlap_fraction(program: &BlockProgram, cell: f64) -> f64 {
    pairwise(program, |a, b| {
        raster_aabb_intersection(&oracle_aabb(a.polygon.vertices()), &oracle_aabb(b.polygon.vertices()), cell)
    })
}

/// Sum of rasterized pairwise footprint overlaps over the region area.
pub fn raster_collision_rate(program: &BlockProgram, cell: f64) -> f64 {
    pairwise(program, |a, b| raster_intersection(a.polygon.vertices(), b.polygon.vertices(), cell))
}

/// Rasterized building bounding-box area over the region area.
pub fn raster_coverage(program: &BlockProgram, cell: f64) -> f64 {
    program.buildings().map(|e| raster_area(&aabb_ring(&oracle_aabb(e.polygon.vertices())), cell)).sum::<f64>()
        / program.region.area()
}

/// Piecewise density reward written out directly.
pub fn density_reference(d: f64, d_min: f64, d_max: f64) -> f64 {
    if d < d_min {
        10.0 * d / d_min
    } else if d <= d_max {
        10.0
    } else {
        (10.0 * (1.0 - d) / (1.0 - d_max)).max(0.0)
    }
}

type P = (i128, i128);

fn to_int(p: Vertex2D) -> P {
    ((p.x * 1e6).round() as i128, (p.y * 1e6).round() as i128)
}

fn orient(a: P, b: P, c: P) -> i128 {
    ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)).signum()
}

fn on_segment(a: P, b: P, p: P) -> bool {
    orient(a, b, p) == 0 && p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn touch(a: P, b: P, c: P, d: P) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    (o1 * o2 < 0 && o3 * o4 < 0) || on_segment(a, b, c) || on_segment(a, b, d) || on_segment(c, d, a) || on_segment(c, d, b)
}

/// All-pairs simplicity test on coordinates scaled to integer micrometres.
/// Adjacent edges may share only their common endpoint.
pub fn brute_force_is_simple(polygon: &[Vertex2D]) -> bool {
    let p: Vec<P> = polygon.iter().map(|q| to_int(*q)).collect();
    let n = p.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            if p[i] == p[j] {
                return false;
            }
        }
    }
    for i in 0..n {
        let (a, b) = (p[i], p[(i + 1) % n]);
        for j in i + 1..n {
            let (c, d) = (p[j], p[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Shared vertex is b == c (or d == a for the wrap pair); a
                // fold-back puts the far endpoint on the other edge.
                let (shared, far1, far2) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let _ = shared;
                if n == 3 {
                    if orient(a, b, c) == 0 && orient(a, b, d) == 0 {
                        return false;
                    }
                    continue;
                }
                if on_segment(c, d, far1) || on_segment(a, b, far2) {
                    return false;
                }
            } else if touch(a, b, c, d) {
                return false;
            }
        }
    }
    true
}
