//! The Block Program and Building Program languages.
//!
//! Both programs are JSON documents. Parsing is total: every byte string
//! either yields a validated program plus soft [`Diagnostic`]s, or a
//! [`ProgramError`] naming the first violated constraint and its JSON path.

mod block;
mod building;
mod city;
mod format;
pub mod json;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{is_simple, signed_area, Vertex2D, EPS};

pub use block::{
    block_to_value, element_from_value, element_to_value, parse_block_program, serialize_block,
    DEFAULT_REGION_SIDE,
};
pub use city::CityProgram;
pub use building::{building_to_value, parse_building_program, serialize_building};
pub use format::{check_format, FormatVerdict, ProgramKind};

/// Element types the generator is known to emit. Other strings are accepted
/// and treated as generic buildings.
pub const KNOWN_TYPES: &[&str] = &[
    "residential",
    "commercial",
    "office",
    "school",
    "library",
    "mixed-use building",
    "greenspace",
];

/// Vertices are snapped to this grid (1 µm) so serialized programs re-parse
/// to bit-identical coordinates.
pub const COORDINATE_QUANTUM: f64 = 1e-6;

pub fn quantize(v: f64) -> f64 {
    let q = (v / COORDINATE_QUANTUM).round() * COORDINATE_QUANTUM;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolygonDefect {
    TooFewVertices,
    SelfIntersecting,
    ZeroArea,
    NonFinite,
    MalformedVertex,
}

impl std::fmt::Display for PolygonDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolygonDefect::TooFewVertices => "too-few-vertices",
            PolygonDefect::SelfIntersecting => "self-intersecting",
            PolygonDefect::ZeroArea => "zero-area",
            PolygonDefect::NonFinite => "non-finite",
            PolygonDefect::MalformedVertex => "malformed-vertex",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgramError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("missing required field `{0}`")]
    MissingField(String),
    #[error("invalid field `{path}`: {reason}")]
    InvalidField { path: String, reason: String },
    #[error("bad polygon at `{path}`: {defect}")]
    BadPolygon { path: String, defect: PolygonDefect },
    #[error("polygon at `{path}` leaves the block region")]
    OutOfRegion { path: String },
    #[error("duplicate element id `{id}` at `{path}`")]
    DuplicateId { id: String, path: String },
    #[error("bad floor_count at `{path}`: {reason}")]
    BadFloorCount { path: String, reason: String },
    #[error("component `{0}` has an empty description")]
    EmptyDescription(String),
    #[error("unrecognized program layout")]
    UnknownForm,
}

/// Which Format Accuracy observation a hard error falsifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IssueClass {
    Json,
    Geometry,
    Fields,
}

impl ProgramError {
    pub(crate) fn class(&self) -> IssueClass {
        match self {
            ProgramError::MalformedJson(_) => IssueClass::Json,
            ProgramError::BadPolygon { .. } | ProgramError::OutOfRegion { .. } => IssueClass::Geometry,
            _ => IssueClass::Fields,
        }
    }

    pub fn path(&self) -> String {
        match self {
            ProgramError::MalformedJson(_) | ProgramError::UnknownForm => String::new(),
            ProgramError::MissingField(p) => p.clone(),
            ProgramError::InvalidField { path, .. }
            | ProgramError::BadPolygon { path, .. }
            | ProgramError::OutOfRegion { path }
            | ProgramError::DuplicateId { path, .. }
            | ProgramError::BadFloorCount { path, .. } => path.clone(),
            ProgramError::EmptyDescription(t) => format!("/{t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// Normalization that was applied silently (e.g. orientation reversed).
    Note,
    /// A violated constraint; the program is rejected.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
    pub severity: Severity,
}

impl Diagnostic {
    pub fn note(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into(), severity: Severity::Note }
    }

    pub(crate) fn from_error(err: &ProgramError) -> Self {
        Self { path: err.path(), message: err.to_string(), severity: Severity::Error }
    }
}

/// A successfully parsed program plus normalization notes.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub program: T,
    pub notes: Vec<Diagnostic>,
}

/// Simple, counter-clockwise footprint with implicit closure.
///
/// Construction snaps coordinates to [`COORDINATE_QUANTUM`], drops repeated
/// consecutive vertices (including a closing duplicate of the first vertex)
/// and reverses clockwise rings.
#[derive(Debug, Clone, PartialEq)]
pub struct FootprintPolygon {
    vertices: Vec<Vertex2D>,
}

/// What [`FootprintPolygon::normalize`] had to change.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Normalization {
    pub dropped_duplicates: usize,
    pub reversed: bool,
}

impl FootprintPolygon {
    pub fn new(vertices: Vec<Vertex2D>) -> Result<Self, PolygonDefect> {
        Self::normalize(vertices).map(|(p, _)| p)
    }

    pub fn normalize(vertices: Vec<Vertex2D>) -> Result<(Self, Normalization), PolygonDefect> {
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(PolygonDefect::NonFinite);
        }
        let mut info = Normalization::default();
        let mut out: Vec<Vertex2D> = Vec::with_capacity(vertices.len());
        for v in vertices {
            let q = Vertex2D::new(quantize(v.x), quantize(v.y));
            if out.last().is_some_and(|last| last.distance(q) <= EPS) {
                info.dropped_duplicates += 1;
                continue;
            }
            out.push(q);
        }
        while out.len() > 1 && out[0].distance(out[out.len() - 1]) <= EPS {
            out.pop();
            info.dropped_duplicates += 1;
        }
        if out.len() < 3 {
            return Err(PolygonDefect::TooFewVertices);
        }
        if !is_simple(&out) {
            return Err(PolygonDefect::SelfIntersecting);
        }
        let area = signed_area(&out);
        if area.abs() < EPS {
            return Err(PolygonDefect::ZeroArea);
        }
        if area < 0.0 {
            out.reverse();
            info.reversed = true;
        }
        Ok((Self { vertices: out }, info))
    }

    pub fn vertices(&self) -> &[Vertex2D] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockElement {
    pub id: String,
    pub element_type: String,
    pub polygon: FootprintPolygon,
    pub floor_count: Option<u32>,
    pub facade: Option<String>,
}

impl BlockElement {
    pub fn is_greenspace(&self) -> bool {
        is_greenspace_type(&self.element_type)
    }

    pub fn is_building(&self) -> bool {
        !self.is_greenspace()
    }

    /// Floors used for extrusion; buildings without `floor_count` are one storey.
    pub fn floors(&self) -> u32 {
        self.floor_count.unwrap_or(1)
    }
}

pub fn is_greenspace_type(element_type: &str) -> bool {
    element_type.trim().eq_ignore_ascii_case("greenspace")
}

/// Block bounds `[0, width] x [0, height]` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub width: f64,
    pub height: f64,
}

impl Region {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn contains(&self, v: Vertex2D) -> bool {
        v.x >= -EPS && v.y >= -EPS && v.x <= self.width + EPS && v.y <= self.height + EPS
    }

    /// Tight bounds of all vertices rounded up to the next multiple of 10 m;
    /// 100 x 100 m when there are no elements.
    pub fn fit(elements: &[BlockElement]) -> Region {
        if elements.is_empty() {
            return Region { width: DEFAULT_REGION_SIDE, height: DEFAULT_REGION_SIDE };
        }
        let (mut w, mut h) = (0.0f64, 0.0f64);
        for v in elements.iter().flat_map(|e| e.polygon.vertices()) {
            w = w.max(v.x);
            h = h.max(v.y);
        }
        let up = |v: f64| ((v - EPS) / 10.0).ceil().max(1.0) * 10.0;
        Region { width: up(w), height: up(h) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockProgram {
    pub description: Option<String>,
    pub region: Region,
    pub elements: Vec<BlockElement>,
}

impl BlockProgram {
    /// Builds a program with the default fitted region.
    pub fn new(elements: Vec<BlockElement>) -> Self {
        let region = Region::fit(&elements);
        Self { description: None, region, elements }
    }

    pub fn element(&self, id: &str) -> Option<&BlockElement> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn element_mut(&mut self, id: &str) -> Option<&mut BlockElement> {
        self.elements.iter_mut().find(|e| e.id == id)
    }

    pub fn buildings(&self) -> impl Iterator<Item = &BlockElement> {
        self.elements.iter().filter(|e| e.is_building())
    }

    pub fn greenspaces(&self) -> impl Iterator<Item = &BlockElement> {
        self.elements.iter().filter(|e| e.is_greenspace())
    }

    /// Re-checks every invariant; used after programmatic edits.
    pub fn validate(&self) -> Result<(), ProgramError> {
        if !(self.region.width.is_finite() && self.region.height.is_finite())
            || self.region.width <= 0.0
            || self.region.height <= 0.0
        {
            return Err(ProgramError::InvalidField {
                path: "/region".into(),
                reason: "width and height must be positive".into(),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, e) in self.elements.iter().enumerate() {
            let path = format!("/elements/{i}");
            if e.id.trim().is_empty() {
                return Err(ProgramError::InvalidField { path: format!("{path}/id"), reason: "empty id".into() });
            }
            if e.element_type.trim().is_empty() {
                return Err(ProgramError::InvalidField { path: format!("{path}/type"), reason: "empty type".into() });
            }
            if !seen.insert(e.id.as_str()) {
                return Err(ProgramError::DuplicateId { id: e.id.clone(), path: format!("{path}/id") });
            }
            // The polygon may have been assembled by hand; re-run normalization
            // and insist it is a no-op.
            match FootprintPolygon::new(e.polygon.vertices().to_vec()) {
                Ok(p) if p == e.polygon => {}
                Ok(_) => {
                    return Err(ProgramError::InvalidField {
                        path: format!("{path}/polygon"),
                        reason: "polygon is not in normalized form".into(),
                    })
                }
                Err(defect) => return Err(ProgramError::BadPolygon { path: format!("{path}/polygon"), defect }),
            }
            if !e.polygon.vertices().iter().all(|v| self.region.contains(*v)) {
                return Err(ProgramError::OutOfRegion { path: format!("{path}/polygon") });
            }
            if e.is_greenspace() {
                if e.floor_count.is_some() {
                    return Err(ProgramError::BadFloorCount {
                        path: format!("{path}/floor_count"),
                        reason: "greenspace elements carry no floor_count".into(),
                    });
                }
                if e.facade.is_some() {
                    return Err(ProgramError::InvalidField {
                        path: format!("{path}/facade"),
                        reason: "facade only applies to buildings".into(),
                    });
                }
            } else if e.floor_count == Some(0) {
                return Err(ProgramError::BadFloorCount { path: format!("{path}/floor_count"), reason: "must be >= 1".into() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingComponent {
    pub component_type: String,
    pub description: String,
}

impl BuildingComponent {
    /// Lower-cased, trimmed type and comma phrases re-joined with ", ".
    pub fn canonical(component_type: &str, description: &str) -> Result<Self, ProgramError> {
        let component_type = component_type.trim().to_lowercase();
        if component_type.is_empty() {
            return Err(ProgramError::InvalidField { path: "/type".into(), reason: "empty component type".into() });
        }
        let description = canonical_description(description);
        if description.is_empty() {
            return Err(ProgramError::EmptyDescription(component_type));
        }
        Ok(Self { component_type, description })
    }

    /// The comma-separated phrases, in order.
    pub fn phrases(&self) -> impl Iterator<Item = &str> {
        self.description.split(',').map(str::trim).filter(|p| !p.is_empty())
    }
}

pub fn canonical_description(description: &str) -> String {
    description
        .split(',')
        .map(|p| p.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BuildingProgram {
    pub components: Vec<BuildingComponent>,
    pub source_facade: Option<String>,
}

impl BuildingProgram {
    pub fn component(&self, component_type: &str) -> Option<&BuildingComponent> {
        self.components.iter().find(|c| c.component_type == component_type)
    }

    /// Inserts or replaces the component of the same type, keeping position.
    /// Returns `true` when a previous component was replaced.
    pub fn upsert(&mut self, component: BuildingComponent) -> bool {
        match self.components.iter_mut().find(|c| c.component_type == component.component_type) {
            Some(slot) => {
                *slot = component;
                true
            }
            None => {
                self.components.push(component);
                false
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pts;

    #[test]
    fn footprint_normalization() {
        let cw = pts(&[(0.0, 0.0), (0.0, 2.0), (2.0, 2.0), (2.0, 0.0), (0.0, 0.0)]);
        let (p, info) = FootprintPolygon::normalize(cw).unwrap();
        assert!(info.reversed);
        assert_eq!(info.dropped_duplicates, 1);
        assert_eq!(p.len(), 4);
        assert!(p.area() > 0.0);

        let bowtie = pts(&[(0.0, 0.0), (10.0, 10.0), (10.0, 0.0), (0.0, 10.0)]);
        assert_eq!(FootprintPolygon::new(bowtie), Err(PolygonDefect::SelfIntersecting));
        assert_eq!(
            FootprintPolygon::new(pts(&[(0.0, 0.0), (1.0, 0.0)])),
            Err(PolygonDefect::TooFewVertices)
        );
        assert_eq!(
            FootprintPolygon::new(vec![Vertex2D::new(f64::NAN, 0.0), Vertex2D::new(1.0, 0.0), Vertex2D::new(0.0, 1.0)]),
            Err(PolygonDefect::NonFinite)
        );
        let sliver = pts(&[(0.0, 0.0), (1.0, 0.0), (0.5, 1e-12)]);
        assert!(FootprintPolygon::new(sliver).is_err());
    }

    #[test]
    fn region_fit_rounds_up() {
        let e = |x: f64, y: f64| BlockElement {
            id: "a".into(),
            element_type: "office".into(),
            polygon: FootprintPolygon::new(pts(&[(0.0, 0.0), (x, 0.0), (x, y), (0.0, y)])).unwrap(),
            floor_count: None,
            facade: None,
        };
        assert_eq!(Region::fit(&[e(22.0, 22.0)]), Region { width: 30.0, height: 30.0 });
        assert_eq!(Region::fit(&[e(100.0, 40.0)]), Region { width: 100.0, height: 40.0 });
        assert_eq!(Region::fit(&[]), Region { width: 100.0, height: 100.0 });
    }

    #[test]
    fn upsert_keeps_position() {
        let mut b = BuildingProgram::default();
        b.upsert(BuildingComponent::canonical("Window", " glass ,  large ").unwrap());
        b.upsert(BuildingComponent::canonical("door", "wood").unwrap());
        assert!(b.upsert(BuildingComponent::canonical("window", "arched").unwrap()));
        assert_eq!(b.components[0].component_type, "window");
        assert_eq!(b.components[0].description, "arched");
        assert_eq!(
            BuildingComponent::canonical("door", "  ,  ").unwrap_err(),
            ProgramError::EmptyDescription("door".into())
        );
    }
}
