//! Turns block and building programs into a 3D scene.
//!
//! Buildings are prisms with a vertex ring at every floor line. Facade
//! components come from a keyword table (`components.json`) and are placed
//! on a bay grid along each footprint edge. Greenspaces are flat polygons with
//! trees; a street ring with lights surrounds the block.

mod components;
mod export;
mod extrude;
mod facade;
mod mesh;
mod scene;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use components::{realize_component, tokens, ComponentRule, ComponentTable, ParamValue, ParametricComponent};
pub use export::{export_glb, export_obj, export_scene, to_y_up, ExportFormat};
pub use extrude::{extrude_footprint, prism, PrismMaterials};
pub use facade::{bay_offsets, layout_facade, FacadeEdge, Placement, PlacementTransform};
pub use mesh::{MaterialTag, Mesh, MeshDefect, Vec3};
pub use scene::{
    assemble_scene, prop_mesh, sample_trees, street_ring, streetlights, Prop, PropKind, SceneBuilding,
    SceneGreenspace, SceneMetadata, ScenePackage, SUPPORTED_COMPONENTS,
};

pub mod vec3 {
    pub use super::mesh::{add, cross, dot, midpoint, norm, sub};
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecutorError {
    #[error("element `{0}` is not a building")]
    NotABuilding(String),
    #[error("triangulation failed: {0}")]
    TriangulationFailure(String),
    #[error("element `{id}`: {source}")]
    Element { id: String, source: Box<ExecutorError> },
    #[error("component table: {0}")]
    ComponentTable(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("unsupported export format `{0}`")]
    UnsupportedFormat(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecutorConfig {
    pub floor_height: f64,
    pub bay_width: f64,
    pub edge_margin: f64,
    /// Gap between a wall and the components mounted on it.
    pub protrusion: f64,
    pub street_width: f64,
    pub streetlight_spacing: f64,
    pub tree_spacing: f64,
    pub tree_inset: f64,
    pub tree_jitter: f64,
    pub seed: u64,
    #[serde(skip)]
    pub components: ComponentTable,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        Self {
            floor_height: 3.0,
            bay_width: 2.5,
            edge_margin: 1.0,
            protrusion: 0.05,
            street_width: 6.0,
            streetlight_spacing: 20.0,
            tree_spacing: 6.0,
            tree_inset: 1.0,
            tree_jitter: 1.0,
            seed: 0,
            components: ComponentTable::builtin(),
        }
    }
}
