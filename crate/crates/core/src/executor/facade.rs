use serde::{Deserialize, Serialize};

use super::components::{ComponentTable, ParametricComponent};
use super::mesh::{Mesh, Vec3};
use super::ExecutorConfig;
use crate::geometry::EdgeFrame;
use crate::program::BuildingProgram;

/// Maps a component's canonical local space into the world.
///
/// Local x runs along the wall, local y up, local +z out of the wall. The
/// transform scales in local space, turns local +z to world -y, rotates about
/// the vertical axis and then translates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementTransform {
    pub rotation: f64,
    pub translation: Vec3,
    pub scale: Vec3,
}

impl PlacementTransform {
    pub fn apply(&self, p: Vec3) -> Vec3 {
        let s = [p[0] * self.scale[0], p[1] * self.scale[1], p[2] * self.scale[2]];
        let b = [s[0], -s[2], s[1]];
        let (sin, cos) = self.rotation.sin_cos();
        [
            cos * b[0] - sin * b[1] + self.translation[0],
            sin * b[0] + cos * b[1] + self.translation[1],
            b[2] + self.translation[2],
        ]
    }

    /// World direction of the component's local +z axis.
    pub fn facing(&self) -> Vec3 {
        let (sin, cos) = self.rotation.sin_cos();
        [sin, -cos, 0.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub component: ParametricComponent,
    pub transform: PlacementTransform,
    pub floor: u32,
    /// Distance along the edge of the component centre.
    pub offset: f64,
}

impl Placement {
    pub fn mesh(&self) -> Mesh {
        let mut m = self.component.local_mesh();
        m.map_vertices(|v| self.transform.apply(v));
        m
    }
}

/// Options for one edge of one building.
#[derive(Debug, Clone, Copy)]
pub struct FacadeEdge<'a> {
    pub edge: &'a EdgeFrame,
    pub floors: u32,
    pub floor_height: f64,
    /// Whether this edge carries the entrance.
    pub door: bool,
}

fn place(
    edge: &EdgeFrame,
    component: &ParametricComponent,
    offset: f64,
    center_z: f64,
    size: Vec3,
    protrusion: f64,
    floor: u32,
) -> Placement {
    let at = edge.point_at(offset).add(edge.outward_normal.scale(protrusion));
    Placement {
        component: component.clone(),
        transform: PlacementTransform { rotation: edge.heading(), translation: [at.x, at.y, center_z], scale: size },
        floor,
        offset,
    }
}

/// Bay centres along an edge: `floor((L - 2 margin) / bay)` bays, centred.
pub fn bay_offsets(length: f64, bay: f64, margin: f64) -> Vec<f64> {
    if length + 1e-9 < bay || bay <= 0.0 {
        return Vec::new();
    }
    let n = (((length - 2.0 * margin) / bay) + 1e-9).floor().max(0.0) as usize;
    let start = (length - n as f64 * bay) / 2.0;
    (0..n).map(|i| start + (i as f64 + 0.5) * bay).collect()
}

/// Component placements for one wall.
///
/// Windows fill a bay grid on every floor. When `door` is set, one door sits
/// centred on the ground floor and ground-floor windows it would overlap are
/// left out. Balconies hang under the windows of the upper floors. Walls
/// shorter than one bay get nothing.
pub fn layout_facade(
    facade: FacadeEdge<'_>,
    program: &BuildingProgram,
    table: &ComponentTable,
    config: &ExecutorConfig,
) -> Vec<Placement> {
    let FacadeEdge { edge, floors, floor_height: fh, door } = facade;
    let mut out = Vec::new();
    if edge.length + 1e-9 < config.bay_width {
        return out;
    }
    let eps = config.protrusion;
    let realized = |ty: &str| program.component(ty).map(|c| table.realize(c));
    let window = realized("window");
    let door_c = realized("door").filter(|_| door);
    let balcony = realized("balcony");

    let mut door_span = None;
    if let Some(d) = &door_c {
        let w = d.number("width", 1.2).min(edge.length - 0.2);
        let h = d.number("height", 2.4).min(fh - 0.2);
        if w > 0.0 && h > 0.0 {
            let mid = edge.length / 2.0;
            door_span = Some((mid - w / 2.0, mid + w / 2.0));
            out.push(place(edge, d, mid, h / 2.0, [w, h, d.number("depth", 0.12)], eps, 0));
        }
    }

    let bays = bay_offsets(edge.length, config.bay_width, config.edge_margin);
    if let Some(win) = &window {
        let w = win.number("width_ratio", 0.6).clamp(0.05, 0.95) * config.bay_width;
        let h = win.number("height_ratio", 0.5).clamp(0.05, 0.9) * fh;
        let depth = win.number("depth", 0.15);
        for floor in 0..floors {
            let center_z = floor as f64 * fh + fh / 2.0;
            for &s in &bays {
                let clashes = floor == 0
                    && door_span.is_some_and(|(lo, hi)| s + w / 2.0 > lo && s - w / 2.0 < hi);
                if !clashes {
                    out.push(place(edge, win, s, center_z, [w, h, depth], eps, floor));
                }
            }
        }
    }
    if let Some(b) = &balcony {
        let w = window.as_ref().map_or(0.6, |win| win.number("width_ratio", 0.6).clamp(0.05, 0.95)) * config.bay_width
            + 2.0 * b.number("overhang", 0.2);
        let w = w.min(config.bay_width);
        let t = b.number("thickness", 0.15).min(fh / 4.0);
        for floor in 1..floors {
            for &s in &bays {
                out.push(place(edge, b, s, floor as f64 * fh + t / 2.0, [w, t, b.number("depth", 1.0)], eps, floor));
            }
        }
    }
    out
}
