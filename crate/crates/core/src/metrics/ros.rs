use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::executor::vec3::{cross, dot, norm, sub};
use crate::executor::{Mesh, Vec3};

/// Which scene geometry contributes edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RosScope {
    #[default]
    Shells,
    FullScene,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RosConfig {
    pub tolerance_deg: f64,
    pub scope: RosScope,
}

impl Default for RosConfig {
    fn default() -> Self {
        Self { tolerance_deg: 5.0, scope: RosScope::Shells }
    }
}

/// Edges where the surface actually bends, plus open boundary edges.
/// Diagonals inside flat faces and floor lines across flat walls are dropped.
pub fn feature_edges(mesh: &Mesh) -> Vec<(Vec3, Vec3)> {
    let m = mesh.welded();
    let mut adjacent: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (i, t) in m.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            adjacent.entry((a.min(b), a.max(b))).or_default().push(i);
        }
    }
    let normal = |i: usize| {
        let n = m.area_vector(i);
        let l = norm(n);
        if l > 0.0 {
            n.map(|c| c / l)
        } else {
            n
        }
    };
    let mut keys: Vec<_> = adjacent.keys().copied().collect();
    keys.sort_unstable();
    keys.into_iter()
        .filter(|k| {
            let tris = &adjacent[k];
            match tris.as_slice() {
                [a, b] => norm(cross(normal(*a), normal(*b))) > 1e-9 || dot(normal(*a), normal(*b)) < 0.0,
                _ => true,
            }
        })
        .map(|(a, b)| (m.vertices[a as usize], m.vertices[b as usize]))
        .collect()
}

fn mod90(deg: f64) -> f64 {
    deg.rem_euclid(90.0)
}

/// Length-weighted share of horizontal edge directions within the tolerance
/// of the best axis pair: the heaviest arc of width `2 * tolerance` on the
/// circle of directions modulo 90 degrees.
pub fn ros_of_edges(edges: &[(Vec3, Vec3)], tolerance_deg: f64) -> Result<f64, MetricsError> {
    let mut dirs = Vec::new();
    for (a, b) in edges {
        let d = sub(*b, *a);
        let len = d[0].hypot(d[1]);
        // vertical edges have no horizontal direction
        if len <= 1e-9 * (1.0 + norm(d)) {
            continue;
        }
        dirs.push((mod90(d[1].atan2(d[0]).to_degrees()), len));
    }
    let total: f64 = dirs.iter().map(|(_, w)| w).sum();
    if dirs.is_empty() || total <= 0.0 {
        return Err(MetricsError::DegenerateMesh);
    }
    let width = 2.0 * tolerance_deg + 1e-9;
    if width >= 90.0 {
        return Ok(1.0);
    }
    dirs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = dirs.len();
    let at = |i: usize| if i < n { dirs[i] } else { (dirs[i - n].0 + 90.0, dirs[i - n].1) };
    let (mut best, mut sum, mut end) = (0.0f64, 0.0, 0);
    for start in 0..n {
        while end < start + n && at(end).0 - at(start).0 <= width {
            sum += at(end).1;
            end += 1;
        }
        best = best.max(sum);
        sum -= at(start).1;
    }
    Ok((best / total).clamp(0.0, 1.0))
}

pub fn ros(mesh: &Mesh, config: &RosConfig) -> Result<f64, MetricsError> {
    ros_of_edges(&feature_edges(mesh), config.tolerance_deg)
}

/// One direction set over the feature edges of several meshes.
pub fn ros_of_meshes<'a>(meshes: impl IntoIterator<Item = &'a Mesh>, config: &RosConfig) -> Result<f64, MetricsError> {
    let edges: Vec<_> = meshes.into_iter().flat_map(feature_edges).collect();
    ros_of_edges(&edges, config.tolerance_deg)
}
