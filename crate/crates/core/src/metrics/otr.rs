use std::collections::{BTreeMap, HashMap};

use super::MetricsError;
use crate::executor::vec3::{cross, dot, norm, sub};
use crate::executor::Mesh;

/// A maximal connected set of coplanar triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPatch {
    pub triangles: usize,
    /// Boundary loop vertices where the boundary turns.
    pub corners: usize,
    pub loops: usize,
}

impl PlanarPatch {
    /// Fewest triangles covering the patch: `n + 2h - 2` for `n` corners and
    /// `h` holes. A patch without boundary keeps its own count.
    pub fn demand(&self) -> usize {
        if self.loops == 0 {
            return self.triangles;
        }
        (self.corners + 2 * (self.loops - 1)).saturating_sub(2).max(1)
    }
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut i = i;
        while self.0[i] != r {
            let next = self.0[i];
            self.0[i] = r;
            i = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

pub fn planar_patches(mesh: &Mesh) -> Result<Vec<PlanarPatch>, MetricsError> {
    let m = mesh.welded();
    let normals: Vec<_> = (0..m.triangles.len())
        .map(|i| {
            let n = m.area_vector(i);
            let l = norm(n);
            if l > 0.0 {
                n.map(|c| c / l)
            } else {
                n
            }
        })
        .collect();
    let mut adjacent: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (i, t) in m.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            adjacent.entry((a.min(b), a.max(b))).or_default().push(i);
        }
    }
    let mut dsu = Dsu((0..m.triangles.len()).collect());
    let mut keys: Vec<_> = adjacent.keys().copied().collect();
    keys.sort_unstable();
    for k in &keys {
        match adjacent[k].as_slice() {
            [a, b] => {
                if dot(normals[*a], normals[*b]) > 1.0 - 1e-9 {
                    dsu.union(*a, *b);
                }
            }
            [_] => {}
            _ => return Err(MetricsError::NonManifold(k.0, k.1)),
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..m.triangles.len() {
        groups.entry(dsu.find(i)).or_default().push(i);
    }
    let mut out = Vec::new();
    for tris in groups.values() {
        // Directed boundary edges: those whose twin is not in the patch.
        let mut count: HashMap<(u32, u32), usize> = HashMap::new();
        for &i in tris {
            let t = m.triangles[i];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut next: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &i in tris {
            let t = m.triangles[i];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if count[&(a.min(b), a.max(b))] == 1 {
                    next.entry(a).or_default().push(b);
                }
            }
        }
        let (mut corners, mut loops) = (0, 0);
        while let Some((&start, _)) = next.iter().find(|(_, v)| !v.is_empty()) {
            let mut ring = vec![start];
            let mut cur = start;
            while let Some(n) = next.get_mut(&cur).and_then(|v| v.pop()) {
                if n == start {
                    break;
                }
                ring.push(n);
                cur = n;
            }
            loops += 1;
            let len = ring.len();
            for k in 0..len {
                let p = m.vertices[ring[(k + len - 1) % len] as usize];
                let c = m.vertices[ring[k] as usize];
                let q = m.vertices[ring[(k + 1) % len] as usize];
                let (u, v) = (sub(c, p), sub(q, c));
                if norm(cross(u, v)) > 1e-9 * norm(u) * norm(v) {
                    corners += 1;
                }
            }
        }
        out.push(PlanarPatch { triangles: tris.len(), corners, loops });
    }
    Ok(out)
}

/// Triangle count over the planar-patch demand. 1.0 means no triangle is
/// spent beyond what the flat regions need.
pub fn otr(mesh: &Mesh) -> Result<f64, MetricsError> {
    otr_of_meshes([mesh])
}

/// Pooled ratio over separately analysed meshes, so touching buildings are
/// not welded into one non-manifold surface.
pub fn otr_of_meshes<'a>(meshes: impl IntoIterator<Item = &'a Mesh>) -> Result<f64, MetricsError> {
    let (mut actual, mut demand) = (0usize, 0usize);
    for mesh in meshes {
        for p in planar_patches(mesh)? {
            actual += p.triangles;
            demand += p.demand();
        }
    }
    if demand == 0 {
        return Err(MetricsError::DegenerateMesh);
    }
    Ok(actual as f64 / demand as f64)
}
