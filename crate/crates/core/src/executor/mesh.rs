use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn midpoint(a: Vec3, b: Vec3) -> Vec3 {
    [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5, (a[2] + b[2]) * 0.5]
}

/// Surface material, the only appearance attribute the executor assigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialTag {
    Glass,
    Concrete,
    Wood,
    Greenery,
    Asphalt,
    Metal,
}

impl MaterialTag {
    pub const ALL: [MaterialTag; 6] = [Self::Glass, Self::Concrete, Self::Wood, Self::Greenery, Self::Asphalt, Self::Metal];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Glass => "glass",
            Self::Concrete => "concrete",
            Self::Wood => "wood",
            Self::Greenery => "greenery",
            Self::Asphalt => "asphalt",
            Self::Metal => "metal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// Linear RGB used by the exporters.
    pub fn base_color(self) -> [f64; 3] {
        match self {
            Self::Glass => [0.55, 0.70, 0.85],
            Self::Concrete => [0.70, 0.70, 0.68],
            Self::Wood => [0.55, 0.36, 0.20],
            Self::Greenery => [0.25, 0.55, 0.25],
            Self::Asphalt => [0.20, 0.20, 0.22],
            Self::Metal => [0.60, 0.62, 0.65],
        }
    }
}

/// Indexed triangle mesh with one material per triangle, z up, meters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub face_material: Vec<MaterialTag>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshDefect {
    IndexOutOfRange { triangle: usize },
    DegenerateTriangle { triangle: usize },
    MaterialCountMismatch,
}

impl Mesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn push_vertex(&mut self, v: Vec3) -> u32 {
        self.vertices.push(v);
        (self.vertices.len() - 1) as u32
    }

    pub fn push_triangle(&mut self, t: [u32; 3], material: MaterialTag) {
        self.triangles.push(t);
        self.face_material.push(material);
    }

    pub fn append(&mut self, other: &Mesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
        self.face_material.extend_from_slice(&other.face_material);
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let t = self.triangles[i];
        [self.vertices[t[0] as usize], self.vertices[t[1] as usize], self.vertices[t[2] as usize]]
    }

    /// Twice-area vector of triangle `i`.
    pub fn area_vector(&self, i: usize) -> Vec3 {
        let [a, b, c] = self.triangle(i);
        cross(sub(b, a), sub(c, a))
    }

    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| {
            (
                [lo[0].min(v[0]), lo[1].min(v[1]), lo[2].min(v[2])],
                [hi[0].max(v[0]), hi[1].max(v[1]), hi[2].max(v[2])],
            )
        }))
    }

    /// Signed volume by the divergence theorem; positive for outward winding.
    pub fn volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                dot(a, cross(b, c))
            })
            .sum::<f64>()
            / 6.0
    }

    pub fn check(&self) -> Result<(), MeshDefect> {
        if self.face_material.len() != self.triangles.len() {
            return Err(MeshDefect::MaterialCountMismatch);
        }
        let n = self.vertices.len() as u32;
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(MeshDefect::IndexOutOfRange { triangle: i });
            }
            if norm(self.area_vector(i)) <= 1e-12 {
                return Err(MeshDefect::DegenerateTriangle { triangle: i });
            }
        }
        Ok(())
    }

    /// Undirected edge use counts over vertex indices (no welding).
    pub fn edge_uses(&self) -> BTreeMap<(u32, u32), usize> {
        let mut uses = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        uses
    }

    /// Every edge shared by exactly two triangles, traversed in opposite
    /// directions by them.
    pub fn is_closed_manifold(&self) -> bool {
        let mut directed: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        !self.triangles.is_empty()
            && directed.iter().all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
    }

    /// V - E + F over the vertices actually referenced.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                used[v as usize] = true;
            }
        }
        let v = used.iter().filter(|u| **u).count() as i64;
        v - self.edge_uses().len() as i64 + self.triangles.len() as i64
    }

    /// Merges vertices that agree on a 1 µm grid.
    pub fn welded(&self) -> Mesh {
        let key = |v: Vec3| v.map(|c| (c * 1e6).round() as i64);
        let mut ids: HashMap<[i64; 3], u32> = HashMap::new();
        let mut out = Mesh::default();
        let remap: Vec<u32> = self
            .vertices
            .iter()
            .map(|&v| *ids.entry(key(v)).or_insert_with(|| out.push_vertex(v)))
            .collect();
        for (t, &m) in self.triangles.iter().zip(&self.face_material) {
            out.push_triangle(t.map(|i| remap[i as usize]), m);
        }
        out
    }

    /// Splits every triangle into four at its edge midpoints. Midpoints are
    /// shared between neighbouring triangles so a closed mesh stays closed.
    pub fn subdivided(&self) -> Mesh {
        let mut out = Mesh { vertices: self.vertices.clone(), ..Mesh::default() };
        let mut mids: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |out: &mut Mesh, a: u32, b: u32| {
            *mids
                .entry((a.min(b), a.max(b)))
                .or_insert_with(|| out.push_vertex(midpoint(out.vertices[a as usize], out.vertices[b as usize])))
        };
        for (t, &m) in self.triangles.iter().zip(&self.face_material) {
            let [a, b, c] = *t;
            let ab = mid(&mut out, a, b);
            let bc = mid(&mut out, b, c);
            let ca = mid(&mut out, c, a);
            out.push_triangle([a, ab, ca], m);
            out.push_triangle([ab, b, bc], m);
            out.push_triangle([ca, bc, c], m);
            out.push_triangle([ab, bc, ca], m);
        }
        out
    }

    pub fn map_vertices(&mut self, f: impl Fn(Vec3) -> Vec3) {
        for v in &mut self.vertices {
            *v = f(*v);
        }
    }

    /// Rotation about the vertical axis through the origin.
    pub fn rotated_z(&self, radians: f64) -> Mesh {
        let (s, c) = radians.sin_cos();
        let mut out = self.clone();
        out.map_vertices(|v| [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]);
        out
    }

    /// Closed axis-aligned box with two triangles per face.
    pub fn cuboid(min: Vec3, max: Vec3, material: MaterialTag) -> Mesh {
        let mut m = Mesh::default();
        for i in 0..8u32 {
            m.push_vertex([
                if i & 1 == 0 { min[0] } else { max[0] },
                if i & 2 == 0 { min[1] } else { max[1] },
                if i & 4 == 0 { min[2] } else { max[2] },
            ]);
        }
        const QUADS: [[u32; 4]; 6] = [
            [0, 2, 3, 1], // bottom
            [4, 5, 7, 6], // top
            [0, 1, 5, 4], // south
            [2, 6, 7, 3], // north
            [0, 4, 6, 2], // west
            [1, 3, 7, 5], // east
        ];
        for [a, b, c, d] in QUADS {
            m.push_triangle([a, b, c], material);
            m.push_triangle([a, c, d], material);
        }
        m
    }
}
