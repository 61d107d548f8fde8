use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Value};

use super::mesh::{MaterialTag, Mesh, Vec3};
use super::scene::ScenePackage;
use super::ExecutorError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Obj,
    Glb,
}

impl FromStr for ExportFormat {
    type Err = ExecutorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(Self::Obj),
            "glb" | "gltf" => Ok(Self::Glb),
            other => Err(ExecutorError::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Scene z-up to glTF/OBJ y-up: `(x, y, z) -> (x, z, -y)`.
pub fn to_y_up(v: Vec3) -> Vec3 {
    [v[0], v[2], -v[1]]
}

/// Named meshes in export order: buildings, greenspaces, then the shared
/// `streets` and `props` objects.
fn objects(scene: &ScenePackage) -> Vec<(String, Mesh)> {
    let mut out: Vec<(String, Mesh)> = scene.buildings.iter().map(|b| (b.id.clone(), b.combined())).collect();
    out.extend(scene.greenspaces.iter().map(|g| (g.id.clone(), g.mesh.clone())));
    out.push(("streets".into(), scene.streets.clone()));
    out.push(("props".into(), scene.props_mesh()));
    out
}

/// Per material: used vertices in first-use order and local indices.
fn split_by_material(mesh: &Mesh) -> Vec<(MaterialTag, Vec<Vec3>, Vec<u32>)> {
    let mut out = Vec::new();
    for tag in MaterialTag::ALL {
        let mut remap = vec![u32::MAX; mesh.vertices.len()];
        let mut verts = Vec::new();
        let mut idx = Vec::new();
        for (t, &m) in mesh.triangles.iter().zip(&mesh.face_material) {
            if m != tag {
                continue;
            }
            for &v in t {
                if remap[v as usize] == u32::MAX {
                    remap[v as usize] = verts.len() as u32;
                    verts.push(mesh.vertices[v as usize]);
                }
                idx.push(remap[v as usize]);
            }
        }
        if !idx.is_empty() {
            out.push((tag, verts, idx));
        }
    }
    out
}

fn fmt_coord(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// Wavefront OBJ text and the matching MTL library.
pub fn export_obj(scene: &ScenePackage, mtl_name: &str) -> (String, String) {
    let mut obj = format!("mtllib {mtl_name}\n");
    let mut base = 1usize;
    for (name, mesh) in objects(scene) {
        if mesh.is_empty() {
            continue;
        }
        let _ = writeln!(obj, "o {name}");
        for v in &mesh.vertices {
            let [x, y, z] = to_y_up(*v);
            let _ = writeln!(obj, "v {} {} {}", fmt_coord(x), fmt_coord(y), fmt_coord(z));
        }
        for tag in MaterialTag::ALL {
            let faces: Vec<_> =
                mesh.triangles.iter().zip(&mesh.face_material).filter(|(_, m)| **m == tag).map(|(t, _)| t).collect();
            if faces.is_empty() {
                continue;
            }
            let _ = writeln!(obj, "usemtl {}", tag.as_str());
            for t in faces {
                let [a, b, c] = t.map(|i| i as usize + base);
                let _ = writeln!(obj, "f {a} {b} {c}");
            }
        }
        base += mesh.vertices.len();
    }
    let mut mtl = String::new();
    for tag in MaterialTag::ALL {
        let [r, g, b] = tag.base_color();
        let _ = writeln!(mtl, "newmtl {}\nKd {r:.3} {g:.3} {b:.3}\n", tag.as_str());
    }
    (obj, mtl)
}

fn pad4(buf: &mut Vec<u8>, byte: u8) {
    while !buf.len().is_multiple_of(4) {
        buf.push(byte);
    }
}

/// Binary glTF 2.0: one node per element named by its id, plus `streets` and
/// `props`; one primitive per material with f32 positions and u32 indices.
pub fn export_glb(scene: &ScenePackage) -> Vec<u8> {
    let mut bin: Vec<u8> = Vec::new();
    let mut buffer_views = Vec::new();
    let mut accessors = Vec::new();
    let mut meshes = Vec::new();
    let mut nodes = Vec::new();
    let mut used = Vec::new();
    let parts: Vec<_> = objects(scene).into_iter().map(|(name, mesh)| (name, split_by_material(&mesh))).collect();
    for (_, groups) in &parts {
        for (tag, _, _) in groups {
            if !used.contains(tag) {
                used.push(*tag);
            }
        }
    }
    used.sort();

    for (name, groups) in parts {
        if groups.is_empty() {
            nodes.push(json!({ "name": name }));
            continue;
        }
        let mut primitives = Vec::new();
        for (tag, verts, idx) in groups {
            let mut lo = [f32::INFINITY; 3];
            let mut hi = [f32::NEG_INFINITY; 3];
            let offset = bin.len();
            for v in &verts {
                let p = to_y_up(*v).map(|c| c as f32);
                for k in 0..3 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                    bin.extend_from_slice(&p[k].to_le_bytes());
                }
            }
            buffer_views.push(json!({
                "buffer": 0, "byteOffset": offset, "byteLength": bin.len() - offset, "target": 34962
            }));
            accessors.push(json!({
                "bufferView": buffer_views.len() - 1,
                "componentType": 5126,
                "count": verts.len(),
                "type": "VEC3",
                "min": lo,
                "max": hi
            }));
            let position = accessors.len() - 1;
            let offset = bin.len();
            for i in &idx {
                bin.extend_from_slice(&i.to_le_bytes());
            }
            buffer_views.push(json!({
                "buffer": 0, "byteOffset": offset, "byteLength": bin.len() - offset, "target": 34963
            }));
            accessors.push(json!({
                "bufferView": buffer_views.len() - 1,
                "componentType": 5125,
                "count": idx.len(),
                "type": "SCALAR"
            }));
            primitives.push(json!({
                "attributes": { "POSITION": position },
                "indices": accessors.len() - 1,
                "material": used.iter().position(|t| *t == tag).expect("material registered"),
                "mode": 4
            }));
        }
        meshes.push(json!({ "name": name, "primitives": primitives }));
        nodes.push(json!({ "name": name, "mesh": meshes.len() - 1 }));
    }

    let materials: Vec<Value> = used
        .iter()
        .map(|t| {
            let [r, g, b] = t.base_color();
            json!({
                "name": t.as_str(),
                "pbrMetallicRoughness": {
                    "baseColorFactor": [r, g, b, 1.0],
                    "metallicFactor": if *t == MaterialTag::Metal { 0.8 } else { 0.0 },
                    "roughnessFactor": if *t == MaterialTag::Glass { 0.1 } else { 0.8 }
                }
            })
        })
        .collect();
    let mut doc = json!({
        "asset": { "version": "2.0", "generator": "cityforge" },
        "scene": 0,
        "scenes": [{ "nodes": (0..nodes.len()).collect::<Vec<_>>() }],
        "nodes": nodes,
        "meshes": meshes,
        "materials": materials,
        "accessors": accessors,
        "bufferViews": buffer_views,
        "buffers": [{ "byteLength": bin.len() }]
    });
    if bin.is_empty() {
        let obj = doc.as_object_mut().expect("object");
        for key in ["meshes", "materials", "accessors", "bufferViews", "buffers"] {
            obj.remove(key);
        }
    }
    let mut json_chunk = serde_json::to_vec(&doc).expect("document serializes");
    pad4(&mut json_chunk, b' ');
    pad4(&mut bin, 0);

    let total = 12 + 8 + json_chunk.len() + if bin.is_empty() { 0 } else { 8 + bin.len() };
    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(b"glTF");
    out.extend_from_slice(&2u32.to_le_bytes());
    out.extend_from_slice(&(total as u32).to_le_bytes());
    out.extend_from_slice(&(json_chunk.len() as u32).to_le_bytes());
    out.extend_from_slice(b"JSON");
    out.extend_from_slice(&json_chunk);
    if !bin.is_empty() {
        out.extend_from_slice(&(bin.len() as u32).to_le_bytes());
        out.extend_from_slice(b"BIN\0");
        out.extend_from_slice(&bin);
    }
    out
}

/// Writes `scene` to `path`; OBJ also writes a sibling `.mtl`.
pub fn export_scene(scene: &ScenePackage, format: ExportFormat, path: &Path) -> Result<(), ExecutorError> {
    let io = |e: std::io::Error| ExecutorError::Io(format!("{}: {e}", path.display()));
    match format {
        ExportFormat::Glb => std::fs::write(path, export_glb(scene)).map_err(io),
        ExportFormat::Obj => {
            let mtl_path = path.with_extension("mtl");
            let mtl_name = mtl_path.file_name().and_then(|n| n.to_str()).unwrap_or("scene.mtl").to_string();
            let (obj, mtl) = export_obj(scene, &mtl_name);
            std::fs::write(path, obj).map_err(io)?;
            std::fs::write(&mtl_path, mtl).map_err(io)
        }
    }
}
