//! Minimal triangle/quad soup import (a subset of Wavefront OBJ).
//!
//! Supported statements: `v x y z`, `f i j k [l]` (1-based or negative
//! indices; `/`-separated texture and normal indices are ignored),
//! `g name` / `usemtl name` to select the material of following faces, and
//! `#` comments. Imported faces are two-sided and transmissive. A ground
//! square covering the mesh footprint is added when requested.

use crate::error::{Error, Result};
use crate::geom::Point3;
use crate::material::{Material, MaterialLibrary};
use crate::scene::{FaceSpec, Scene, GROUND_MARGIN};

pub const DEFAULT_IMPORT_MATERIAL: &str = "concrete";

pub fn parse_obj(text: &str) -> Result<Vec<FaceSpec>> {
    let mut verts: Vec<Point3> = Vec::new();
    let mut faces = Vec::new();
    let mut material = DEFAULT_IMPORT_MATERIAL.to_string();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap();
        let err = |msg: String| Error::Import { line: line_no, msg };
        match tag {
            "v" => {
                let xs: Vec<f64> = parts
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(format!("bad vertex: {e}")))?;
                if xs.len() < 3 {
                    return Err(err("vertex needs three coordinates".into()));
                }
                verts.push(Point3::new(xs[0], xs[1], xs[2]));
            }
            "f" => {
                let mut idx = Vec::new();
                for p in parts {
                    let first = p.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|_| err(format!("bad face index {p:?}")))?;
                    let n = verts.len() as i64;
                    let k = if i > 0 { i - 1 } else { n + i };
                    if i == 0 || k < 0 || k >= n {
                        return Err(err(format!("face index {i} out of range")));
                    }
                    idx.push(k as usize);
                }
                if idx.len() < 3 || idx.len() > 4 {
                    return Err(err(format!("{} vertices per face, expected 3 or 4", idx.len())));
                }
                faces.push(FaceSpec {
                    vertices: idx.iter().map(|&k| verts[k]).collect(),
                    material: material.clone(),
                    two_sided: true,
                    transmissive: true,
                    building: None,
                });
            }
            "g" | "usemtl" => {
                if let Some(name) = parts.next() {
                    material = name.to_string();
                }
            }
            "o" | "s" | "vt" | "vn" | "mtllib" => {}
            other => return Err(err(format!("unsupported statement {other:?}"))),
        }
    }
    Ok(faces)
}

/// Builds a scene from OBJ text, optionally adding a ground square that
/// covers the mesh footprint with a 10% margin.
pub fn scene_from_obj(
    text: &str,
    materials: MaterialLibrary,
    ground: Option<&Material>,
) -> Result<Scene> {
    let mut specs = parse_obj(text)?;
    if specs.is_empty() {
        return Err(Error::Empty("imported mesh"));
    }
    let mut materials = materials;
    if let Some(g) = ground {
        materials.insert(g.clone())?;
        let half = specs
            .iter()
            .flat_map(|s| s.vertices.iter())
            .map(|p| p.x.abs().max(p.y.abs()))
            .fold(0.0, f64::max);
        specs.push(super::ground_face(half * GROUND_MARGIN, &g.name));
    }
    Scene::from_faces(&specs, materials)
}
