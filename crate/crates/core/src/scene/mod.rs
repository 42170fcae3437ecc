//! Immutable intersectable world geometry.
//!
//! A [`Scene`] is a set of planar convex faces (triangles or quads) with an
//! acceleration structure, plus the diffraction edges shared between them.
//! Generated cities produce closed boxes whose faces are one-sided with
//! outward normals; imported meshes are treated as two-sided sheets.

mod bvh;
pub mod import;

use std::collections::HashMap;

use crate::city::CityLayout;
use crate::error::{invalid, Result};
use crate::geom::{Aabb, Point3, Ray, Vec3, EPS_GEOM};
use crate::material::{Material, MaterialLibrary};

use bvh::Bvh;

/// Inclusive tolerance of the point-in-polygon test (m).
const INSIDE_TOL: f64 = 1e-9;
const PLANARITY_TOL: f64 = 1e-6;

/// Geometry description of a face before scene assembly.
#[derive(Debug, Clone)]
pub struct FaceSpec {
    /// Three or four vertices, counter-clockwise about the outward normal.
    pub vertices: Vec<Point3>,
    pub material: String,
    pub two_sided: bool,
    /// Whether waves may pass through the face (ground does not transmit).
    pub transmissive: bool,
    pub building: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Face {
    pub vertices: Vec<Point3>,
    pub normal: Vec3,
    /// Plane offset: `normal . x = offset` on the face.
    pub offset: f64,
    pub material: usize,
    pub two_sided: bool,
    pub transmissive: bool,
    pub building: Option<usize>,
    /// Diffraction edges bordering this face.
    pub edges: Vec<usize>,
    edge_normals: Vec<Vec3>,
    edge_offsets: Vec<f64>,
}

impl Face {
    fn new(spec: &FaceSpec, material: usize) -> Result<Self> {
        let v = &spec.vertices;
        if v.len() < 3 || v.len() > 4 {
            return Err(invalid("face", format!("{} vertices, expected 3 or 4", v.len())));
        }
        // Newell's method tolerates slightly non-planar input
        let mut n = Vec3::zeros();
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            n.x += (a.y - b.y) * (a.z + b.z);
            n.y += (a.z - b.z) * (a.x + b.x);
            n.z += (a.x - b.x) * (a.y + b.y);
        }
        let len = n.norm();
        if !(len > 1e-12) {
            return Err(invalid("face", "degenerate polygon"));
        }
        let normal = n / len;
        let offset = normal.dot(&v[0].coords);
        if v.iter().any(|p| (normal.dot(&p.coords) - offset).abs() > PLANARITY_TOL) {
            return Err(invalid("face", "vertices are not coplanar"));
        }
        let mut edge_normals = Vec::with_capacity(v.len());
        let mut edge_offsets = Vec::with_capacity(v.len());
        for i in 0..v.len() {
            let e = v[(i + 1) % v.len()] - v[i];
            let en = normal.cross(&e);
            let l = en.norm();
            if l < 1e-12 {
                return Err(invalid("face", "repeated vertex"));
            }
            let en = en / l;
            edge_normals.push(en);
            edge_offsets.push(en.dot(&v[i].coords));
        }
        // convexity: every vertex must be inside every edge half-plane
        for (en, eo) in edge_normals.iter().zip(&edge_offsets) {
            if v.iter().any(|p| en.dot(&p.coords) - eo < -PLANARITY_TOL) {
                return Err(invalid("face", "polygon is not convex"));
            }
        }
        Ok(Self {
            vertices: v.clone(),
            normal,
            offset,
            material,
            two_sided: spec.two_sided,
            transmissive: spec.transmissive,
            building: spec.building,
            edges: Vec::new(),
            edge_normals,
            edge_offsets,
        })
    }

    /// Signed distance of `p` from the face plane (positive in front).
    #[inline]
    pub fn side(&self, p: &Point3) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }

    /// Whether an in-plane point lies inside the polygon (boundary inclusive).
    #[inline]
    pub fn contains(&self, p: &Point3) -> bool {
        self.edge_normals
            .iter()
            .zip(&self.edge_offsets)
            .all(|(n, o)| n.dot(&p.coords) - o >= -INSIDE_TOL)
    }

    /// Ray parameter of the crossing with this face inside `(t_min, t_max)`.
    #[inline]
    pub fn intersect(&self, ray: &Ray, t_min: f64, t_max: f64) -> Option<f64> {
        let denom = self.normal.dot(&ray.dir);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = (self.offset - self.normal.dot(&ray.origin.coords)) / denom;
        if !(t > t_min && t < t_max) {
            return None;
        }
        self.contains(&ray.at(t)).then_some(t)
    }

    pub fn centroid(&self) -> Point3 {
        let s = self
            .vertices
            .iter()
            .fold(Vec3::zeros(), |acc, p| acc + p.coords);
        Point3::from(s / self.vertices.len() as f64)
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let mut a = Vec3::zeros();
        for i in 1..v.len() - 1 {
            a += (v[i] - v[0]).cross(&(v[i + 1] - v[0]));
        }
        a.norm() / 2.0
    }
}

/// A straight edge where diffraction may occur.
#[derive(Debug, Clone)]
pub struct Edge {
    pub a: Point3,
    pub b: Point3,
    /// Unit direction from `a` to `b`.
    pub dir: Vec3,
    pub length: f64,
    /// Adjacent faces; a free edge of a single sheet has one.
    pub faces: [usize; 2],
    pub face_count: usize,
    /// Unit vectors perpendicular to the edge pointing into each face.
    pub into_face: [Vec3; 2],
}

impl Edge {
    pub fn is_free(&self) -> bool {
        self.face_count == 1
    }

    pub fn adjacent(&self) -> &[usize] {
        &self.faces[..self.face_count]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub face: usize,
    pub point: Point3,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct Scene {
    faces: Vec<Face>,
    edges: Vec<Edge>,
    materials: MaterialLibrary,
    bounds: Aabb,
    bvh: Bvh,
}

impl Scene {
    /// Assembles a scene from face descriptions. Diffraction edges are
    /// derived from shared vertex pairs: convex wedges between two faces and
    /// free borders of single sheets, skipping edges lying on the ground.
    pub fn from_faces(specs: &[FaceSpec], materials: MaterialLibrary) -> Result<Self> {
        let mut faces = Vec::with_capacity(specs.len());
        for s in specs {
            let m = materials.index_of(&s.material)?;
            faces.push(Face::new(s, m)?);
        }
        let edges = derive_edges(&mut faces);
        let boxes: Vec<Aabb> = faces.iter().map(|f| pad(f.aabb())).collect();
        let bounds = boxes.iter().fold(Aabb::empty(), |acc, b| acc.join(b));
        let bvh = Bvh::build(&boxes);
        Ok(Self {
            faces,
            edges,
            materials,
            bounds,
            bvh,
        })
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, i: usize) -> &Face {
        &self.faces[i]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn materials(&self) -> &MaterialLibrary {
        &self.materials
    }

    pub fn material_of(&self, face: usize) -> &Material {
        self.materials.get(self.faces[face].material)
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    /// Nearest face crossing with `t` in `(EPS_GEOM, t_max)`.
    pub fn intersect_first(&self, ray: &Ray, t_max: f64) -> Option<Hit> {
        let mut best: Option<(usize, f64)> = None;
        self.bvh.traverse(ray, EPS_GEOM, t_max, |p, tm| {
            match self.faces[p as usize].intersect(ray, EPS_GEOM, tm) {
                Some(t) => {
                    best = Some((p as usize, t));
                    t
                }
                None => tm,
            }
        });
        best.map(|(face, t)| Hit {
            face,
            point: ray.at(t),
            t,
        })
    }

    /// Linear-scan version of [`Scene::intersect_first`].
    pub fn intersect_first_brute(&self, ray: &Ray, t_max: f64) -> Option<Hit> {
        let mut best: Option<(usize, f64)> = None;
        let mut tm = t_max;
        for (i, f) in self.faces.iter().enumerate() {
            if let Some(t) = f.intersect(ray, EPS_GEOM, tm) {
                best = Some((i, t));
                tm = t;
            }
        }
        best.map(|(face, t)| Hit {
            face,
            point: ray.at(t),
            t,
        })
    }

    /// Collects faces crossed by the open segment `(a, b)`, trimmed by
    /// `EPS_GEOM` at both ends, ignoring faces in `skip`. Returns `false`
    /// as soon as more than `limit` crossings are found.
    pub fn segment_hits(
        &self,
        a: &Point3,
        b: &Point3,
        skip: &[usize],
        limit: usize,
        out: &mut Vec<usize>,
    ) -> bool {
        out.clear();
        let d = b - a;
        let len = d.norm();
        if len <= 2.0 * EPS_GEOM {
            return true;
        }
        let ray = Ray::new(*a, d / len);
        let mut overflow = false;
        self.bvh.traverse(&ray, EPS_GEOM, len - EPS_GEOM, |p, tm| {
            if overflow || skip.contains(&(p as usize)) {
                return tm;
            }
            if self.faces[p as usize]
                .intersect(&ray, EPS_GEOM, len - EPS_GEOM)
                .is_some()
            {
                out.push(p as usize);
                if out.len() > limit {
                    overflow = true;
                    return f64::NEG_INFINITY;
                }
            }
            tm
        });
        !overflow
    }

    /// Whether the open segment `(a, b)` is free of faces.
    pub fn is_los(&self, a: &Point3, b: &Point3) -> bool {
        let mut buf = Vec::new();
        self.segment_hits(a, b, &[], 0, &mut buf)
    }

    /// Linear-scan version of [`Scene::is_los`].
    pub fn is_los_brute(&self, a: &Point3, b: &Point3) -> bool {
        let d = b - a;
        let len = d.norm();
        if len <= 2.0 * EPS_GEOM {
            return true;
        }
        let ray = Ray::new(*a, d / len);
        !self
            .faces
            .iter()
            .any(|f| f.intersect(&ray, EPS_GEOM, len - EPS_GEOM).is_some())
    }
}

fn pad(mut b: Aabb) -> Aabb {
    let e = Vec3::repeat(1e-7);
    b.min -= e;
    b.max += e;
    b
}

fn vertex_key(p: &Point3) -> [i64; 3] {
    [
        (p.x * 1e6).round() as i64,
        (p.y * 1e6).round() as i64,
        (p.z * 1e6).round() as i64,
    ]
}

fn derive_edges(faces: &mut [Face]) -> Vec<Edge> {
    type Key = ([i64; 3], [i64; 3]);
    let mut owners: HashMap<Key, Vec<(usize, Point3, Point3)>> = HashMap::new();
    let mut order: Vec<Key> = Vec::new();
    for (fi, f) in faces.iter().enumerate() {
        let n = f.vertices.len();
        for i in 0..n {
            let (p, q) = (f.vertices[i], f.vertices[(i + 1) % n]);
            let (kp, kq) = (vertex_key(&p), vertex_key(&q));
            let key = if kp <= kq { (kp, kq) } else { (kq, kp) };
            let (a, b) = if kp <= kq { (p, q) } else { (q, p) };
            let entry = owners.entry(key).or_default();
            if entry.is_empty() {
                order.push(key);
            }
            entry.push((fi, a, b));
        }
    }

    let mut edges = Vec::new();
    for key in order {
        let owners = &owners[&key];
        if owners.len() > 2 {
            continue;
        }
        let (f0, a, b) = owners[0];
        if a.z.abs() < 1e-6 && b.z.abs() < 1e-6 {
            continue;
        }
        let d = b - a;
        let length = d.norm();
        let dir = d / length;
        let mid = nalgebra::center(&a, &b);
        let inward = |fi: usize| {
            let f = &faces[fi];
            let u = f.normal.cross(&dir).normalize();
            if u.dot(&(f.centroid() - mid)) >= 0.0 {
                u
            } else {
                -u
            }
        };
        let edge = if owners.len() == 2 {
            let f1 = owners[1].0;
            let (fa, fb) = (&faces[f0], &faces[f1]);
            if fa.normal.dot(&fb.normal) > 1.0 - 1e-9 {
                continue; // coplanar split of one surface
            }
            // convex wedge: each face lies behind the other's plane
            let convex = fa.side(&fb.centroid()) < -1e-9 && fb.side(&fa.centroid()) < -1e-9;
            if !convex {
                continue;
            }
            Edge {
                a,
                b,
                dir,
                length,
                faces: [f0, f1],
                face_count: 2,
                into_face: [inward(f0), inward(f1)],
            }
        } else {
            let u = inward(f0);
            Edge {
                a,
                b,
                dir,
                length,
                faces: [f0, f0],
                face_count: 1,
                into_face: [u, u],
            }
        };
        let ei = edges.len();
        for &fi in edge.adjacent() {
            faces[fi].edges.push(ei);
        }
        edges.push(edge);
    }
    edges
}

/// Face descriptions of an axis-aligned box building: four walls and a roof.
pub fn box_faces(
    center: [f64; 2],
    width: f64,
    height: f64,
    material: &str,
    building: Option<usize>,
) -> Vec<FaceSpec> {
    let h = width / 2.0;
    let (x0, x1, y0, y1) = (center[0] - h, center[0] + h, center[1] - h, center[1] + h);
    let p = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
    let quads = [
        [p(x1, y0, 0.0), p(x1, y1, 0.0), p(x1, y1, height), p(x1, y0, height)],
        [p(x0, y1, 0.0), p(x0, y0, 0.0), p(x0, y0, height), p(x0, y1, height)],
        [p(x1, y1, 0.0), p(x0, y1, 0.0), p(x0, y1, height), p(x1, y1, height)],
        [p(x0, y0, 0.0), p(x1, y0, 0.0), p(x1, y0, height), p(x0, y0, height)],
        [p(x0, y0, height), p(x1, y0, height), p(x1, y1, height), p(x0, y1, height)],
    ];
    quads
        .into_iter()
        .map(|q| FaceSpec {
            vertices: q.to_vec(),
            material: material.to_string(),
            two_sided: false,
            transmissive: true,
            building,
        })
        .collect()
}

/// Square ground face at `z = 0` centred on the origin.
pub fn ground_face(half_side: f64, material: &str) -> FaceSpec {
    let g = half_side;
    FaceSpec {
        vertices: vec![
            Point3::new(-g, -g, 0.0),
            Point3::new(g, -g, 0.0),
            Point3::new(g, g, 0.0),
            Point3::new(-g, g, 0.0),
        ],
        material: material.to_string(),
        two_sided: false,
        transmissive: false,
        building: None,
    }
}

/// Margin factor applied to the city extent when sizing the ground plane.
pub const GROUND_MARGIN: f64 = 1.1;

/// Builds the scene of a city layout with the default material library
/// and the given ground material.
pub fn build_scene(layout: &CityLayout, ground: &Material) -> Result<Scene> {
    build_scene_with(layout, ground, MaterialLibrary::default())
}

pub fn build_scene_with(
    layout: &CityLayout,
    ground: &Material,
    mut materials: MaterialLibrary,
) -> Result<Scene> {
    materials.insert(ground.clone())?;
    let mut specs = Vec::with_capacity(layout.buildings.len() * 5 + 1);
    for (i, b) in layout.buildings.iter().enumerate() {
        specs.extend(box_faces(b.center_m, b.width_m, b.height_m, &b.material, Some(i)));
    }
    specs.push(ground_face(layout.extent_m() / 2.0 * GROUND_MARGIN, &ground.name));
    Scene::from_faces(&specs, materials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::city::{generate_city, ItuParams};

    fn one_box() -> Scene {
        let mut specs = box_faces([0.0, 0.0], 10.0, 20.0, "concrete", Some(0));
        specs.push(ground_face(100.0, "dry_earth"));
        Scene::from_faces(&specs, MaterialLibrary::default()).unwrap()
    }

    #[test]
    fn test_box_normals_point_outward() {
        let s = one_box();
        for f in &s.faces()[..5] {
            let c = f.centroid();
            let outward = c - Point3::new(0.0, 0.0, 10.0);
            assert!(f.normal.dot(&outward) > 0.0);
            assert!((f.area() - if f.normal.z > 0.5 { 100.0 } else { 200.0 }).abs() < 1e-9);
        }
    }

    #[test]
    fn test_box_edges() {
        let s = one_box();
        // four vertical corners and four roof edges
        assert_eq!(s.edges().len(), 8);
        for e in s.edges() {
            assert_eq!(e.face_count, 2);
            for k in 0..2 {
                let f = s.face(e.faces[k]);
                assert!(e.into_face[k].dot(&f.normal).abs() < 1e-12);
                assert!(e.into_face[k].dot(&e.dir).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn test_face_counts() {
        let c = generate_city(&ItuParams::HIGHRISE, 1).unwrap();
        let s = build_scene(&c, &Material::dry_earth()).unwrap();
        assert_eq!(s.faces().len(), 2161);
        let mut empty = c.clone();
        empty.buildings.clear();
        let s = build_scene(&empty, &Material::dry_earth()).unwrap();
        assert_eq!(s.faces().len(), 1);
    }

    #[test]
    fn test_los_queries() {
        let s = one_box();
        let a = Point3::new(-20.0, 0.0, 10.0);
        let b = Point3::new(20.0, 0.0, 10.0);
        assert!(!s.is_los(&a, &b));
        assert!(!s.is_los(&b, &a));
        let a = Point3::new(-20.0, 0.0, 30.0);
        let b = Point3::new(20.0, 0.0, 30.0);
        assert!(s.is_los(&a, &b));
        let down = Ray::new(Point3::new(50.0, 50.0, 5.0), Vec3::new(0.0, 0.0, -1.0));
        let hit = s.intersect_first(&down, 100.0).unwrap();
        assert_eq!(hit.face, 5);
        assert!((hit.t - 5.0).abs() < 1e-12);
    }

    #[test]
    fn test_rejects_bad_faces() {
        let spec = FaceSpec {
            vertices: vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.5),
                Point3::new(0.0, 1.0, 0.0),
            ],
            material: "concrete".into(),
            two_sided: true,
            transmissive: true,
            building: None,
        };
        assert!(Scene::from_faces(&[spec.clone()], MaterialLibrary::default()).is_err());
        let mut unknown = spec;
        unknown.vertices[2].z = 0.0;
        unknown.material = "wood".into();
        assert!(Scene::from_faces(&[unknown], MaterialLibrary::default()).is_err());
    }
}
