//! Geometric solution of an interaction skeleton.
//!
//! A skeleton lists the reflecting faces before an optional diffraction
//! edge and the reflecting faces after it. Reflection points follow from
//! the image method; the diffraction point is the edge point that makes the
//! unfolded path straight. Transmissions are not part of the skeleton: they
//! are discovered while checking each segment for obstructions.

use crate::geom::{mirror, Point3, Vec3};
use crate::scene::Scene;

use super::{Interaction, PathGeometry, MAX_ORDER};

/// Relative tolerance on segment parameters when locating reflection points.
const PARAM_TOL: f64 = 1e-9;
/// Angular tolerance of wedge side tests.
const WEDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Skeleton {
    faces: [u32; MAX_ORDER],
    n_pre: u8,
    n_post: u8,
    edge: Option<u32>,
}

impl Skeleton {
    pub fn direct() -> Self {
        Self {
            faces: [0; MAX_ORDER],
            n_pre: 0,
            n_post: 0,
            edge: None,
        }
    }

    pub fn reflections(seq: &[u32]) -> Self {
        let mut s = Self::direct();
        s.faces[..seq.len()].copy_from_slice(seq);
        s.n_pre = seq.len() as u8;
        s
    }

    pub fn diffraction(pre: &[u32], edge: u32, post: &[u32]) -> Self {
        let mut s = Self::direct();
        s.faces[..pre.len()].copy_from_slice(pre);
        s.faces[pre.len()..pre.len() + post.len()].copy_from_slice(post);
        s.n_pre = pre.len() as u8;
        s.n_post = post.len() as u8;
        s.edge = Some(edge);
        s
    }

    pub fn pre(&self) -> &[u32] {
        &self.faces[..self.n_pre as usize]
    }

    pub fn post(&self) -> &[u32] {
        &self.faces[self.n_pre as usize..(self.n_pre + self.n_post) as usize]
    }

    pub fn edge(&self) -> Option<u32> {
        self.edge
    }

    pub fn reflection_count(&self) -> usize {
        (self.n_pre + self.n_post) as usize
    }

    /// No face may repeat immediately, including across the edge.
    pub fn is_well_formed(&self) -> bool {
        let all = &self.faces[..self.reflection_count()];
        let split = self.n_pre as usize;
        all.windows(2)
            .enumerate()
            .all(|(i, w)| w[0] != w[1] || (self.edge.is_some() && i + 1 == split))
    }
}

#[derive(Clone, Copy)]
enum Node {
    End(Point3),
    Reflect(u32, Point3),
    Diffract(u32, Point3, f64),
}

impl Node {
    fn point(&self) -> Point3 {
        match *self {
            Node::End(p) | Node::Reflect(_, p) | Node::Diffract(_, p, _) => p,
        }
    }
}

/// Crossing of segment `a -> b` with the plane of `face`, strictly inside
/// the segment and inside the polygon.
#[inline]
fn reflect_point(scene: &Scene, face: u32, a: &Point3, b: &Point3) -> Option<Point3> {
    let f = scene.face(face as usize);
    let sa = f.side(a);
    let sb = f.side(b);
    if (sa > 0.0) == (sb > 0.0) || sa == 0.0 || sb == 0.0 {
        return None;
    }
    let s = sa / (sa - sb);
    if !(s > PARAM_TOL && s < 1.0 - PARAM_TOL) {
        return None;
    }
    let mut p = a + (b - a) * s;
    // snap onto the plane to limit drift over many bounces
    p -= f.normal * f.side(&p);
    f.contains(&p).then_some(p)
}

/// Diffraction point on `edge` for unfolded endpoints `a` and `b`.
fn keller_point(scene: &Scene, edge: u32, a: &Point3, b: &Point3) -> Option<Point3> {
    let e = scene.edge(edge as usize);
    let proj = |p: &Point3| {
        let s = (p - e.a).dot(&e.dir);
        let r = (p - e.a - e.dir * s).norm();
        (s, r)
    };
    let (sa, ra) = proj(a);
    let (sb, rb) = proj(b);
    if ra + rb < 1e-9 {
        return None;
    }
    let s = sa + (sb - sa) * ra / (ra + rb);
    let tol = 1e-9 * e.length.max(1.0);
    if !(s > tol && s < e.length - tol) {
        return None;
    }
    Some(e.a + e.dir * s)
}

/// Whether the edge shadows `b` from `a` when seen through the diffraction
/// point `d`, and both legs stay outside the wedge.
fn diffraction_admissible(scene: &Scene, edge: u32, d: &Point3, a: &Point3, b: &Point3) -> bool {
    let e = scene.edge(edge as usize);
    let va = (a - d).normalize();
    let vb = (b - d).normalize();
    if !e.is_free() {
        let (n0, n1) = (scene.face(e.faces[0]).normal, scene.face(e.faces[1]).normal);
        let outside = |v: &Vec3| n0.dot(v) > WEDGE_TOL || n1.dot(v) > WEDGE_TOL;
        if !outside(&va) || !outside(&vb) {
            return false;
        }
    }
    let w = if e.is_free() {
        e.into_face[0]
    } else {
        e.into_face[0] + e.into_face[1]
    };
    let c_ab = e.dir.dot(&va.cross(&vb));
    if c_ab.abs() < WEDGE_TOL {
        return false;
    }
    let c_aw = e.dir.dot(&va.cross(&w));
    let c_wb = e.dir.dot(&w.cross(&vb));
    c_aw * c_ab > 0.0 && c_wb * c_ab > 0.0
}

/// Reusable buffers for [`solve`].
#[derive(Default)]
pub struct Scratch {
    nodes: Vec<Node>,
    hits: Vec<usize>,
    skip: Vec<usize>,
}

/// Solves and validates one skeleton. Returns `None` when the skeleton has
/// no geometric realization or the realization is blocked.
pub fn solve(
    scene: &Scene,
    tx: &Point3,
    rx: &Point3,
    skel: &Skeleton,
    max_transmissions: usize,
    scratch: &mut Scratch,
) -> Option<PathGeometry> {
    let pre = skel.pre();
    let post = skel.post();

    let mut img_tx = [*tx; MAX_ORDER + 1];
    for (j, &f) in pre.iter().enumerate() {
        let face = scene.face(f as usize);
        img_tx[j + 1] = mirror(&img_tx[j], &face.normal, face.offset);
    }
    let mut img_rx = [*rx; MAX_ORDER + 1];
    for j in (0..post.len()).rev() {
        let face = scene.face(post[j] as usize);
        img_rx[j] = mirror(&img_rx[j + 1], &face.normal, face.offset);
    }
    let a = img_tx[pre.len()];
    let b = img_rx[0];

    let nodes = &mut scratch.nodes;
    nodes.clear();

    let diff = match skel.edge() {
        Some(e) => {
            let d = keller_point(scene, e, &a, &b)?;
            if !diffraction_admissible(scene, e, &d, &a, &b) {
                return None;
            }
            Some((e, d, (a - b).norm()))
        }
        None => None,
    };

    // reflections before the edge (or all reflections), back to front
    let mut target = match diff {
        Some((_, d, _)) => d,
        None => *rx,
    };
    let mut pre_pts = [Point3::origin(); MAX_ORDER];
    for j in (0..pre.len()).rev() {
        let f = pre[j];
        let p = reflect_point(scene, f, &img_tx[j + 1], &target)?;
        let face = scene.face(f as usize);
        if !face.two_sided && face.side(&target) <= 0.0 {
            return None;
        }
        pre_pts[j] = p;
        target = p;
    }
    nodes.push(Node::End(*tx));
    for (j, &f) in pre.iter().enumerate() {
        nodes.push(Node::Reflect(f, pre_pts[j]));
    }

    if let Some((e, d, direct)) = diff {
        nodes.push(Node::Diffract(e, d, direct));
        let mut source = d;
        for (j, &f) in post.iter().enumerate() {
            let p = reflect_point(scene, f, &source, &img_rx[j])?;
            let face = scene.face(f as usize);
            if !face.two_sided && face.side(&source) <= 0.0 {
                return None;
            }
            nodes.push(Node::Reflect(f, p));
            source = p;
        }
    }
    nodes.push(Node::End(*rx));

    // reflection side checks for two-sided faces: both legs on one side
    for w in nodes.windows(3) {
        if let Node::Reflect(f, _) = w[1] {
            let face = scene.face(f as usize);
            let s0 = face.side(&w[0].point());
            let s2 = face.side(&w[2].point());
            if s0 * s2 <= 0.0 {
                return None;
            }
        }
    }

    // obstruction checks, collecting transmissions
    let mut interactions = Vec::with_capacity(nodes.len());
    let mut budget = max_transmissions;
    let mut length = 0.0;
    for k in 0..nodes.len() - 1 {
        let (n0, n1) = (nodes[k], nodes[k + 1]);
        let (p0, p1) = (n0.point(), n1.point());
        length += (p1 - p0).norm();
        scratch.skip.clear();
        for n in [n0, n1] {
            match n {
                Node::Reflect(f, _) => scratch.skip.push(f as usize),
                Node::Diffract(e, _, _) => {
                    scratch.skip.extend_from_slice(scene.edge(e as usize).adjacent())
                }
                Node::End(_) => {}
            }
        }
        if !scene.segment_hits(&p0, &p1, &scratch.skip, budget, &mut scratch.hits) {
            return None;
        }
        match n0 {
            Node::Reflect(f, p) => interactions.push(Interaction::Reflect {
                face: f as usize,
                point: p,
            }),
            Node::Diffract(e, p, direct) => interactions.push(Interaction::Diffract {
                edge: e as usize,
                point: p,
                unfolded_direct_m: direct,
            }),
            Node::End(_) => {}
        }
        if !scratch.hits.is_empty() {
            let dir = p1 - p0;
            let mut crossings = Vec::with_capacity(scratch.hits.len());
            for &h in &scratch.hits {
                let face = scene.face(h);
                if !face.transmissive {
                    return None;
                }
                let t = -face.side(&p0) / face.normal.dot(&dir);
                crossings.push((t, h, p0 + dir * t));
            }
            crossings.sort_by(|x, y| x.0.total_cmp(&y.0));
            budget -= crossings.len();
            for (_, h, p) in crossings {
                interactions.push(Interaction::Transmit { face: h, point: p });
            }
        }
    }

    Some(PathGeometry {
        tx: *tx,
        rx: *rx,
        interactions,
        length_m: length,
    })
}
