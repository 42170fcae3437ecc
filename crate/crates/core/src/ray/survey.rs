//! Candidate skeleton generation.
//!
//! Small scenes are enumerated exhaustively. Larger scenes are seeded by a
//! shooting-and-bouncing survey from each endpoint: rays launched on a
//! Fibonacci sphere record which face sequences are reachable and which
//! edges border the faces they hit. Candidates join a tx-side observation
//! with an rx-side observation; the joining rules are symmetric under
//! swapping the endpoints, so traced path sets are reciprocal.

use std::collections::HashMap;

use crate::geom::{reflect_dir, Point3, Ray, Vec3};
use crate::scene::Scene;

use super::solve::Skeleton;
use super::MAX_ORDER;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seq {
    len: u8,
    f: [u32; MAX_ORDER],
}

impl Seq {
    const EMPTY: Seq = Seq {
        len: 0,
        f: [0; MAX_ORDER],
    };

    pub fn as_slice(&self) -> &[u32] {
        &self.f[..self.len as usize]
    }

    fn push(&self, face: u32) -> Seq {
        let mut s = *self;
        s.f[s.len as usize] = face;
        s.len += 1;
        s
    }

    fn last(&self) -> Option<u32> {
        self.as_slice().last().copied()
    }
}

/// Reachability record of one endpoint.
#[derive(Debug, Clone)]
pub struct Survey {
    pub origin: Point3,
    pub depth: usize,
    next: HashMap<Seq, Vec<u32>>,
    edge_seqs: HashMap<u32, Vec<Seq>>,
}

fn fibonacci_dir(i: usize, n: usize) -> Vec3 {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = golden * i as f64;
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

impl Survey {
    /// Launches `rays` rays from `origin`, following specular bounces until
    /// `depth` faces have been hit.
    pub fn run(scene: &Scene, origin: Point3, rays: usize, depth: usize) -> Self {
        let depth = depth.clamp(1, MAX_ORDER + 1);
        let mut next: HashMap<Seq, Vec<u32>> = HashMap::new();
        let mut edge_seqs: HashMap<u32, Vec<Seq>> = HashMap::new();
        for i in 0..rays {
            let mut ray = Ray::new(origin, fibonacci_dir(i, rays));
            let mut seq = Seq::EMPTY;
            for level in 0..depth {
                let Some(hit) = scene.intersect_first(&ray, f64::INFINITY) else {
                    break;
                };
                let face = scene.face(hit.face);
                let f = hit.face as u32;
                next.entry(seq).or_default().push(f);
                for &e in &face.edges {
                    edge_seqs.entry(e as u32).or_default().push(seq);
                }
                let front = face.normal.dot(&ray.dir) < 0.0;
                if level + 1 == depth || (!front && !face.two_sided) || seq.len as usize >= MAX_ORDER {
                    break;
                }
                seq = seq.push(f);
                ray = Ray::new(hit.point, reflect_dir(&ray.dir, &face.normal));
            }
        }
        for v in next.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        for v in edge_seqs.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        Self {
            origin,
            depth,
            next,
            edge_seqs,
        }
    }

    /// Faces hit directly from the origin.
    pub fn visible(&self) -> &[u32] {
        self.next.get(&Seq::EMPTY).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Observed face sequences of exactly `len` faces.
    fn observed(&self, len: usize) -> Vec<Seq> {
        let mut out: Vec<Seq> = self
            .next
            .iter()
            .filter(|(k, _)| k.len as usize + 1 == len)
            .flat_map(|(k, v)| v.iter().map(move |&f| k.push(f)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn distinct_faces(&self) -> usize {
        let mut all: Vec<u32> = self.next.values().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all.len()
    }
}

/// Candidate skeletons joining two surveys.
pub fn seeded_candidates(
    tx: &Survey,
    rx: &Survey,
    max_reflections: usize,
    diffraction: bool,
) -> Vec<Skeleton> {
    let r = max_reflections.min(MAX_ORDER);
    let mut out = vec![Skeleton::direct()];
    let vt = tx.visible();
    let vr = rx.visible();

    if r >= 1 {
        let mut j = 0;
        for &f in vt {
            while j < vr.len() && vr[j] < f {
                j += 1;
            }
            if j < vr.len() && vr[j] == f {
                out.push(Skeleton::reflections(&[f]));
            }
        }
    }
    if r >= 2 {
        for &a in vt {
            for &b in vr {
                if a != b {
                    out.push(Skeleton::reflections(&[a, b]));
                }
            }
        }
    }
    let mut buf = [0u32; MAX_ORDER];
    for k in 3..=r {
        for q in tx.observed(k - 1) {
            let s = q.as_slice();
            for &f in vr {
                if Some(f) != q.last() {
                    buf[..k - 1].copy_from_slice(s);
                    buf[k - 1] = f;
                    out.push(Skeleton::reflections(&buf[..k]));
                }
            }
        }
        for q in rx.observed(k - 1) {
            let s = q.as_slice();
            for &f in vt {
                if Some(f) != q.last() {
                    buf[0] = f;
                    for (i, &g) in s.iter().rev().enumerate() {
                        buf[i + 1] = g;
                    }
                    out.push(Skeleton::reflections(&buf[..k]));
                }
            }
        }
    }

    if diffraction {
        let mut post = [0u32; MAX_ORDER];
        for (&e, seqs_t) in &tx.edge_seqs {
            let Some(seqs_r) = rx.edge_seqs.get(&e) else {
                continue;
            };
            for sa in seqs_t {
                for sb in seqs_r {
                    let (a, b) = (sa.len as usize, sb.len as usize);
                    if a + b > r {
                        continue;
                    }
                    for (i, &g) in sb.as_slice().iter().rev().enumerate() {
                        post[i] = g;
                    }
                    out.push(Skeleton::diffraction(sa.as_slice(), e, &post[..b]));
                }
            }
        }
    }

    out.retain(|s| s.is_well_formed());
    out.sort_unstable();
    out.dedup();
    out
}

/// Number of skeletons an exhaustive enumeration would produce (saturating).
pub fn exhaustive_count(faces: usize, edges: usize, max_reflections: usize, diffraction: bool) -> usize {
    let f = faces as u128;
    let mut refl: u128 = 1;
    let mut per_len = vec![1u128];
    for k in 1..=max_reflections {
        let n = if k == 1 { f } else { per_len[k - 1].saturating_mul(f.saturating_sub(1)) };
        per_len.push(n);
        refl = refl.saturating_add(n);
    }
    let mut total = refl;
    if diffraction {
        let mut d: u128 = 0;
        for a in 0..=max_reflections {
            for b in 0..=(max_reflections - a) {
                d = d.saturating_add(per_len[a].saturating_mul(per_len[b]));
            }
        }
        total = total.saturating_add(d.saturating_mul(edges as u128));
    }
    total.min(usize::MAX as u128) as usize
}

fn sequences(faces: u32, len: usize, out: &mut Vec<Vec<u32>>) {
    fn rec(faces: u32, len: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for f in 0..faces {
            if cur.last() == Some(&f) {
                continue;
            }
            cur.push(f);
            rec(faces, len, cur, out);
            cur.pop();
        }
    }
    rec(faces, len, &mut Vec::new(), out);
}

/// Every well-formed skeleton up to the given order.
pub fn exhaustive_candidates(scene: &Scene, max_reflections: usize, diffraction: bool) -> Vec<Skeleton> {
    let r = max_reflections.min(MAX_ORDER);
    let nf = scene.faces().len() as u32;
    let mut by_len: Vec<Vec<Vec<u32>>> = Vec::with_capacity(r + 1);
    for k in 0..=r {
        let mut v = Vec::new();
        sequences(nf, k, &mut v);
        by_len.push(v);
    }
    let mut out = Vec::new();
    for seqs in &by_len {
        out.extend(seqs.iter().map(|s| Skeleton::reflections(s)));
    }
    if diffraction {
        for e in 0..scene.edges().len() as u32 {
            for a in 0..=r {
                for b in 0..=(r - a) {
                    for sa in &by_len[a] {
                        for sb in &by_len[b] {
                            out.push(Skeleton::diffraction(sa, e, sb));
                        }
                    }
                }
            }
        }
    }
    out.retain(|s| s.is_well_formed());
    out.sort_unstable();
    out.dedup();
    out
}
