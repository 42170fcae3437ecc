//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use citylink::city::{generate_city, CityLayout, ItuParams};
use citylink::geom::{Point3, Vec3};
use citylink::material::MaterialLibrary;
use citylink::ray::{Interaction, Path, TraceLimits};
use citylink::scene::{FaceSpec, Scene};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

pub const C: f64 = 299_792_458.0;
pub const E0: f64 = 8.854_187_812_8e-12;

/// Table permittivity at one of the four table carriers.
pub fn table_eps(material: &str, ghz: f64) -> Complex64 {
    let (sig, er): ([f64; 4], f64) = match material {
        "concrete" => ([0.14, 0.23, 0.38, 0.63], 5.24),
        "glass" => ([0.03, 0.06, 0.12, 0.24], 6.31),
        "brick" => ([0.03, 0.03, 0.04, 0.04], 3.91),
        "dry_earth" => ([0.003, 0.01, 0.036, 0.147], 3.00),
        _ => panic!("unknown material {material}"),
    };
    let i = [4.6, 8.2, 15.0, 28.0].iter().position(|g| *g == ghz).expect("table carrier");
    Complex64::new(er, -sig[i] / (2.0 * PI * ghz * 1e9 * E0))
}

/// Reflection coefficient written out from the textbook formulas.
pub fn fresnel(eps: Complex64, cos_i: f64, te: bool) -> Complex64 {
    let root = (eps - Complex64::new(1.0 - cos_i * cos_i, 0.0)).sqrt();
    if te {
        (cos_i - root) / (cos_i + root)
    } else {
        (eps * cos_i - root) / (eps * cos_i + root)
    }
}

/// Vertical polarization is TE when the plane of incidence is mostly
/// horizontal, i.e. its normal is mostly vertical.
pub fn is_te(normal: &Vec3, dir: &Vec3) -> bool {
    let m = normal.cross(dir);
    m.norm() < 1e-9 || m.z.abs() / m.norm() >= 0.5f64.sqrt()
}

/// Two-sided rectangle with its own parameterization.
#[derive(Debug, Clone)]
pub struct Rect {
    pub center: Point3,
    pub u: Vec3,
    pub v: Vec3,
    pub half_u: f64,
    pub half_v: f64,
}

impl Rect {
    pub fn normal(&self) -> Vec3 {
        self.u.cross(&self.v)
    }

    pub fn spec(&self, material: &str) -> FaceSpec {
        let (a, b) = (self.u * self.half_u, self.v * self.half_v);
        let c = self.center;
        FaceSpec {
            vertices: vec![c - a - b, c + a - b, c + a + b, c - a + b],
            material: material.to_string(),
            two_sided: true,
            transmissive: false,
            building: None,
        }
    }

    fn side(&self, p: &Point3) -> f64 {
        self.normal().dot(&(p - self.center))
    }

    fn mirror(&self, p: &Point3) -> Point3 {
        p - self.normal() * (2.0 * self.side(p))
    }

    fn inside(&self, p: &Point3) -> bool {
        let d = p - self.center;
        d.dot(&self.u).abs() <= self.half_u && d.dot(&self.v).abs() <= self.half_v
    }

    /// Crossing of the open segment `a -> b` with the rectangle.
    fn crossed_by(&self, a: &Point3, b: &Point3) -> bool {
        let (sa, sb) = (self.side(a), self.side(b));
        if sa * sb >= 0.0 {
            return false;
        }
        let p = a + (b - a) * (sa / (sa - sb));
        self.inside(&p)
    }
}

pub fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_rect(rng: &mut impl Rng, spread: f64) -> Rect {
    let n = random_unit(rng);
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = n.cross(&helper).normalize();
    let v = n.cross(&u);
    Rect {
        center: Point3::new(rng.gen_range(-spread..spread), rng.gen_range(-spread..spread), rng.gen_range(-spread..spread)),
        u,
        v,
        half_u: rng.gen_range(2.0..12.0),
        half_v: rng.gen_range(2.0..12.0),
    }
}

pub fn scene_of(rects: &[Rect], material: &str) -> Scene {
    let specs: Vec<FaceSpec> = rects.iter().map(|r| r.spec(material)).collect();
    Scene::from_faces(&specs, MaterialLibrary::default()).unwrap()
}

/// Reference path: face sequence, length and amplitude.
#[derive(Debug, Clone)]
pub struct RefPath {
    pub faces: Vec<usize>,
    pub length: f64,
    pub amp: f64,
}

/// Brute-force image method over every face sequence up to `order`.
pub fn image_paths(rects: &[Rect], material: &str, tx: Point3, rx: Point3, order: usize, ghz: f64) -> Vec<RefPath> {
    let lambda = C / (ghz * 1e9);
    let eps = table_eps(material, ghz);
    let mut seqs: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..order {
        let mut next = Vec::new();
        for s in &frontier {
            for f in 0..rects.len() {
                if s.last() != Some(&f) {
                    let mut t = s.clone();
                    t.push(f);
                    next.push(t);
                }
            }
        }
        seqs.extend(next.iter().cloned());
        frontier = next;
    }
    let mut out = Vec::new();
    'seq: for s in seqs {
        let mut images = vec![tx];
        for &f in &s {
            let last = *images.last().unwrap();
            images.push(rects[f].mirror(&last));
        }
        let mut pts = vec![rx];
        let mut target = rx;
        for j in (0..s.len()).rev() {
            let r = &rects[s[j]];
            let img = images[j + 1];
            let (st, si) = (r.side(&target), r.side(&img));
            if st * si >= 0.0 {
                continue 'seq;
            }
            let p = target + (img - target) * (st / (st - si));
            if !r.inside(&p) {
                continue 'seq;
            }
            pts.push(p);
            target = p;
        }
        pts.push(tx);
        pts.reverse();
        for (k, &f) in s.iter().enumerate() {
            let r = &rects[f];
            if r.side(&pts[k]) * r.side(&pts[k + 2]) <= 0.0 {
                continue 'seq;
            }
        }
        for k in 0..pts.len() - 1 {
            for (fi, r) in rects.iter().enumerate() {
                let at_end = (k > 0 && s[k - 1] == fi) || (k < s.len() && s[k] == fi);
                if !at_end && r.crossed_by(&pts[k], &pts[k + 1]) {
                    continue 'seq;
                }
            }
        }
        let length: f64 = pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let mut amp = lambda / (4.0 * PI * length);
        for (k, &f) in s.iter().enumerate() {
            let d = (pts[k + 1] - pts[k]).normalize();
            let n = rects[f].normal();
            amp *= fresnel(eps, d.dot(&n).abs(), is_te(&n, &d)).norm();
        }
        out.push(RefPath { faces: s, length, amp });
    }
    out.sort_by(|a, b| a.length.total_cmp(&b.length));
    out
}

pub fn oracle_limits(order: usize) -> TraceLimits {
    TraceLimits {
        max_reflections: order,
        max_diffractions: 0,
        max_transmissions: 0,
        max_paths: 100_000,
        power_floor_dbm: -1000.0,
        ..TraceLimits::default()
    }
}

/// Compares traced paths against the reference set; returns a description
/// of the first mismatch.
pub fn compare_with_reference(traced: &[Path], reference: &[RefPath]) -> Result<(), String> {
    let mut got: Vec<&Path> = traced.iter().collect();
    got.sort_by(|a, b| a.length_m().total_cmp(&b.length_m()));
    if got.len() != reference.len() {
        return Err(format!("{} traced paths, {} expected", got.len(), reference.len()));
    }
    for (g, r) in got.iter().zip(reference) {
        let faces: Vec<usize> = g
            .interactions()
            .iter()
            .map(|i| match i {
                Interaction::Reflect { face, .. } => *face,
                other => panic!("unexpected interaction {other:?}"),
            })
            .collect();
        if faces != r.faces {
            return Err(format!("sequence {faces:?} vs {:?}", r.faces));
        }
        if (g.length_m() - r.length).abs() > 1e-9 {
            return Err(format!("length {} vs {}", g.length_m(), r.length));
        }
        if (g.amp - r.amp).abs() > 1e-9 * r.amp {
            return Err(format!("amp {} vs {}", g.amp, r.amp));
        }
    }
    Ok(())
}

/// Analytic two-ray received power ratio `|E|^2` for isotropic antennas.
pub fn two_ray_power(ht: f64, hr: f64, d: f64, ghz: f64) -> f64 {
    let lambda = C / (ghz * 1e9);
    let k = 2.0 * PI / lambda;
    let d1 = (d * d + (ht - hr).powi(2)).sqrt();
    let d2 = (d * d + (ht + hr).powi(2)).sqrt();
    let cos_i = (ht + hr) / d2;
    let gamma = fresnel(table_eps("dry_earth", ghz), cos_i, false);
    let e = Complex64::from_polar(1.0 / d1, -k * d1) + gamma * Complex64::from_polar(1.0 / d2, -k * d2);
    (lambda / (4.0 * PI)).powi(2) * e.norm_sqr()
}

pub fn coherent_power(paths: &[Path]) -> f64 {
    paths
        .iter()
        .map(|p| Complex64::from_polar(p.amp, p.phase_rad))
        .sum::<Complex64>()
        .norm_sqr()
}

pub fn twenty_building_city(seed: u64) -> CityLayout {
    let p = ItuParams {
        building_count: 20,
        ..ItuParams::URBAN
    };
    generate_city(&p, seed).unwrap()
}

pub fn street_point(city: &CityLayout, rng: &mut impl Rng, z: std::ops::Range<f64>) -> Point3 {
    let half = city.extent_m() / 2.0;
    loop {
        let (x, y) = (rng.gen_range(-half..half), rng.gen_range(-half..half));
        if city.buildings.iter().all(|b| b.distance_xy(x, y) > 1.0) {
            return Point3::new(x, y, rng.gen_range(z.clone()));
        }
    }
}

/// Matches `a` against `b` by length and amplitude within `tol`.
pub fn reciprocal(a: &[Path], b: &[Path], tol: f64) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("{} vs {} paths", a.len(), b.len()));
    }
    let key = |p: &&Path| (p.length_m(), p.amp);
    let mut x: Vec<&Path> = a.iter().collect();
    let mut y: Vec<&Path> = b.iter().collect();
    x.sort_by(|p, q| key(p).partial_cmp(&key(q)).unwrap());
    y.sort_by(|p, q| key(p).partial_cmp(&key(q)).unwrap());
    for (p, q) in x.iter().zip(&y) {
        if (p.length_m() - q.length_m()).abs() > tol || (p.amp - q.amp).abs() > tol * p.amp.max(q.amp) {
            return Err(format!("{} vs {}", p.geometry.label(), q.geometry.label()));
        }
        let rev: Vec<String> = q.interactions().iter().rev().map(|i| i.label()).collect();
        let fwd: Vec<String> = p.interactions().iter().map(|i| i.label()).collect();
        if fwd != rev {
            return Err(format!("interaction order {fwd:?} vs reversed {rev:?}"));
        }
    }
    Ok(())
}
