//! Deterministic multipath search between two points.
//!
//! Paths combine specular reflections (image method), at most one
//! knife-edge diffraction and slab transmissions. The search first finds
//! path geometries, which do not depend on frequency, and then evaluates
//! their complex field at a carrier. Geometries can therefore be traced once
//! and reused across bands.

pub mod coeff;
pub mod solve;
pub mod survey;

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::{wavelength, wrap_rad, AzEl, Point3, Vec3, C0};
use crate::material::complex_permittivity;
use crate::scene::Scene;

pub use coeff::{fresnel_coeff, knife_edge_loss, transmission_coeff, Polarization};
use solve::Scratch;
use survey::Survey;

/// Upper bound on reflections per path supported by the solver.
pub const MAX_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceLimits {
    pub max_reflections: usize,
    pub max_diffractions: usize,
    pub max_transmissions: usize,
    pub max_paths: usize,
    pub power_floor_dbm: f64,
    /// Transmit power assumed when applying the floor (isotropic antennas).
    pub reference_power_dbm: f64,
    /// Rays launched per endpoint by the seeding survey.
    pub launch_rays: usize,
    /// Largest skeleton count that is enumerated exhaustively instead of
    /// being seeded by a survey.
    pub exhaustive_budget: usize,
}

impl Default for TraceLimits {
    fn default() -> Self {
        Self {
            max_reflections: 6,
            max_diffractions: 1,
            max_transmissions: 1,
            max_paths: 25,
            power_floor_dbm: -250.0,
            reference_power_dbm: 30.0,
            launch_rays: 10_000,
            exhaustive_budget: 20_000,
        }
    }
}

impl TraceLimits {
    pub fn validate(&self) -> Result<()> {
        if self.max_reflections > MAX_ORDER {
            return Err(invalid(
                "max_reflections",
                format!("{} exceeds the supported maximum of {MAX_ORDER}", self.max_reflections),
            ));
        }
        if self.max_diffractions > 1 {
            return Err(invalid("max_diffractions", "at most one diffraction per path is supported"));
        }
        if self.max_paths == 0 {
            return Err(invalid("max_paths", "must be at least 1"));
        }
        if !self.power_floor_dbm.is_finite() || !self.reference_power_dbm.is_finite() {
            return Err(invalid("power_floor_dbm", "must be finite"));
        }
        if self.launch_rays == 0 {
            return Err(invalid("launch_rays", "must be at least 1"));
        }
        Ok(())
    }

    fn survey_depth(&self) -> usize {
        if self.max_diffractions > 0 {
            self.max_reflections + 1
        } else {
            self.max_reflections.saturating_sub(1).max(1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interaction {
    Reflect {
        face: usize,
        point: Point3,
    },
    Diffract {
        edge: usize,
        point: Point3,
        /// Length of the straight unfolded line the edge obstructs (m).
        unfolded_direct_m: f64,
    },
    Transmit {
        face: usize,
        point: Point3,
    },
}

impl Interaction {
    pub fn point(&self) -> Point3 {
        match *self {
            Interaction::Reflect { point, .. }
            | Interaction::Diffract { point, .. }
            | Interaction::Transmit { point, .. } => point,
        }
    }

    fn tag(&self) -> (u8, usize) {
        match *self {
            Interaction::Reflect { face, .. } => (0, face),
            Interaction::Diffract { edge, .. } => (1, edge),
            Interaction::Transmit { face, .. } => (2, face),
        }
    }

    pub fn label(&self) -> String {
        match self.tag() {
            (0, i) => format!("R{i}"),
            (1, i) => format!("D{i}"),
            (_, i) => format!("T{i}"),
        }
    }
}

/// Frequency-independent path geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGeometry {
    pub tx: Point3,
    pub rx: Point3,
    pub interactions: Vec<Interaction>,
    pub length_m: f64,
}

impl PathGeometry {
    /// Node positions from transmitter to receiver.
    pub fn nodes(&self) -> Vec<Point3> {
        let mut v = Vec::with_capacity(self.interactions.len() + 2);
        v.push(self.tx);
        v.extend(self.interactions.iter().map(|i| i.point()));
        v.push(self.rx);
        v
    }

    pub fn signature(&self) -> Vec<(u8, usize)> {
        self.interactions.iter().map(|i| i.tag()).collect()
    }

    pub fn label(&self) -> String {
        if self.interactions.is_empty() {
            "LOS".to_string()
        } else {
            self.interactions
                .iter()
                .map(|i| i.label())
                .collect::<Vec<_>>()
                .join("-")
        }
    }

    pub fn count(&self, kind: u8) -> usize {
        self.interactions.iter().filter(|i| i.tag().0 == kind).count()
    }

    /// The same path traversed from receiver to transmitter.
    pub fn reversed(&self) -> PathGeometry {
        let mut interactions = self.interactions.clone();
        interactions.reverse();
        PathGeometry {
            tx: self.rx,
            rx: self.tx,
            interactions,
            length_m: self.length_m,
        }
    }
}

/// One multipath component evaluated at a carrier frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub geometry: PathGeometry,
    /// Linear field amplitude excluding antenna gains.
    pub amp: f64,
    pub phase_rad: f64,
    pub delay_s: f64,
    /// Departure direction at the transmitter.
    pub aod: AzEl,
    /// Arrival direction at the receiver, pointing back along the path.
    pub aoa: AzEl,
    pub departure: Vec3,
    pub arrival: Vec3,
}

impl Path {
    pub fn length_m(&self) -> f64 {
        self.geometry.length_m
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.geometry.interactions
    }

    /// Received power with isotropic antennas at the reference transmit
    /// power (dBm).
    pub fn power_dbm(&self, reference_power_dbm: f64) -> f64 {
        reference_power_dbm + 20.0 * self.amp.log10()
    }
}

/// Complex field of a path geometry: `(amp, phase, delay)`.
pub fn path_field(scene: &Scene, geom: &PathGeometry, f_hz: f64) -> Result<(f64, f64, f64)> {
    let lambda = wavelength(f_hz);
    let k0 = 2.0 * std::f64::consts::PI / lambda;
    let nodes = geom.nodes();
    let mut amp = lambda / (4.0 * std::f64::consts::PI * geom.length_m);
    let mut phase = -k0 * geom.length_m;
    for (k, inter) in geom.interactions.iter().enumerate() {
        let d_in = (nodes[k + 1] - nodes[k]).normalize();
        match *inter {
            Interaction::Reflect { face, .. } | Interaction::Transmit { face, .. } => {
                let fc = scene.face(face);
                let m = scene.material_of(face);
                let eps = complex_permittivity(m, f_hz)?;
                let cos_i = d_in.dot(&fc.normal).abs();
                let pol = coeff::incidence_polarization(&fc.normal, &d_in);
                let c: Complex64 = if matches!(inter, Interaction::Reflect { .. }) {
                    coeff::fresnel_from_cos(eps, cos_i, pol)
                } else {
                    coeff::transmission_from_cos(eps, cos_i, pol, m.thickness_m, k0)
                };
                amp *= c.norm();
                phase += c.arg();
            }
            Interaction::Diffract {
                unfolded_direct_m, ..
            } => {
                let v = coeff::fresnel_kirchhoff_v(geom.length_m - unfolded_direct_m, lambda);
                amp *= 10f64.powf(-knife_edge_loss(v) / 20.0);
            }
        }
    }
    Ok((amp, wrap_rad(phase), geom.length_m / C0))
}

/// Path tracer over an immutable scene.
#[derive(Debug, Clone)]
pub struct Tracer<'a> {
    scene: &'a Scene,
    limits: TraceLimits,
    exhaustive: bool,
}

impl<'a> Tracer<'a> {
    pub fn new(scene: &'a Scene, limits: TraceLimits) -> Result<Self> {
        limits.validate()?;
        let count = survey::exhaustive_count(
            scene.faces().len(),
            scene.edges().len(),
            limits.max_reflections,
            limits.max_diffractions > 0,
        );
        Ok(Self {
            scene,
            limits,
            exhaustive: count <= limits.exhaustive_budget,
        })
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    pub fn limits(&self) -> &TraceLimits {
        &self.limits
    }

    /// Whether skeletons are enumerated exhaustively for this scene.
    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    /// Reachability survey from one endpoint; `None` in exhaustive mode.
    pub fn survey(&self, origin: Point3) -> Option<Survey> {
        (!self.exhaustive).then(|| {
            Survey::run(
                self.scene,
                origin,
                self.limits.launch_rays,
                self.limits.survey_depth(),
            )
        })
    }

    /// All valid path geometries between two points, in canonical order.
    pub fn trace_geometry(&self, tx: Point3, rx: Point3) -> Vec<PathGeometry> {
        let st = self.survey(tx);
        let sr = self.survey(rx);
        self.trace_geometry_with(tx, st.as_ref(), rx, sr.as_ref())
    }

    /// Like [`Tracer::trace_geometry`] with precomputed surveys, which lets
    /// callers reuse a site survey across many receivers.
    pub fn trace_geometry_with(
        &self,
        tx: Point3,
        tx_survey: Option<&Survey>,
        rx: Point3,
        rx_survey: Option<&Survey>,
    ) -> Vec<PathGeometry> {
        let diffraction = self.limits.max_diffractions > 0;
        let skeletons = match (self.exhaustive, tx_survey, rx_survey) {
            (false, Some(a), Some(b)) => {
                survey::seeded_candidates(a, b, self.limits.max_reflections, diffraction)
            }
            _ => survey::exhaustive_candidates(self.scene, self.limits.max_reflections, diffraction),
        };
        let mut scratch = Scratch::default();
        let mut out: Vec<PathGeometry> = skeletons
            .iter()
            .filter_map(|s| {
                solve::solve(
                    self.scene,
                    &tx,
                    &rx,
                    s,
                    self.limits.max_transmissions,
                    &mut scratch,
                )
            })
            .collect();
        out.sort_by(|a, b| {
            a.length_m
                .total_cmp(&b.length_m)
                .then_with(|| a.signature().cmp(&b.signature()))
        });
        out
    }

    /// Evaluates geometries at `f_hz`, applies the power floor, sorts by
    /// descending power and keeps at most `max_paths`.
    pub fn evaluate(&self, geoms: &[PathGeometry], f_hz: f64) -> Result<Vec<Path>> {
        let mut paths = Vec::with_capacity(geoms.len());
        for g in geoms {
            let (amp, phase_rad, delay_s) = path_field(self.scene, g, f_hz)?;
            let p = make_path(g.clone(), amp, phase_rad, delay_s);
            if amp > 0.0 && p.power_dbm(self.limits.reference_power_dbm) >= self.limits.power_floor_dbm {
                paths.push(p);
            }
        }
        paths.sort_by(|a, b| {
            b.amp
                .total_cmp(&a.amp)
                .then_with(|| a.geometry.length_m.total_cmp(&b.geometry.length_m))
                .then_with(|| a.geometry.signature().cmp(&b.geometry.signature()))
        });
        paths.truncate(self.limits.max_paths);
        Ok(paths)
    }

    pub fn trace(&self, tx: Point3, rx: Point3, f_hz: f64) -> Result<Vec<Path>> {
        let g = self.trace_geometry(tx, rx);
        self.evaluate(&g, f_hz)
    }
}

fn make_path(geometry: PathGeometry, amp: f64, phase_rad: f64, delay_s: f64) -> Path {
    let nodes = geometry.nodes();
    let departure = (nodes[1] - nodes[0]).normalize();
    let n = nodes.len();
    let arrival = (nodes[n - 2] - nodes[n - 1]).normalize();
    Path {
        geometry,
        amp,
        phase_rad,
        delay_s,
        aod: AzEl::from_vector(&departure),
        aoa: AzEl::from_vector(&arrival),
        departure,
        arrival,
    }
}

/// Traces up to `max_paths` paths from `tx` to `rx` at `f_hz`.
pub fn trace_paths(
    scene: &Scene,
    tx: Point3,
    rx: Point3,
    f_hz: f64,
    limits: &TraceLimits,
) -> Result<Vec<Path>> {
    if (tx - rx).norm() < 1e-9 {
        return Err(invalid("rx", "transmitter and receiver coincide"));
    }
    Tracer::new(scene, *limits)?.trace(tx, rx, f_hz)
}

/// Writes one CSV row per path.
pub fn write_paths_csv<W: Write>(w: W, paths: &[Path]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "index",
        "interactions",
        "length_m",
        "delay_ns",
        "amp_db",
        "phase_deg",
        "aod_az_deg",
        "aod_el_deg",
        "aoa_az_deg",
        "aoa_el_deg",
    ])?;
    for (i, p) in paths.iter().enumerate() {
        wr.write_record([
            i.to_string(),
            p.geometry.label(),
            format!("{:.6}", p.geometry.length_m),
            format!("{:.6}", p.delay_s * 1e9),
            format!("{:.4}", 20.0 * p.amp.log10()),
            format!("{:.4}", p.phase_rad.to_degrees()),
            format!("{:.4}", p.aod.az_deg),
            format!("{:.4}", p.aod.el_deg),
            format!("{:.4}", p.aoa.az_deg),
            format!("{:.4}", p.aoa.el_deg),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
