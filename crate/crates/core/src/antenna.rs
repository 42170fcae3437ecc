//! Element radiation patterns and planar array geometry.
//!
//! Array frame: `x_l` is the boresight (azimuth `azimuth_deg`, elevation
//! `tilt_deg`, negative for a downtilt), `y_l` is horizontal and `z_l`
//! completes the right-handed frame. URA rows stack along `z_l` and columns
//! along `y_l`; a ULA lies along `y_l`. Element `(0, 0)` sits at the array
//! origin and is the phase reference.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{AzEl, Vec3};

pub const SUPPORTED_BANDS_GHZ: [f64; 4] = [4.6, 8.2, 15.0, 28.0];

/// Index of a supported carrier in [`SUPPORTED_BANDS_GHZ`].
pub fn band_index(f_hz: f64) -> Result<usize> {
    let ghz = f_hz / 1e9;
    SUPPORTED_BANDS_GHZ
        .iter()
        .position(|b| (b - ghz).abs() < 1e-6)
        .ok_or(Error::UnsupportedBand { ghz })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Sector,
    Isotropic,
    Handgrip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementPattern {
    pub kind: ElementKind,
    pub hpbw_az_deg: f64,
    pub hpbw_el_deg: f64,
    pub max_gain_dbi: f64,
    /// Front-to-back ratio `A_m` (dB).
    pub front_back_db: f64,
    /// Vertical side-lobe floor (dB).
    pub sla_db: f64,
}

impl ElementPattern {
    pub fn sector() -> Self {
        Self {
            kind: ElementKind::Sector,
            hpbw_az_deg: 65.0,
            hpbw_el_deg: 65.0,
            max_gain_dbi: 30.0,
            front_back_db: 30.0,
            sla_db: 30.0,
        }
    }

    pub fn handgrip() -> Self {
        Self {
            kind: ElementKind::Handgrip,
            hpbw_az_deg: 125.0,
            hpbw_el_deg: 125.0,
            max_gain_dbi: 5.3,
            front_back_db: 30.0,
            sla_db: 30.0,
        }
    }

    pub fn isotropic() -> Self {
        Self {
            kind: ElementKind::Isotropic,
            hpbw_az_deg: 360.0,
            hpbw_el_deg: 180.0,
            max_gain_dbi: 0.0,
            front_back_db: 0.0,
            sla_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hpbw_az_deg", self.hpbw_az_deg), ("hpbw_el_deg", self.hpbw_el_deg)] {
            if !(v > 0.0 && v < 360.0 || self.kind == ElementKind::Isotropic) {
                return Err(invalid(name, format!("{v} not in (0, 360)")));
            }
        }
        if !self.max_gain_dbi.is_finite() || self.front_back_db < 0.0 || self.sla_db < 0.0 {
            return Err(invalid("element", "gains must be finite, attenuations non-negative"));
        }
        Ok(())
    }

    /// Gain in dBi toward a direction given in the element frame.
    pub fn gain_dbi(&self, dir: AzEl) -> f64 {
        if self.kind == ElementKind::Isotropic {
            return self.max_gain_dbi;
        }
        let a_az = -(12.0 * (dir.az_deg / self.hpbw_az_deg).powi(2)).min(self.front_back_db);
        let a_el = -(12.0 * (dir.el_deg / self.hpbw_el_deg).powi(2)).min(self.sla_db);
        self.max_gain_dbi - (-(a_az + a_el)).min(self.front_back_db)
    }

    pub fn gain_linear(&self, dir: AzEl) -> f64 {
        10f64.powf(self.gain_dbi(dir) / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayKind {
    Ura,
    Ula,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub kind: ArrayKind,
    pub n_rows: usize,
    pub n_cols: usize,
    /// Element pitch in wavelengths.
    pub spacing_wl: f64,
    pub azimuth_deg: f64,
    /// Boresight elevation; negative values tilt the array down.
    pub tilt_deg: f64,
}

impl ArrayGeometry {
    pub fn ura(n: usize) -> Self {
        Self {
            kind: ArrayKind::Ura,
            n_rows: n,
            n_cols: n,
            spacing_wl: 0.5,
            azimuth_deg: 0.0,
            tilt_deg: 0.0,
        }
    }

    pub fn ula(n: usize) -> Self {
        Self {
            kind: ArrayKind::Ula,
            n_rows: 1,
            n_cols: n,
            spacing_wl: 0.5,
            azimuth_deg: 0.0,
            tilt_deg: 0.0,
        }
    }

    pub fn oriented(mut self, azimuth_deg: f64, tilt_deg: f64) -> Self {
        self.azimuth_deg = azimuth_deg;
        self.tilt_deg = tilt_deg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(invalid("array", "dimensions must be at least 1"));
        }
        if self.kind == ArrayKind::Ula && self.n_rows != 1 {
            return Err(invalid("array", "a ULA has a single row"));
        }
        if !(self.spacing_wl > 0.0) {
            return Err(invalid("spacing_wl", "must be positive"));
        }
        Ok(())
    }

    pub fn element_count(&self) -> usize {
        self.n_rows * self.n_cols
    }

    /// Array frame axes `(x_l, y_l, z_l)` in world coordinates.
    pub fn frame(&self) -> (Vec3, Vec3, Vec3) {
        let a = self.azimuth_deg.to_radians();
        let t = self.tilt_deg.to_radians();
        let x = Vec3::new(t.cos() * a.cos(), t.cos() * a.sin(), t.sin());
        let y = Vec3::new(-a.sin(), a.cos(), 0.0);
        (x, y, x.cross(&y))
    }

    /// World direction expressed in the array frame.
    pub fn to_local(&self, dir: &Vec3) -> AzEl {
        let (x, y, z) = self.frame();
        AzEl::from_vector(&Vec3::new(dir.dot(&x), dir.dot(&y), dir.dot(&z)))
    }

    /// Element offsets from the reference element (m), row-major.
    pub fn positions(&self, lambda: f64) -> Vec<Vec3> {
        let (_, y, z) = self.frame();
        let d = self.spacing_wl * lambda;
        let mut out = Vec::with_capacity(self.element_count());
        for r in 0..self.n_rows {
            for c in 0..self.n_cols {
                out.push((y * c as f64 + z * r as f64) * d);
            }
        }
        out
    }

    /// Plane-wave response toward unit world direction `dir`.
    pub fn steering(&self, dir: &Vec3, lambda: f64) -> Vec<Complex64> {
        let k = 2.0 * std::f64::consts::PI / lambda;
        self.positions(lambda)
            .iter()
            .map(|p| Complex64::from_polar(1.0, k * p.dot(dir)))
            .collect()
    }
}

/// Array geometry together with its element pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaArray {
    pub geometry: ArrayGeometry,
    pub element: ElementPattern,
}

impl AntennaArray {
    pub fn new(geometry: ArrayGeometry, element: ElementPattern) -> Self {
        Self { geometry, element }
    }

    pub fn element_count(&self) -> usize {
        self.geometry.element_count()
    }

    /// Linear element gain toward a world direction.
    pub fn gain(&self, dir: &Vec3) -> f64 {
        self.element.gain_linear(self.geometry.to_local(dir))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Bs,
    Ue,
}

/// Array dimensions per carrier: base-station URA or user ULA.
pub fn aperture_config(f_hz: f64, role: Role) -> Result<ArrayGeometry> {
    let i = band_index(f_hz)?;
    Ok(match role {
        Role::Bs => ArrayGeometry::ura([2, 3, 5, 9][i]),
        Role::Ue => ArrayGeometry::ula([2, 2, 3, 3][i]),
    })
}

/// Writes pattern cuts: each element in azimuth and elevation, and each
/// band's base-station array steered to boresight.
pub fn write_pattern_csv<W: Write>(w: W, elements: &[(&str, ElementPattern)], step_deg: f64) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["pattern", "cut", "angle_deg", "gain_dbi"])?;
    let n = (360.0 / step_deg).round() as i64;
    let angles: Vec<f64> = (0..=n).map(|k| -180.0 + k as f64 * step_deg).collect();
    for (name, el) in elements {
        for &a in &angles {
            wr.write_record([
                name.to_string(),
                "azimuth".into(),
                format!("{a}"),
                format!("{:.6}", el.gain_dbi(AzEl::new(a, 0.0))),
            ])?;
        }
        for &a in angles.iter().filter(|a| a.abs() <= 90.0) {
            wr.write_record([
                name.to_string(),
                "elevation".into(),
                format!("{a}"),
                format!("{:.6}", el.gain_dbi(AzEl::new(0.0, a))),
            ])?;
        }
    }
    for ghz in SUPPORTED_BANDS_GHZ {
        let g = aperture_config(ghz * 1e9, Role::Bs)?;
        let n_el = g.element_count() as f64;
        let el = ElementPattern::sector();
        let name = format!("bs_array_{ghz}GHz_{}x{}", g.n_rows, g.n_cols);
        for &a in &angles {
            let dir = AzEl::new(a, 0.0);
            let af: Complex64 = g.steering(&dir.to_unit(), 1.0).iter().sum();
            let gain = el.gain_dbi(dir) + 10.0 * (af.norm_sqr() / n_el).max(1e-30).log10();
            wr.write_record([name.clone(), "azimuth".into(), format!("{a}"), format!("{gain:.6}")])?;
        }
    }
    wr.flush()?;
    Ok(())
}
