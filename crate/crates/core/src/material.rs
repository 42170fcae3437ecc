//! Frequency-dependent electromagnetic material parameters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::EPS0;

/// Frequencies (GHz) at which conductivity is tabulated.
pub const TABLE_FREQS_GHZ: [f64; 4] = [4.6, 8.2, 15.0, 28.0];

/// Supported evaluation range for [`complex_permittivity`] (GHz).
pub const FREQ_RANGE_GHZ: (f64, f64) = (1.0, 100.0);

pub const DEFAULT_THICKNESS_M: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Conductivity (S/m) at each of [`TABLE_FREQS_GHZ`].
    pub sigma_s_per_m: [f64; 4],
    pub eps_r: f64,
    pub thickness_m: f64,
}

impl Material {
    pub fn new(name: &str, sigma_s_per_m: [f64; 4], eps_r: f64) -> Result<Self> {
        let m = Self {
            name: name.to_string(),
            sigma_s_per_m,
            eps_r,
            thickness_m: DEFAULT_THICKNESS_M,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn concrete() -> Self {
        Self::new("concrete", [0.14, 0.23, 0.38, 0.63], 5.24).unwrap()
    }

    pub fn glass() -> Self {
        Self::new("glass", [0.03, 0.06, 0.12, 0.24], 6.31).unwrap()
    }

    pub fn brick() -> Self {
        Self::new("brick", [0.03, 0.03, 0.04, 0.04], 3.91).unwrap()
    }

    pub fn dry_earth() -> Self {
        Self::new("dry_earth", [0.003, 0.01, 0.036, 0.147], 3.00).unwrap()
    }

    pub fn with_thickness(mut self, thickness_m: f64) -> Result<Self> {
        self.thickness_m = thickness_m;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_s_per_m.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(invalid("sigma_s_per_m", format!("{}: must be >= 0", self.name)));
        }
        if !(self.eps_r >= 1.0) || !self.eps_r.is_finite() {
            return Err(invalid("eps_r", format!("{}: must be >= 1", self.name)));
        }
        if !(self.thickness_m > 0.0) || !self.thickness_m.is_finite() {
            return Err(invalid("thickness_m", format!("{}: must be positive", self.name)));
        }
        Ok(())
    }

    /// Conductivity at `f_ghz`, log-log interpolated between table points
    /// and held constant beyond the ends.
    pub fn sigma_at(&self, f_ghz: f64) -> f64 {
        let fs = TABLE_FREQS_GHZ;
        let s = self.sigma_s_per_m;
        if f_ghz <= fs[0] {
            return s[0];
        }
        if f_ghz >= fs[3] {
            return s[3];
        }
        let i = (0..3).find(|&i| f_ghz <= fs[i + 1]).unwrap();
        let (s0, s1) = (s[i], s[i + 1]);
        if s0 == 0.0 || s1 == 0.0 {
            // log-log is undefined at zero; fall back to linear
            let t = (f_ghz - fs[i]) / (fs[i + 1] - fs[i]);
            return s0 + t * (s1 - s0);
        }
        let t = (f_ghz / fs[i]).ln() / (fs[i + 1] / fs[i]).ln();
        (s0.ln() + t * (s1 / s0).ln()).exp()
    }
}

/// Built-in material names.
pub const BUILTIN_NAMES: [&str; 4] = ["concrete", "glass", "brick", "dry_earth"];

pub fn builtin(name: &str) -> Result<Material> {
    match name {
        "concrete" => Ok(Material::concrete()),
        "glass" => Ok(Material::glass()),
        "brick" => Ok(Material::brick()),
        "dry_earth" | "dry-earth" => Ok(Material::dry_earth()),
        other => Err(Error::UnknownMaterial(other.to_string())),
    }
}

/// Complex relative permittivity `eps_r - j sigma / (2 pi f eps0)`.
pub fn complex_permittivity(m: &Material, f_hz: f64) -> Result<Complex64> {
    let ghz = f_hz / 1e9;
    if !(ghz >= FREQ_RANGE_GHZ.0 && ghz <= FREQ_RANGE_GHZ.1) {
        return Err(Error::FrequencyOutOfRange { ghz });
    }
    let sigma = m.sigma_at(ghz);
    Ok(Complex64::new(
        m.eps_r,
        -sigma / (2.0 * std::f64::consts::PI * f_hz * EPS0),
    ))
}

/// Named materials available to a scene; faces refer to entries by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialLibrary {
    materials: Vec<Material>,
}

impl Default for MaterialLibrary {
    fn default() -> Self {
        Self {
            materials: vec![
                Material::concrete(),
                Material::glass(),
                Material::brick(),
                Material::dry_earth(),
            ],
        }
    }
}

impl MaterialLibrary {
    pub fn empty() -> Self {
        Self { materials: Vec::new() }
    }

    /// Adds or replaces a material by name and returns its index.
    pub fn insert(&mut self, m: Material) -> Result<usize> {
        m.validate()?;
        if let Some(i) = self.materials.iter().position(|x| x.name == m.name) {
            self.materials[i] = m;
            Ok(i)
        } else {
            self.materials.push(m);
            Ok(self.materials.len() - 1)
        }
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        let name = if name == "dry-earth" { "dry_earth" } else { name };
        self.materials
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }

    pub fn get(&self, i: usize) -> &Material {
        &self.materials[i]
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.iter()
    }
}
