//! Statistical city realizations from the ITU built-up-area parameters.
//!
//! The horizontal layout is deterministic: square footprints on a regular
//! grid whose pitch follows from the built-area ratio and building density.
//! Heights are i.i.d. Rayleigh draws with the height scale parameter.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default façade/roof material of generated buildings.
pub const DEFAULT_BUILDING_MATERIAL: &str = "concrete";

/// Heights above this multiple of the scale parameter are redrawn.
const HEIGHT_CAP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItuParams {
    /// Ratio of built-up area to total area.
    pub alpha0: f64,
    /// Buildings per square kilometre.
    pub beta0_per_km2: f64,
    /// Rayleigh height scale (m).
    pub gamma0_m: f64,
    /// Number of buildings.
    pub building_count: usize,
}

impl ItuParams {
    pub const HIGHRISE: ItuParams = ItuParams {
        alpha0: 0.5,
        beta0_per_km2: 300.0,
        gamma0_m: 50.0,
        building_count: 432,
    };
    pub const URBAN: ItuParams = ItuParams {
        alpha0: 0.3,
        beta0_per_km2: 500.0,
        gamma0_m: 15.0,
        building_count: 720,
    };
    pub const SUBURBAN: ItuParams = ItuParams {
        alpha0: 0.1,
        beta0_per_km2: 750.0,
        gamma0_m: 8.0,
        building_count: 1080,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0) {
            return Err(invalid("alpha0", format!("{} not in (0, 1)", self.alpha0)));
        }
        if !(self.beta0_per_km2 > 0.0) || !self.beta0_per_km2.is_finite() {
            return Err(invalid("beta0_per_km2", "must be positive"));
        }
        if !(self.gamma0_m > 0.0) || !self.gamma0_m.is_finite() {
            return Err(invalid("gamma0_m", "must be positive"));
        }
        if self.building_count == 0 {
            return Err(invalid("building_count", "must be at least 1"));
        }
        Ok(())
    }
}

/// Physical layout dimensions implied by [`ItuParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutDims {
    /// Building footprint side (m).
    pub w_b_m: f64,
    /// Street width (m).
    pub s_m: f64,
    /// Side of the square network area (km).
    pub d_km: f64,
}

impl LayoutDims {
    pub fn pitch_m(&self) -> f64 {
        self.s_m + self.w_b_m
    }

    pub fn side_m(&self) -> f64 {
        self.d_km * 1000.0
    }

    pub fn area_km2(&self) -> f64 {
        self.d_km * self.d_km
    }

    /// Built-area ratio recovered from the physical dimensions.
    pub fn alpha0(&self, building_count: usize) -> f64 {
        self.w_b_m * self.w_b_m * building_count as f64 / (1000.0 * self.d_km).powi(2)
    }

    /// Building density recovered from the physical dimensions.
    pub fn beta0(&self, building_count: usize) -> f64 {
        building_count as f64 / (self.d_km * self.d_km)
    }
}

pub fn derive_layout_dims(p: &ItuParams) -> Result<LayoutDims> {
    p.validate()?;
    let w_b = 1000.0 * (p.alpha0 / p.beta0_per_km2).sqrt();
    let s = 1000.0 / p.beta0_per_km2.sqrt() - w_b;
    if s <= 0.0 {
        return Err(Error::DegenerateLayout { street_m: s });
    }
    let d_km = (s + w_b) * (p.building_count as f64).sqrt() / 1000.0;
    Ok(LayoutDims {
        w_b_m: w_b,
        s_m: s,
        d_km,
    })
}

/// Inverse-CDF Rayleigh draw: `gamma0 * sqrt(-2 ln u)`.
pub fn sample_height(gamma0_m: f64, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(u));
    }
    if !(gamma0_m > 0.0) {
        return Err(invalid("gamma0_m", "must be positive"));
    }
    Ok(gamma0_m * (-2.0 * u.ln()).sqrt())
}

/// Rayleigh CDF of building height.
pub fn height_cdf(gamma0_m: f64, h: f64) -> f64 {
    if h <= 0.0 {
        0.0
    } else {
        1.0 - (-h * h / (2.0 * gamma0_m * gamma0_m)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    /// Footprint centre on the ground plane (m).
    pub center_m: [f64; 2],
    pub width_m: f64,
    pub height_m: f64,
    pub material: String,
}

impl Building {
    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        let h = self.width_m / 2.0;
        (x - self.center_m[0]).abs() < h && (y - self.center_m[1]).abs() < h
    }

    /// Horizontal distance from `(x, y)` to the footprint (0 inside).
    pub fn distance_xy(&self, x: f64, y: f64) -> f64 {
        let h = self.width_m / 2.0;
        let dx = ((x - self.center_m[0]).abs() - h).max(0.0);
        let dy = ((y - self.center_m[1]).abs() - h).max(0.0);
        dx.hypot(dy)
    }
}

/// One statistical city realization, centred on the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityLayout {
    pub params: ItuParams,
    pub dims: LayoutDims,
    /// Grid shape as `(rows, cols)`.
    pub grid: (usize, usize),
    pub seed: u64,
    pub buildings: Vec<Building>,
}

impl CityLayout {
    /// Side of the square that holds every footprint and the nominal
    /// network area (m).
    pub fn extent_m(&self) -> f64 {
        let (rows, cols) = self.grid;
        let grid_side = rows.max(cols) as f64 * self.dims.pitch_m();
        self.dims.side_m().max(grid_side)
    }

    pub fn is_street(&self, x: f64, y: f64) -> bool {
        !self.buildings.iter().any(|b| b.contains_xy(x, y))
    }

    pub fn max_height_m(&self) -> f64 {
        self.buildings.iter().map(|b| b.height_m).fold(0.0, f64::max)
    }

    /// Street (non-footprint) area inside an axis-aligned rectangle.
    pub fn street_area_in(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
        let total = (x1 - x0) * (y1 - y0);
        let built: f64 = self
            .buildings
            .iter()
            .map(|b| {
                let h = b.width_m / 2.0;
                let ox = (x1.min(b.center_m[0] + h) - x0.max(b.center_m[0] - h)).max(0.0);
                let oy = (y1.min(b.center_m[1] + h) - y0.max(b.center_m[1] - h)).max(0.0);
                ox * oy
            })
            .sum();
        total - built
    }

    pub fn set_material(&mut self, index: usize, material: &str) -> Result<()> {
        let n = self.buildings.len();
        let b = self
            .buildings
            .get_mut(index)
            .ok_or_else(|| invalid("building index", format!("{index} out of range (0..{n})")))?;
        b.material = material.to_string();
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let layout: CityLayout = serde_json::from_str(s)?;
        layout.params.validate()?;
        for b in &layout.buildings {
            if !(b.height_m > 0.0 && b.width_m > 0.0) {
                return Err(invalid("buildings", "width and height must be positive"));
            }
        }
        Ok(layout)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Grid shape for `n` buildings: `ceil(sqrt n)` columns and as many rows as
/// needed to hold all of them.
fn grid_shape(n: usize) -> (usize, usize) {
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    (rows, cols)
}

/// Generates one realization. Deterministic for a fixed `(params, seed)`.
///
/// Building counts that are not perfect squares leave a few grid slots empty;
/// the empty slots are spread evenly across the grid.
pub fn generate_city(params: &ItuParams, seed: u64) -> Result<CityLayout> {
    let dims = derive_layout_dims(params)?;
    let n = params.building_count;
    let (rows, cols) = grid_shape(n);
    let slots = rows * cols;
    let empty = slots - n;
    let mut skip = vec![false; slots];
    for k in 0..empty {
        let idx = ((k as f64 + 0.5) * slots as f64 / empty as f64).floor() as usize;
        skip[idx.min(slots - 1)] = true;
    }

    let pitch = dims.pitch_m();
    let x_start = -(cols as f64) * pitch / 2.0 + pitch / 2.0;
    let y_start = -(rows as f64) * pitch / 2.0 + pitch / 2.0;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buildings = Vec::with_capacity(n);
    for r in 0..rows {
        for c in 0..cols {
            if skip[r * cols + c] {
                continue;
            }
            buildings.push(Building {
                center_m: [x_start + c as f64 * pitch, y_start + r as f64 * pitch],
                width_m: dims.w_b_m,
                height_m: draw_height(&mut rng, params.gamma0_m),
                material: DEFAULT_BUILDING_MATERIAL.to_string(),
            });
        }
    }
    debug_assert_eq!(buildings.len(), n);

    Ok(CityLayout {
        params: *params,
        dims,
        grid: (rows, cols),
        seed,
        buildings,
    })
}

fn draw_height<R: Rng>(rng: &mut R, gamma0: f64) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u <= 0.0 {
            continue;
        }
        // u < 1 always holds for gen::<f64>()
        let h = gamma0 * (-2.0 * u.ln()).sqrt();
        if h <= HEIGHT_CAP_FACTOR * gamma0 {
            return h;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_table_dims() {
        let cases = [
            (ItuParams::HIGHRISE, 40.82, 16.91),
            (ItuParams::URBAN, 24.49, 20.23),
            (ItuParams::SUBURBAN, 11.54, 24.97),
        ];
        for (p, w, s) in cases {
            let d = derive_layout_dims(&p).unwrap();
            assert!((d.w_b_m - w).abs() < 0.01, "w_b {} vs {}", d.w_b_m, w);
            assert!((d.s_m - s).abs() < 0.01, "s {} vs {}", d.s_m, s);
            assert!((d.d_km - 1.2).abs() < 0.005, "d_km {}", d.d_km);
        }
    }

    #[test]
    fn test_degenerate_layout() {
        // alpha0 < 1 always leaves a positive street, so only the validator
        // can reject alpha0 >= 1.
        let p = ItuParams {
            alpha0: 1.0,
            ..ItuParams::URBAN
        };
        assert!(derive_layout_dims(&p).is_err());
    }

    #[test]
    fn test_sample_height_scale_point() {
        let h = sample_height(50.0, (-0.5f64).exp()).unwrap();
        assert!((h - 50.0).abs() < 1e-12);
        let h = sample_height(15.0, 1.0 - 1e-15).unwrap();
        assert!(h < 1e-5);
        assert!(sample_height(15.0, 0.0).is_err());
        assert!(sample_height(15.0, 1.0).is_err());
    }

    #[test]
    fn test_generate_city_counts_and_disjointness() {
        let c = generate_city(&ItuParams::HIGHRISE, 1).unwrap();
        assert_eq!(c.buildings.len(), 432);
        assert_eq!(c.grid, (21, 21));
        let half = c.dims.side_m() / 2.0;
        for (i, a) in c.buildings.iter().enumerate() {
            let h = a.width_m / 2.0;
            assert!(a.center_m[0].abs() + h <= half && a.center_m[1].abs() + h <= half);
            for b in &c.buildings[i + 1..] {
                let sep_x = (a.center_m[0] - b.center_m[0]).abs();
                let sep_y = (a.center_m[1] - b.center_m[1]).abs();
                assert!(sep_x >= a.width_m - 1e-9 || sep_y >= a.width_m - 1e-9);
            }
        }
    }

    #[test]
    fn test_generate_city_deterministic() {
        let a = generate_city(&ItuParams::URBAN, 9).unwrap();
        let b = generate_city(&ItuParams::URBAN, 9).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = generate_city(&ItuParams::URBAN, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn test_json_round_trip_bit_exact() {
        let a = generate_city(&ItuParams::SUBURBAN, 3).unwrap();
        let back = CityLayout::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn test_street_area() {
        let c = generate_city(&ItuParams::HIGHRISE, 2).unwrap();
        let half = c.dims.side_m() / 2.0;
        let street = c.street_area_in(-half, -half, half, half);
        let built = c.buildings.len() as f64 * c.dims.w_b_m.powi(2);
        assert!((street + built - (2.0 * half).powi(2)).abs() < 1e-6);
    }
}
