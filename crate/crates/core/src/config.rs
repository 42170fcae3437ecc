//! JSON configuration files and named presets.
//!
//! Resolution order, later layers winning: built-in defaults, a preset,
//! the config file, command-line overrides. Every key of the file is
//! optional and physical quantities carry their unit in the key name.
//!
//! Preset names follow `[desk-]<environment>[-<carrier>GHz][-<free|full>]`,
//! for example `highrise-8.2GHz-full` or `desk-suburban-28GHz-free`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::antenna::{ArrayGeometry, ElementPattern, SUPPORTED_BANDS_GHZ};
use crate::error::{Error, Result};
use crate::material::Material;
use crate::metrics::BandConfig;
use crate::scenario::{Environment, Interference, RunConfig, UeType};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItuPatch {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta0_per_km2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma0_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub building_count: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceLimitsPatch {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_reflections: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_diffractions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_transmissions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_floor_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_power_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub launch_rays: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhaustive_budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UraSpec {
    pub rows: usize,
    pub cols: usize,
    pub spacing_wl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UlaSpec {
    pub elements: usize,
    pub spacing_wl: f64,
}

/// On-disk configuration document; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub environment: Option<Environment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub itu: Option<ItuPatch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub carrier_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bs_array: Option<UraSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ue_array: Option<UlaSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_max_bps_per_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interference: Option<Interference>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ue_type: Option<UeType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ues: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hex_rings: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isd_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub downtilt_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0_w_per_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_th_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ue_height_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bs_mast_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bs_fallback_height_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bs_element: Option<ElementPattern>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pedestrian_element: Option<ElementPattern>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub building_material: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_material: Option<String>,
    /// Added to the material library, replacing entries of the same name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub materials: Option<Vec<Material>>,
    /// Per-building material overrides keyed by building index.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub building_materials: Option<BTreeMap<usize, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_limits: Option<TraceLimitsPatch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imported_geometry: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

/// Command-line overrides applied after the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub ues: Option<usize>,
    pub max_reflections: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub interference: Option<Interference>,
    pub ue_type: Option<UeType>,
    pub band_ghz: Option<f64>,
}

fn bad(key: &str, reason: impl Into<String>) -> Error {
    Error::ConfigValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl ConfigFile {
    pub fn from_str(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(text).map_err(|e| Error::ConfigParse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }

    /// Fully populated document describing `cfg`.
    pub fn from_resolved(cfg: &RunConfig) -> Self {
        let l = cfg.trace_limits;
        Self {
            preset: None,
            environment: Some(cfg.environment),
            itu: Some(ItuPatch {
                alpha0: Some(cfg.itu.alpha0),
                beta0_per_km2: Some(cfg.itu.beta0_per_km2),
                gamma0_m: Some(cfg.itu.gamma0_m),
                building_count: Some(cfg.itu.building_count),
            }),
            carrier_ghz: Some(cfg.band.ghz()),
            bandwidth_mhz: Some(cfg.band.bandwidth_hz / 1e6),
            bs_array: Some(UraSpec {
                rows: cfg.band.bs_array.n_rows,
                cols: cfg.band.bs_array.n_cols,
                spacing_wl: cfg.band.bs_array.spacing_wl,
            }),
            ue_array: Some(UlaSpec {
                elements: cfg.band.ue_array.n_cols,
                spacing_wl: cfg.band.ue_array.spacing_wl,
            }),
            alpha: Some(cfg.band.alpha),
            rho_max_bps_per_hz: Some(cfg.band.rho_max),
            interference: Some(cfg.interference),
            ue_type: Some(cfg.ue_type),
            realizations: Some(cfg.n_realizations),
            seed: Some(cfg.base_seed),
            ues: Some(cfg.n_ues),
            hex_rings: Some(cfg.hex_rings),
            isd_m: Some(cfg.isd_m),
            downtilt_deg: Some(cfg.downtilt_deg),
            tx_power_w: Some(cfg.tx_power_w),
            n0_w_per_hz: Some(cfg.n0_w_per_hz),
            gamma_th_db: Some(cfg.gamma_th_db),
            ue_height_m: Some(cfg.ue_height_m),
            bs_mast_m: Some(cfg.bs_mast_m),
            bs_fallback_height_m: Some(cfg.bs_fallback_height_m),
            bs_element: Some(cfg.bs_element),
            pedestrian_element: Some(cfg.pedestrian_element),
            building_material: Some(cfg.building_material.clone()),
            ground_material: Some(cfg.ground_material.clone()),
            materials: Some(cfg.materials.clone()),
            building_materials: Some(cfg.building_materials.clone()),
            trace_limits: Some(TraceLimitsPatch {
                max_reflections: Some(l.max_reflections),
                max_diffractions: Some(l.max_diffractions),
                max_transmissions: Some(l.max_transmissions),
                max_paths: Some(l.max_paths),
                power_floor_dbm: Some(l.power_floor_dbm),
                reference_power_dbm: Some(l.reference_power_dbm),
                launch_rays: Some(l.launch_rays),
                exhaustive_budget: Some(l.exhaustive_budget),
            }),
            imported_geometry: cfg.imported_geometry.clone(),
            out_dir: None,
        }
    }

    /// Applies this document on top of `cfg`.
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(env) = self.environment {
            set_environment(cfg, env);
        }
        if let Some(p) = &self.itu {
            let it = &mut cfg.itu;
            if let Some(v) = p.alpha0 {
                it.alpha0 = v;
            }
            if let Some(v) = p.beta0_per_km2 {
                it.beta0_per_km2 = v;
            }
            if let Some(v) = p.gamma0_m {
                it.gamma0_m = v;
            }
            if let Some(v) = p.building_count {
                it.building_count = v;
            }
        }
        if let Some(ghz) = self.carrier_ghz {
            set_band(cfg, ghz, "carrier_ghz")?;
        }
        if let Some(b) = self.bandwidth_mhz {
            if !(b > 0.0) || !b.is_finite() {
                return Err(bad("bandwidth_mhz", format!("{b} must be positive")));
            }
            cfg.band.bandwidth_hz = b * 1e6;
        }
        if let Some(a) = &self.bs_array {
            if a.rows == 0 || a.cols == 0 || !(a.spacing_wl > 0.0) {
                return Err(bad("bs_array", "rows, cols and spacing_wl must be positive"));
            }
            cfg.band.bs_array = ArrayGeometry {
                n_rows: a.rows,
                n_cols: a.cols,
                spacing_wl: a.spacing_wl,
                ..ArrayGeometry::ura(1)
            };
        }
        if let Some(a) = &self.ue_array {
            if a.elements == 0 || !(a.spacing_wl > 0.0) {
                return Err(bad("ue_array", "elements and spacing_wl must be positive"));
            }
            cfg.band.ue_array = ArrayGeometry {
                spacing_wl: a.spacing_wl,
                ..ArrayGeometry::ula(a.elements)
            };
        }
        if let Some(v) = self.alpha {
            cfg.band.alpha = v;
        }
        if let Some(v) = self.rho_max_bps_per_hz {
            cfg.band.rho_max = v;
        }
        macro_rules! copy {
            ($($src:ident => $dst:ident),* $(,)?) => {
                $(if let Some(v) = &self.$src { cfg.$dst = v.clone(); })*
            };
        }
        copy!(
            interference => interference,
            ue_type => ue_type,
            realizations => n_realizations,
            seed => base_seed,
            ues => n_ues,
            hex_rings => hex_rings,
            isd_m => isd_m,
            downtilt_deg => downtilt_deg,
            tx_power_w => tx_power_w,
            n0_w_per_hz => n0_w_per_hz,
            gamma_th_db => gamma_th_db,
            ue_height_m => ue_height_m,
            bs_mast_m => bs_mast_m,
            bs_fallback_height_m => bs_fallback_height_m,
            bs_element => bs_element,
            pedestrian_element => pedestrian_element,
            building_material => building_material,
            ground_material => ground_material,
            building_materials => building_materials,
        );
        if let Some(ms) = &self.materials {
            let mut lib = cfg.material_library()?;
            for m in ms {
                m.validate().map_err(|e| bad("materials", e.to_string()))?;
                lib.insert(m.clone())?;
            }
            cfg.materials = lib.iter().cloned().collect();
        }
        if let Some(p) = &self.trace_limits {
            let l = &mut cfg.trace_limits;
            macro_rules! lim {
                ($($f:ident),*) => { $(if let Some(v) = p.$f { l.$f = v; })* };
            }
            lim!(
                max_reflections,
                max_diffractions,
                max_transmissions,
                max_paths,
                power_floor_dbm,
                reference_power_dbm,
                launch_rays,
                exhaustive_budget
            );
        }
        if let Some(g) = &self.imported_geometry {
            cfg.imported_geometry = Some(g.clone());
        }
        Ok(())
    }
}

fn set_environment(cfg: &mut RunConfig, env: Environment) {
    cfg.environment = env;
    if let Some(itu) = env.itu() {
        cfg.itu = itu;
    }
}

fn set_band(cfg: &mut RunConfig, ghz: f64, key: &str) -> Result<()> {
    cfg.band = BandConfig::for_ghz(ghz).map_err(|e| match e {
        Error::UnsupportedBand { .. } => bad(
            key,
            format!(
                "unsupported band {ghz} GHz (supported bands: {} GHz)",
                SUPPORTED_BANDS_GHZ.map(|b| b.to_string()).join(", ")
            ),
        ),
        other => other,
    })?;
    Ok(())
}

/// Applies a named preset to `cfg`.
pub fn apply_preset(cfg: &mut RunConfig, name: &str) -> Result<()> {
    let mut tokens = name.split('-').peekable();
    let desk = tokens.peek() == Some(&"desk");
    if desk {
        tokens.next();
    }
    let env = match tokens.next() {
        Some("suburban") => Environment::Suburban,
        Some("urban") => Environment::Urban,
        Some("highrise") | Some("high_rise") => Environment::Highrise,
        other => {
            return Err(bad(
                "preset",
                format!("unknown environment {other:?} in `{name}` (suburban, urban, highrise)"),
            ))
        }
    };
    set_environment(cfg, env);
    if desk {
        cfg.hex_rings = 1;
        cfg.n_ues = 100;
        cfg.n_realizations = 3;
        cfg.trace_limits.max_reflections = 2;
    } else {
        cfg.hex_rings = 2;
        cfg.n_ues = 370;
        cfg.n_realizations = 10;
        cfg.trace_limits.max_reflections = 3;
    }
    for t in tokens {
        if let Some(num) = t.strip_suffix("GHz").or_else(|| t.strip_suffix("ghz")) {
            let ghz: f64 = num
                .parse()
                .map_err(|_| bad("preset", format!("bad carrier `{t}` in `{name}`")))?;
            set_band(cfg, ghz, "preset")?;
        } else if t == "free" {
            cfg.interference = Interference::Free;
        } else if t == "full" {
            cfg.interference = Interference::Full;
        } else {
            return Err(bad("preset", format!("unexpected token `{t}` in `{name}`")));
        }
    }
    Ok(())
}

/// Resolves defaults, preset, file and overrides into a validated config
/// and the output directory, if one was given.
pub fn resolve(file: &ConfigFile, ov: &Overrides) -> Result<(RunConfig, Option<PathBuf>)> {
    let mut cfg = RunConfig::default();
    if let Some(p) = ov.preset.as_deref().or(file.preset.as_deref()) {
        apply_preset(&mut cfg, p)?;
    }
    file.apply(&mut cfg)?;
    if let Some(v) = ov.seed {
        cfg.base_seed = v;
    }
    if let Some(v) = ov.realizations {
        cfg.n_realizations = v;
    }
    if let Some(v) = ov.ues {
        cfg.n_ues = v;
    }
    if let Some(v) = ov.max_reflections {
        cfg.trace_limits.max_reflections = v;
    }
    if let Some(v) = ov.interference {
        cfg.interference = v;
    }
    if let Some(v) = ov.ue_type {
        cfg.ue_type = v;
    }
    if let Some(g) = ov.band_ghz {
        set_band(&mut cfg, g, "band")?;
    }
    cfg.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => bad(name, reason),
        other => other,
    })?;
    let out = ov.out_dir.clone().or_else(|| file.out_dir.clone());
    Ok((cfg, out))
}

/// Reads and resolves a config file without command-line overrides.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let file = ConfigFile::load(path)?;
    Ok(resolve(&file, &Overrides::default())?.0)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    Ok(resolve(&ConfigFile::from_str(text)?, &Overrides::default())?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::city::ItuParams;

    #[test]
    fn test_highrise_preset() {
        let cfg = parse_config_str(r#"{"preset": "highrise-8.2GHz-full"}"#).unwrap();
        assert_eq!(cfg.itu, ItuParams::HIGHRISE);
        assert_eq!(cfg.band.f_hz, 8.2e9);
        assert_eq!(cfg.band.bandwidth_hz, 200e6);
        assert_eq!((cfg.band.bs_array.n_rows, cfg.band.bs_array.n_cols), (3, 3));
        assert_eq!(cfg.band.ue_array.n_cols, 2);
        assert_eq!(cfg.interference, Interference::Full);
    }

    #[test]
    fn test_empty_defaults() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.environment, Environment::Suburban);
        assert_eq!(cfg.interference, Interference::Free);
        assert_eq!(parse_config_str("{}").unwrap(), cfg);
    }

    #[test]
    fn test_validation_names_key() {
        let e = parse_config_str(r#"{"bandwidth_mhz": -1}"#).unwrap_err();
        assert!(e.to_string().contains("bandwidth_mhz"), "{e}");
        let e = parse_config_str(r#"{"bandwidth": 10}"#).unwrap_err();
        assert!(matches!(e, Error::ConfigParse { line: 1, .. }), "{e}");
        assert!(e.to_string().contains("bandwidth"));
        let e = parse_config_str("{\n  \"seed\": }").unwrap_err();
        assert!(matches!(e, Error::ConfigParse { line: 2, .. }), "{e}");
    }

    #[test]
    fn test_unsupported_band_lists_bands() {
        let ov = Overrides {
            band_ghz: Some(10.0),
            ..Overrides::default()
        };
        let e = resolve(&ConfigFile::default(), &ov).unwrap_err().to_string();
        assert!(e.contains("4.6, 8.2, 15, 28"), "{e}");
    }

    #[test]
    fn test_precedence() {
        let file = ConfigFile::from_str(r#"{"preset": "desk-urban", "ues": 50, "seed": 4}"#).unwrap();
        let ov = Overrides {
            seed: Some(9),
            ..Overrides::default()
        };
        let (cfg, _) = resolve(&file, &ov).unwrap();
        assert_eq!(cfg.n_ues, 50);
        assert_eq!(cfg.base_seed, 9);
        assert_eq!(cfg.hex_rings, 1);
        assert_eq!(cfg.trace_limits.max_reflections, 2);
    }

    #[test]
    fn test_resolved_round_trip() {
        let mut cfg = parse_config_str(r#"{"preset": "desk-highrise-15GHz-full", "materials": [{"name": "glass", "sigma_s_per_m": [0.03, 0.06, 0.12, 0.24], "eps_r": 6.31, "thickness_m": 0.012}]}"#).unwrap();
        cfg.building_materials.insert(3, "glass".into());
        let text = serde_json::to_string(&ConfigFile::from_resolved(&cfg)).unwrap();
        assert_eq!(parse_config_str(&text).unwrap(), cfg);
    }
}
