//! Deployments, user drops and the Monte Carlo experiment loop.
//!
//! A [`Study`] traces every (site, UE) link of every realization once and
//! keeps the path geometries that can matter at any supported band. Each
//! (band, interference mode, UE type) combination is then evaluated from
//! the shared traces, so comparisons across bands and UE models see the
//! same cities, sites and user positions.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antenna::{AntennaArray, ElementPattern};
use crate::channel::{assemble_channel, ChannelMatrix};
use crate::city::{generate_city, CityLayout, ItuParams};
use crate::error::{invalid, Error, Result};
use crate::geom::Point3;
use crate::material::{Material, MaterialLibrary};
use crate::metrics::{
    self, coverage_probability, db_to_lin, interference_power, noise_power, select_serving,
    BandConfig, Candidate, Interferer, LinkBudget, UeMetrics,
};
use crate::ray::survey::Survey;
use crate::ray::{PathGeometry, TraceLimits, Tracer};
use crate::scene::{build_scene_with, import, Scene};

pub const SECTOR_AZIMUTHS_DEG: [f64; 3] = [0.0, 120.0, 240.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Environment {
    Suburban,
    Urban,
    #[serde(alias = "high_rise")]
    Highrise,
    Imported,
}

impl Environment {
    pub fn itu(&self) -> Option<ItuParams> {
        match self {
            Environment::Suburban => Some(ItuParams::SUBURBAN),
            Environment::Urban => Some(ItuParams::URBAN),
            Environment::Highrise => Some(ItuParams::HIGHRISE),
            Environment::Imported => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Environment::Suburban => "suburban",
            Environment::Urban => "urban",
            Environment::Highrise => "highrise",
            Environment::Imported => "imported",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interference {
    Free,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UeType {
    Vehicular,
    Pedestrian,
}

impl UeType {
    pub fn name(&self) -> &'static str {
        match self {
            UeType::Vehicular => "vehicular",
            UeType::Pedestrian => "pedestrian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: usize,
    pub position: Point3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub sites: Vec<Site>,
    pub isd_m: f64,
    pub downtilt_deg: f64,
    pub sector_azimuths_deg: [f64; 3],
}

impl Deployment {
    pub fn sector_count(&self) -> usize {
        self.sites.len() * self.sector_azimuths_deg.len()
    }

    /// Site hosting a global sector index.
    pub fn site_of(&self, sector: usize) -> usize {
        sector / self.sector_azimuths_deg.len()
    }

    /// Sets every site height to the nearest building's roof plus `mast_m`,
    /// or to `fallback_m` when there are no buildings.
    pub fn mount_on_rooftops(&mut self, layout: Option<&CityLayout>, mast_m: f64, fallback_m: f64) {
        for s in &mut self.sites {
            let nearest = layout.and_then(|l| {
                l.buildings
                    .iter()
                    .map(|b| (b.distance_xy(s.position.x, s.position.y), b.height_m))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
            });
            s.position.z = match nearest {
                Some((_, h)) => h + mast_m,
                None => fallback_m,
            };
        }
    }
}

/// Hexagonal layout with `rings` rings around a centre site, keeping sites
/// inside the network square enlarged by a tenth of the ISD on each side.
pub fn deploy_hex_rings(area_side_m: f64, isd_m: f64, rings: usize) -> Result<Deployment> {
    if !(area_side_m > 0.0) {
        return Err(invalid("area_side_m", "area too small for one site"));
    }
    if !(isd_m > 0.0) {
        return Err(invalid("isd_m", "must be positive"));
    }
    let limit = area_side_m / 2.0 + isd_m / 10.0;
    let r = rings as i64;
    let mut pts = Vec::new();
    for q in -r..=r {
        for s in (-r).max(-q - r)..=r.min(-q + r) {
            let x = isd_m * (q as f64 + s as f64 / 2.0);
            let y = isd_m * (s as f64) * 3f64.sqrt() / 2.0;
            if x.abs() <= limit + 1e-9 && y.abs() <= limit + 1e-9 {
                let ring = q.abs().max(s.abs()).max((q + s).abs());
                pts.push((ring, y, x));
            }
        }
    }
    // centre first, then ring by ring, row-major within a ring
    pts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    Ok(Deployment {
        sites: pts
            .iter()
            .enumerate()
            .map(|(id, p)| Site {
                id,
                position: Point3::new(p.2, p.1, 0.0),
            })
            .collect(),
        isd_m,
        downtilt_deg: -12.0,
        sector_azimuths_deg: SECTOR_AZIMUTHS_DEG,
    })
}

/// Centre site plus two hexagonal rings clipped to the network square.
pub fn deploy_hex(area_side_m: f64, isd_m: f64) -> Result<Deployment> {
    deploy_hex_rings(area_side_m, isd_m, 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeDrop {
    pub positions: Vec<[f64; 2]>,
    /// Direction each user faces; sets the user array orientation.
    pub headings_deg: Vec<f64>,
    pub height_m: f64,
    pub seed: u64,
}

impl UeDrop {
    pub fn point(&self, i: usize) -> Point3 {
        Point3::new(self.positions[i][0], self.positions[i][1], self.height_m)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

const UE_STREAM: u64 = 1;
const MAX_DROP_TRIES_PER_UE: usize = 10_000;

/// Uniform street positions over the whole network square.
pub fn drop_ues(layout: &CityLayout, n: usize, seed: u64) -> Result<UeDrop> {
    drop_ues_in(layout, n, seed, layout.dims.side_m(), 2.0)
}

/// Uniform street positions inside a centred square of side `region_m`.
pub fn drop_ues_in(layout: &CityLayout, n: usize, seed: u64, region_m: f64, height_m: f64) -> Result<UeDrop> {
    if !(region_m > 0.0) {
        return Err(invalid("region_m", "must be positive"));
    }
    let half = region_m / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(UE_STREAM);
    let mut positions = Vec::with_capacity(n);
    let mut headings = Vec::with_capacity(n);
    let mut tries = 0usize;
    while positions.len() < n {
        tries += 1;
        if tries > MAX_DROP_TRIES_PER_UE * n.max(1) {
            return Err(Error::DropFailed { attempts: tries - 1 });
        }
        let x = rng.gen_range(-half..half);
        let y = rng.gen_range(-half..half);
        if layout.is_street(x, y) {
            positions.push([x, y]);
            headings.push(rng.gen_range(0.0..360.0));
        }
    }
    Ok(UeDrop {
        positions,
        headings_deg: headings,
        height_m,
        seed,
    })
}

/// Empirical CDF: the i-th order statistic carries fraction `i / N`.
pub fn aggregate_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Empty("values"));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    Ok(v.into_iter()
        .enumerate()
        .map(|(i, x)| (x, (i + 1) as f64 / n))
        .collect())
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub environment: Environment,
    pub itu: ItuParams,
    pub band: BandConfig,
    pub interference: Interference,
    pub ue_type: UeType,
    pub n_realizations: usize,
    pub base_seed: u64,
    pub n_ues: usize,
    pub hex_rings: usize,
    pub isd_m: f64,
    pub downtilt_deg: f64,
    pub tx_power_w: f64,
    pub n0_w_per_hz: f64,
    pub gamma_th_db: f64,
    pub ue_height_m: f64,
    pub bs_mast_m: f64,
    pub bs_fallback_height_m: f64,
    pub bs_element: ElementPattern,
    pub pedestrian_element: ElementPattern,
    pub building_material: String,
    pub ground_material: String,
    pub materials: Vec<Material>,
    pub building_materials: BTreeMap<usize, String>,
    pub trace_limits: TraceLimits,
    pub imported_geometry: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            environment: Environment::Suburban,
            itu: ItuParams::SUBURBAN,
            band: BandConfig::for_ghz(4.6).unwrap(),
            interference: Interference::Free,
            ue_type: UeType::Vehicular,
            n_realizations: 10,
            base_seed: 1,
            n_ues: 370,
            hex_rings: 2,
            isd_m: 350.0,
            downtilt_deg: -12.0,
            tx_power_w: metrics::DEFAULT_TX_POWER_W,
            n0_w_per_hz: metrics::DEFAULT_N0_W_PER_HZ,
            gamma_th_db: metrics::DEFAULT_GAMMA_TH_DB,
            ue_height_m: 2.0,
            bs_mast_m: 1.0,
            bs_fallback_height_m: 25.0,
            bs_element: ElementPattern::sector(),
            pedestrian_element: ElementPattern::handgrip(),
            building_material: "concrete".into(),
            ground_material: "dry_earth".into(),
            materials: MaterialLibrary::default().iter().cloned().collect(),
            building_materials: BTreeMap::new(),
            trace_limits: TraceLimits {
                max_reflections: 3,
                ..TraceLimits::default()
            },
            imported_geometry: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.band.validate()?;
        if self.environment != Environment::Imported {
            self.itu.validate()?;
        } else if self.imported_geometry.is_none() {
            return Err(invalid("imported_geometry", "required for the imported environment"));
        }
        if self.n_realizations == 0 {
            return Err(invalid("n_realizations", "must be at least 1"));
        }
        if self.n_ues == 0 {
            return Err(invalid("n_ues", "must be at least 1"));
        }
        if !(self.isd_m > 0.0) {
            return Err(invalid("isd_m", "must be positive"));
        }
        if !(self.tx_power_w > 0.0) {
            return Err(invalid("tx_power_w", "must be positive"));
        }
        if !(self.n0_w_per_hz > 0.0) {
            return Err(invalid("n0_w_per_hz", "must be positive"));
        }
        if !self.gamma_th_db.is_finite() {
            return Err(invalid("gamma_th_db", "must be finite"));
        }
        if !(self.ue_height_m > 0.0) || !(self.bs_fallback_height_m > 0.0) || !(self.bs_mast_m >= 0.0) {
            return Err(invalid("heights", "UE and fallback BS heights must be positive"));
        }
        self.bs_element.validate()?;
        self.pedestrian_element.validate()?;
        self.trace_limits.validate()?;
        let lib = self.material_library()?;
        lib.index_of(&self.building_material)?;
        lib.index_of(&self.ground_material)?;
        for m in self.building_materials.values() {
            lib.index_of(m)?;
        }
        Ok(())
    }

    pub fn material_library(&self) -> Result<MaterialLibrary> {
        let mut lib = MaterialLibrary::empty();
        for m in &self.materials {
            lib.insert(m.clone())?;
        }
        Ok(lib)
    }

    pub fn realization_seeds(&self) -> Vec<u64> {
        (0..self.n_realizations as u64)
            .map(|r| self.base_seed.wrapping_add(r))
            .collect()
    }

    pub fn sigma_n2_w(&self, band: &BandConfig) -> f64 {
        noise_power(self.n0_w_per_hz, band.bandwidth_hz)
    }

    /// Side of the square users are dropped in.
    fn drop_region_m(&self, area_side_m: f64) -> f64 {
        area_side_m.min(2.0 * self.hex_rings.max(1) as f64 * self.isd_m)
    }
}

/// Per-realization geometry and traced links.
#[derive(Debug, Clone)]
pub struct Realization {
    pub index: usize,
    pub seed: u64,
    pub layout: Option<CityLayout>,
    pub scene: Scene,
    pub deployment: Deployment,
    pub ues: UeDrop,
    /// `links[ue][site]`: geometries retained for evaluation.
    pub links: Vec<Vec<Vec<PathGeometry>>>,
}

#[derive(Debug, Clone)]
pub struct Study {
    pub config: RunConfig,
    pub realizations: Vec<Realization>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub realization: usize,
    pub seed: u64,
    pub ue: UeMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub band: BandConfig,
    pub interference: Interference,
    pub ue_type: UeType,
    pub rows: Vec<MetricsRow>,
    pub rate_cdf: Vec<(f64, f64)>,
    pub coverage: f64,
}

impl RunResult {
    pub fn rates_bps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ue.rate_bps).collect()
    }

    /// Empirical quantile taken as the smallest value whose CDF reaches `q`.
    pub fn rate_quantile(&self, q: f64) -> f64 {
        self.rate_cdf
            .iter()
            .find(|(_, p)| *p >= q - 1e-12)
            .map(|(v, _)| *v)
            .unwrap_or(0.0)
    }
}

/// City layout (when procedural or imported from JSON), scene and side
/// length of the network square for one realization seed.
pub fn load_geometry(cfg: &RunConfig, seed: u64) -> Result<(Option<CityLayout>, Scene, f64)> {
    let lib = cfg.material_library()?;
    let ground = lib.get(lib.index_of(&cfg.ground_material)?).clone();
    if cfg.environment == Environment::Imported {
        let path = cfg.imported_geometry.as_deref().unwrap_or_default();
        if path.ends_with(".json") {
            let layout = CityLayout::read(FsPath::new(path))?;
            let scene = build_scene_with(&layout, &ground, lib)?;
            let side = layout.extent_m();
            return Ok((Some(layout), scene, side));
        }
        let text = std::fs::read_to_string(path)?;
        let scene = import::scene_from_obj(&text, lib, Some(&ground))?;
        let b = scene.bounds();
        let side = (b.max.x - b.min.x).max(b.max.y - b.min.y) / crate::scene::GROUND_MARGIN;
        return Ok((None, scene, side));
    }
    let mut layout = generate_city(&cfg.itu, seed)?;
    for b in &mut layout.buildings {
        b.material = cfg.building_material.clone();
    }
    for (&i, m) in &cfg.building_materials {
        layout.set_material(i, m)?;
    }
    let scene = build_scene_with(&layout, &ground, lib)?;
    let side = layout.dims.side_m();
    Ok((Some(layout), scene, side))
}

fn drop_on_open_ground(n: usize, seed: u64, region_m: f64, height_m: f64) -> UeDrop {
    let half = region_m / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(UE_STREAM);
    let mut positions = Vec::with_capacity(n);
    let mut headings = Vec::with_capacity(n);
    for _ in 0..n {
        positions.push([rng.gen_range(-half..half), rng.gen_range(-half..half)]);
        headings.push(rng.gen_range(0.0..360.0));
    }
    UeDrop {
        positions,
        headings_deg: headings,
        height_m,
        seed,
    }
}

/// Keeps the geometries that rank within `max_paths` at any supported band.
fn retain_relevant(tracer: &Tracer<'_>, geoms: Vec<PathGeometry>) -> Result<Vec<PathGeometry>> {
    let limit = tracer.limits().max_paths;
    if geoms.len() <= limit {
        return Ok(geoms);
    }
    let mut keep = vec![false; geoms.len()];
    for band in BandConfig::all() {
        let mut scored: Vec<(f64, usize)> = Vec::with_capacity(geoms.len());
        for (i, g) in geoms.iter().enumerate() {
            let (amp, _, _) = crate::ray::path_field(tracer.scene(), g, band.f_hz)?;
            scored.push((amp, i));
        }
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| geoms[a.1].length_m.total_cmp(&geoms[b.1].length_m))
                .then_with(|| geoms[a.1].signature().cmp(&geoms[b.1].signature()))
        });
        for &(_, i) in scored.iter().take(limit) {
            keep[i] = true;
        }
    }
    Ok(geoms
        .into_iter()
        .zip(keep)
        .filter_map(|(g, k)| k.then_some(g))
        .collect())
}

impl Study {
    /// Builds every realization and traces all (site, UE) links.
    pub fn prepare(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let realizations = cfg
            .realization_seeds()
            .into_iter()
            .enumerate()
            .map(|(r, seed)| Self::prepare_one(cfg, r, seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: cfg.clone(),
            realizations,
        })
    }

    fn prepare_one(cfg: &RunConfig, index: usize, seed: u64) -> Result<Realization> {
        let (layout, scene, side) = load_geometry(cfg, seed)?;
        let mut deployment = deploy_hex_rings(side, cfg.isd_m, cfg.hex_rings)?;
        deployment.downtilt_deg = cfg.downtilt_deg;
        deployment.mount_on_rooftops(layout.as_ref(), cfg.bs_mast_m, cfg.bs_fallback_height_m);
        let region = cfg.drop_region_m(side);
        let ues = match &layout {
            Some(l) => drop_ues_in(l, cfg.n_ues, seed, region, cfg.ue_height_m)?,
            None => drop_on_open_ground(cfg.n_ues, seed, region, cfg.ue_height_m),
        };

        let tracer = Tracer::new(&scene, cfg.trace_limits)?;
        let site_surveys: Vec<Option<Survey>> = deployment
            .sites
            .par_iter()
            .map(|s| tracer.survey(s.position))
            .collect();
        let links = (0..ues.len())
            .into_par_iter()
            .map(|u| {
                let p = ues.point(u);
                let ue_survey = tracer.survey(p);
                deployment
                    .sites
                    .iter()
                    .zip(&site_surveys)
                    .map(|(s, ss)| {
                        let g = tracer.trace_geometry_with(s.position, ss.as_ref(), p, ue_survey.as_ref());
                        retain_relevant(&tracer, g)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Realization {
            index,
            seed,
            layout,
            scene,
            deployment,
            ues,
            links,
        })
    }

    /// Evaluates one (band, interference, UE type) combination.
    pub fn evaluate(&self, band: &BandConfig, interference: Interference, ue_type: UeType) -> Result<RunResult> {
        band.validate()?;
        let cfg = &self.config;
        let mut rows = Vec::new();
        for real in &self.realizations {
            let tracer = Tracer::new(&real.scene, cfg.trace_limits)?;
            let ue_rows = (0..real.ues.len())
                .into_par_iter()
                .map(|u| self.evaluate_ue(&tracer, real, u, band, interference, ue_type))
                .collect::<Result<Vec<_>>>()?;
            rows.extend(ue_rows.into_iter().map(|ue| MetricsRow {
                realization: real.index,
                seed: real.seed,
                ue,
            }));
        }
        let rates: Vec<f64> = rows.iter().map(|r| r.ue.rate_bps).collect();
        let rate_cdf = aggregate_cdf(&rates)?;
        let ues: Vec<UeMetrics> = rows.iter().map(|r| r.ue).collect();
        let coverage = coverage_probability(&ues, db_to_lin(cfg.gamma_th_db))?;
        Ok(RunResult {
            band: *band,
            interference,
            ue_type,
            rows,
            rate_cdf,
            coverage,
        })
    }

    fn evaluate_ue(
        &self,
        tracer: &Tracer<'_>,
        real: &Realization,
        u: usize,
        band: &BandConfig,
        interference: Interference,
        ue_type: UeType,
    ) -> Result<UeMetrics> {
        let cfg = &self.config;
        let dep = &real.deployment;
        let ue_element = match ue_type {
            UeType::Vehicular => ElementPattern::isotropic(),
            UeType::Pedestrian => cfg.pedestrian_element,
        };
        let ue_array = AntennaArray::new(band.ue_array.oriented(real.ues.headings_deg[u], 0.0), ue_element);
        let n_t = band.bs_array.element_count();
        let n_r = ue_array.element_count();

        let mut channels: Vec<ChannelMatrix> = Vec::with_capacity(dep.sector_count());
        for (s, geoms) in real.links[u].iter().enumerate() {
            let paths = tracer.evaluate(geoms, band.f_hz)?;
            for &az in &dep.sector_azimuths_deg {
                let bs = AntennaArray::new(band.bs_array.oriented(az, dep.downtilt_deg), cfg.bs_element);
                channels.push(assemble_channel(&paths, &bs, &ue_array, band.f_hz));
            }
            debug_assert_eq!(channels.len(), (s + 1) * dep.sector_azimuths_deg.len());
        }

        let sigma = cfg.sigma_n2_w(band);
        let cands: Vec<Candidate<'_>> = channels
            .iter()
            .enumerate()
            .map(|(id, h)| Candidate {
                bs_id: id,
                channel: h,
                p_t_w: cfg.tx_power_w,
                n_t,
            })
            .collect();
        let serving = select_serving(&cands, sigma)?;
        let h = &channels[serving];
        let [x_m, y_m] = real.ues.positions[u];
        if h.is_zero() {
            return Ok(UeMetrics {
                ue_id: u,
                x_m,
                y_m,
                serving_bs: None,
                snr: 0.0,
                sinr: 0.0,
                rate_bps: 0.0,
                covered: false,
            });
        }

        let p_i = match interference {
            Interference::Free => 0.0,
            Interference::Full => {
                let site = dep.site_of(serving);
                let interferers: Vec<Interferer<'_>> = channels
                    .iter()
                    .enumerate()
                    .filter(|(id, _)| dep.site_of(*id) != site)
                    .map(|(_, ch)| Interferer {
                        channel: ch,
                        p_t_w: cfg.tx_power_w,
                        n_t,
                    })
                    .collect();
                interference_power(&interferers, n_r)
            }
        };
        let lb = LinkBudget::new(cfg.tx_power_w, n_t, sigma, p_i)?;
        let snr = metrics::snr(h, &lb);
        let sinr = metrics::sinr(h, &lb);
        Ok(UeMetrics {
            ue_id: u,
            x_m,
            y_m,
            serving_bs: Some(serving),
            snr,
            sinr,
            rate_bps: metrics::rate(sinr, band),
            covered: sinr > db_to_lin(cfg.gamma_th_db),
        })
    }
}

/// Runs the configured experiment end to end.
pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    let study = Study::prepare(cfg)?;
    study.evaluate(&cfg.band, cfg.interference, cfg.ue_type)
}
