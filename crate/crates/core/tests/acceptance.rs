//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::time::Instant;

use citylink::city::{derive_layout_dims, height_cdf, sample_height, ItuParams};
use citylink::config::parse_config_str;
use citylink::geom::Point3;
use citylink::material::{builtin, complex_permittivity, Material, MaterialLibrary, BUILTIN_NAMES};
use citylink::metrics::{coverage_probability, db_to_lin, BandConfig};
use citylink::output::metrics_csv;
use citylink::ray::{fresnel_coeff, trace_paths, transmission_coeff, Polarization, TraceLimits};
use citylink::scenario::{run, Interference, RunResult, Study, UeType};
use citylink::scene::{build_scene, ground_face, Scene};
use common::*;
use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Desk-scale studies shared by the trend criteria.
struct Studies {
    suburban_free: Vec<RunResult>,
    highrise_free: Vec<RunResult>,
    highrise_full: Vec<RunResult>,
    highrise_full_ped: Vec<RunResult>,
}

fn evaluate_all(study: &Study, interference: Interference, ue: UeType) -> Vec<RunResult> {
    BandConfig::all()
        .iter()
        .map(|b| study.evaluate(b, interference, ue).unwrap())
        .collect()
}

fn prepare_studies() -> Studies {
    let sub = Study::prepare(&parse_config_str(r#"{"preset": "desk-suburban"}"#).unwrap()).unwrap();
    let suburban_free = evaluate_all(&sub, Interference::Free, UeType::Vehicular);
    drop(sub);
    let hr = Study::prepare(&parse_config_str(r#"{"preset": "desk-highrise"}"#).unwrap()).unwrap();
    Studies {
        suburban_free,
        highrise_free: evaluate_all(&hr, Interference::Free, UeType::Vehicular),
        highrise_full: evaluate_all(&hr, Interference::Full, UeType::Vehicular),
        highrise_full_ped: evaluate_all(&hr, Interference::Full, UeType::Pedestrian),
    }
}

fn mbps(x: f64) -> String {
    format!("{:.1}", x / 1e6)
}

fn c1_layout() -> Outcome {
    let rows = [
        (ItuParams::HIGHRISE, 40.82, 16.91),
        (ItuParams::URBAN, 24.49, 20.23),
        (ItuParams::SUBURBAN, 11.54, 24.97),
    ];
    let mut worst = 0.0f64;
    for (p, w, s) in rows {
        let d = derive_layout_dims(&p).unwrap();
        worst = worst.max((d.w_b_m - w).abs()).max((d.s_m - s).abs());
    }
    outcome(worst <= 0.01, format!("max deviation {worst:.4} m (tolerance 0.01 m)"))
}

fn c2_heights() -> Outcome {
    let n = 100_000;
    let critical = 1.628 / (n as f64).sqrt();
    let mut worst = 0.0f64;
    for (k, gamma) in [8.0, 15.0, 50.0].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + k as u64);
        let mut h: Vec<f64> = (0..n).map(|_| sample_height(gamma, rng.sample(Open01)).unwrap()).collect();
        h.sort_by(f64::total_cmp);
        let d = h
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = height_cdf(gamma, x);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        worst = worst.max(d);
    }
    outcome(worst < critical, format!("max KS D = {worst:.5}, 1% critical {critical:.5}"))
}

fn c3_caps(st: &Studies) -> Outcome {
    let caps: Vec<f64> = BandConfig::all().iter().map(|b| b.rate_cap()).collect();
    let exact = caps == [0.288e9, 0.96e9, 1.44e9, 1.92e9];
    let all = st.suburban_free.iter().chain(&st.highrise_free).chain(&st.highrise_full).chain(&st.highrise_full_ped);
    let mut within = true;
    let mut maxima = vec![0.0f64; 4];
    for r in all {
        let i = caps.iter().position(|c| *c == r.band.rate_cap()).unwrap();
        for row in &r.rows {
            within &= row.ue.rate_bps <= caps[i];
            maxima[i] = maxima[i].max(row.ue.rate_bps);
        }
    }
    // Published approximate maxima, printed for reference only; the 4.6 GHz
    // figure sits 2.8% under its cap, so a 2% band is not asserted.
    let reported = [0.28e9, 0.95e9, 1.42e9, 1.91e9];
    let below: Vec<String> = caps.iter().zip(reported).map(|(c, r)| format!("{:.1}%", 100.0 * (c - r) / c)).collect();
    outcome(
        exact && within,
        format!(
            "caps {:?} Gb/s, simulated maxima {:?} Mb/s, published maxima below cap by {below:?}",
            caps.iter().map(|c| c / 1e9).collect::<Vec<_>>(),
            maxima.iter().map(|m| mbps(*m)).collect::<Vec<_>>()
        ),
    )
}

fn c4_degeneracy(st: &Studies) -> Outcome {
    let mut n = 0;
    let mut bad = 0;
    for r in st.suburban_free.iter().chain(&st.highrise_free) {
        for row in &r.rows {
            n += 1;
            bad += usize::from(row.ue.sinr.to_bits() != row.ue.snr.to_bits());
        }
    }
    outcome(bad == 0, format!("{n} UE evaluations, {bad} with sinr != snr"))
}

fn c5_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(555);
    let mut failures = Vec::new();
    let mut total = 0;
    for case in 0..100 {
        let n = rng.gen_range(1..=3);
        let rects: Vec<Rect> = (0..n).map(|_| random_rect(&mut rng, 10.0)).collect();
        let material = ["concrete", "glass", "brick", "dry_earth"][rng.gen_range(0..4)];
        let ghz = [4.6, 8.2, 15.0, 28.0][rng.gen_range(0..4)];
        let s = scene_of(&rects, material);
        let tx = Point3::from(random_unit(&mut rng) * 18.0);
        let rx = Point3::from(random_unit(&mut rng) * 18.0);
        let order = rng.gen_range(1..=3);
        let traced = trace_paths(&s, tx, rx, ghz * 1e9, &oracle_limits(order)).unwrap();
        let reference = image_paths(&rects, material, tx, rx, order, ghz);
        total += reference.len();
        if let Err(e) = compare_with_reference(&traced, &reference) {
            failures.push(format!("scene {case}: {e}"));
        }
    }
    outcome(failures.is_empty(), format!("100 micro-scenes, {total} reference paths, mismatches {failures:?}"))
}

fn c6_two_ray() -> Outcome {
    let s = Scene::from_faces(&[ground_face(5000.0, "dry_earth")], MaterialLibrary::default()).unwrap();
    let mut worst = 0.0f64;
    for ghz in [4.6, 8.2, 15.0, 28.0] {
        for d in (50..=500).step_by(5) {
            let d = d as f64;
            let p = trace_paths(&s, Point3::new(0.0, 0.0, 25.0), Point3::new(d, 0.0, 2.0), ghz * 1e9, &TraceLimits::default()).unwrap();
            let err = 10.0 * (coherent_power(&p) / two_ray_power(25.0, 2.0, d, ghz)).log10();
            worst = worst.max(err.abs());
        }
    }
    outcome(worst < 0.5, format!("max |error| {worst:.2e} dB over 50-500 m at 4 bands"))
}

fn c7_reciprocity() -> Outcome {
    let city = twenty_building_city(21);
    let s = build_scene(&city, &Material::dry_earth()).unwrap();
    let limits = TraceLimits { max_reflections: 3, ..TraceLimits::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut failures = Vec::new();
    let mut paths = 0;
    for i in 0..200 {
        let a = street_point(&city, &mut rng, 1.0..60.0);
        let b = street_point(&city, &mut rng, 1.0..60.0);
        let ab = trace_paths(&s, a, b, 15e9, &limits).unwrap();
        let ba = trace_paths(&s, b, a, 15e9, &limits).unwrap();
        paths += ab.len();
        if let Err(e) = reciprocal(&ab, &ba, 1e-9) {
            failures.push(format!("pair {i}: {e}"));
        }
    }
    outcome(failures.is_empty(), format!("200 pairs, {paths} paths, failures {failures:?}"))
}

fn medians(rs: &[RunResult]) -> Vec<f64> {
    rs.iter().map(|r| r.rate_quantile(0.5)).collect()
}

fn p10(rs: &[RunResult]) -> Vec<f64> {
    rs.iter().map(|r| r.rate_quantile(0.1)).collect()
}

fn c8_suburban_order(st: &Studies) -> Outcome {
    let m = medians(&st.suburban_free);
    let ordered = m[3] > m[2] && m[2] > m[1] && m[1] > m[0];
    outcome(ordered, format!("median Mb/s at 4.6/8.2/15/28 GHz: {:?}", m.iter().map(|x| mbps(*x)).collect::<Vec<_>>()))
}

fn c9_cell_edge(st: &Studies) -> Outcome {
    let free = p10(&st.highrise_free);
    let full = p10(&st.highrise_full);
    let ok = |v: &[f64]| v[1] > v[0] && v[1] > v[3];
    outcome(
        ok(&free) && ok(&full),
        format!(
            "10th-percentile Mb/s at 4.6/8.2/15/28 GHz: free {:?}, full {:?}",
            free.iter().map(|x| mbps(*x)).collect::<Vec<_>>(),
            full.iter().map(|x| mbps(*x)).collect::<Vec<_>>()
        ),
    )
}

fn c10_ue_types(st: &Studies) -> Outcome {
    let gaps: Vec<f64> = st
        .highrise_full
        .iter()
        .zip(&st.highrise_full_ped)
        .map(|(v, p)| (v.coverage - p.coverage).abs())
        .collect();
    let small = gaps.iter().all(|g| *g <= 0.05);
    let min = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let fr3 = gaps[1] == min || gaps[2] == min;
    outcome(
        small && fr3,
        format!(
            "coverage gap (pp) at 4.6/8.2/15/28 GHz: {:?}; minimum at an FR3 band: {fr3}",
            gaps.iter().map(|g| format!("{:.2}", g * 100.0)).collect::<Vec<_>>()
        ),
    )
}

fn c11_properties(st: &Studies) -> Outcome {
    let mut notes = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bounded = true;
    for _ in 0..10_000 {
        let m = builtin(BUILTIN_NAMES[rng.gen_range(0..4)]).unwrap();
        let f = rng.gen_range(1e9..100e9);
        let eps = complex_permittivity(&m, f).unwrap();
        let th = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
        let pol = if rng.gen() { Polarization::Te } else { Polarization::Tm };
        let k0 = 2.0 * std::f64::consts::PI * f / C;
        bounded &= fresnel_coeff(eps, th, pol).norm() <= 1.0 + 1e-12;
        bounded &= transmission_coeff(eps, th, pol, rng.gen_range(0.001..1.0), k0).norm() <= 1.0;
    }
    if !bounded {
        notes.push("coefficient above one".to_string());
    }
    let all: Vec<&RunResult> = st.suburban_free.iter().chain(&st.highrise_free).chain(&st.highrise_full).chain(&st.highrise_full_ped).collect();
    for r in &all {
        let c = &r.rate_cdf;
        if !(c.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1) && c.last().unwrap().1 == 1.0) {
            notes.push(format!("cdf not monotone at {} GHz", r.band.ghz()));
        }
        let mut rows: Vec<_> = r.rows.iter().map(|x| (x.ue.sinr, x.ue.rate_bps)).collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if !rows.windows(2).all(|w| w[0].1 <= w[1].1) || rows.iter().any(|x| x.1 > r.band.rate_cap()) {
            notes.push(format!("rate not monotone or above cap at {} GHz", r.band.ghz()));
        }
        let ues: Vec<_> = r.rows.iter().map(|x| x.ue).collect();
        let cov: Vec<f64> = (-20..=40).map(|t| coverage_probability(&ues, db_to_lin(t as f64)).unwrap()).collect();
        if !cov.windows(2).all(|w| w[1] <= w[0]) {
            notes.push("coverage increases with threshold".into());
        }
    }
    for (free, full) in st.highrise_free.iter().zip(&st.highrise_full) {
        for (a, b) in free.rows.iter().zip(&full.rows) {
            if a.seed != b.seed || a.ue.ue_id != b.ue.ue_id || b.ue.rate_bps > a.ue.rate_bps {
                notes.push(format!("full > free for seed {} ue {}", a.seed, a.ue.ue_id));
            }
        }
    }
    let mut cfg = parse_config_str(r#"{"preset": "desk-urban-28GHz-full", "ues": 30, "realizations": 2}"#).unwrap();
    cfg.trace_limits.max_reflections = 2;
    let a = metrics_csv(&run(&cfg).unwrap(), cfg.n_ues).unwrap();
    let b = metrics_csv(&run(&cfg).unwrap(), cfg.n_ues).unwrap();
    if a != b {
        notes.push("rerun differs".into());
    }
    outcome(notes.is_empty(), if notes.is_empty() { "all properties hold".to_string() } else { notes.join("; ") })
}

fn main() {
    let t0 = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "layout algebra", c1_layout()),
        (2, "height distribution", c2_heights()),
        (5, "ray-engine oracle", c5_oracle()),
        (6, "two-ray parity", c6_two_ray()),
        (7, "reciprocity", c7_reciprocity()),
    ];
    let st = prepare_studies();
    results.push((3, "rate caps", c3_caps(&st)));
    results.push((4, "sinr degeneracy", c4_degeneracy(&st)));
    results.push((8, "suburban median ordering", c8_suburban_order(&st)));
    results.push((9, "highrise cell-edge inversion", c9_cell_edge(&st)));
    results.push((10, "pedestrian vs vehicular coverage", c10_ue_types(&st)));
    results.push((11, "properties", c11_properties(&st)));
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, name, o) in &results {
        println!("{} criterion {id:>2} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria passed in {:.0?}", results.len() - failed, results.len(), t0.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
