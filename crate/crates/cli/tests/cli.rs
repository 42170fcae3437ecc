use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn citylink(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_citylink"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn citylink")
}

#[test]
fn unsupported_band_lists_supported_ones() {
    let dir = tempfile::tempdir().unwrap();
    let out = citylink(&["run", "--band", "10"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("4.6, 8.2, 15, 28"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn invalid_config_value_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"bandwidth_mhz": -1}"#).unwrap();
    let out = citylink(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bandwidth_mhz"));
}

#[test]
fn generate_city_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = citylink(&["generate-city", "--preset", "urban", "--seed", "3", "--out-dir", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("o/layout.json");
    let text = fs::read_to_string(&path).unwrap();
    let layout = citylink::city::CityLayout::from_json(&text).unwrap();
    let fresh = citylink::city::generate_city(&citylink::city::ItuParams::URBAN, 3).unwrap();
    assert_eq!(layout, fresh);
    assert_eq!(layout.to_json().unwrap(), text);
}

#[test]
fn run_writes_outputs_and_manifest_reparses() {
    let dir = tempfile::tempdir().unwrap();
    let out = citylink(
        &[
            "run", "--preset", "suburban-28GHz-free", "--seed", "7", "--realizations", "1", "--ues", "10",
            "--max-reflections", "1", "--out-dir", "res",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    for f in ["metrics.csv", "rate_cdf.csv", "coverage_summary.csv", "manifest.json"] {
        assert!(res.join(f).is_file(), "{f} missing");
    }
    let metrics = fs::read_to_string(res.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 11);
    assert!(metrics.starts_with("ue_id,x,y,serving_bs,snr_db,sinr_db,rate_mbps,covered"));

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(res.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["realization_seeds"], serde_json::json!([7]));
    let cfg_path = dir.path().join("again.json");
    fs::write(&cfg_path, manifest["config"].to_string()).unwrap();
    let resolved = citylink::config::parse_config(&cfg_path).unwrap();
    assert_eq!(resolved.base_seed, 7);
    assert_eq!(resolved.band.f_hz, 28e9);
    assert_eq!(resolved.trace_limits.max_reflections, 1);
}

#[test]
fn pattern_dump_and_trace_link() {
    let dir = tempfile::tempdir().unwrap();
    let out = citylink(&["pattern-dump", "--step-deg", "5"], dir.path());
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("pattern,cut,angle_deg,gain_dbi"));
    assert!(csv.contains("bs_array_28GHz_9x9"));
    assert!(csv.lines().any(|l| l == "bs_element,azimuth,0,30.000000"));

    let out = citylink(
        &["trace-link", "--preset", "desk-suburban", "--max-reflections", "1", "--tx", "0,0,30", "--rx", "40,30,2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.lines().count() >= 2);

    let out = citylink(&["trace-link", "--tx", "0,0", "--rx", "1,1,1"], dir.path());
    assert!(!out.status.success());
}
