//! Result files: per-UE metrics, rate CDF, coverage summary and the run
//! manifest. Files are written to a temporary name and renamed into place;
//! if any file fails, the ones already written by the same call are removed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ConfigFile;
use crate::error::Result;
use crate::metrics::lin_to_db;
use crate::scenario::{RunConfig, RunResult};

pub const METRICS_FILE: &str = "metrics.csv";
pub const RATE_CDF_FILE: &str = "rate_cdf.csv";
pub const COVERAGE_FILE: &str = "coverage_summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `bytes` to `path` through a sibling temporary file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    let res = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub config: ConfigFile,
    pub realization_seeds: Vec<u64>,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            config: ConfigFile::from_resolved(cfg),
            realization_seeds: cfg.realization_seeds(),
            notes: vec![
                "site grid is clipped to the network square (no wrap-around)".into(),
                format!(
                    "ue_id in {METRICS_FILE} is realization * ues + per-realization index"
                ),
                "snr_db and sinr_db are -inf for UEs with no path to any sector".into(),
            ],
        }
    }
}

pub fn metrics_csv(result: &RunResult, ues_per_realization: usize) -> Result<Vec<u8>> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record([
        "ue_id",
        "x",
        "y",
        "serving_bs",
        "snr_db",
        "sinr_db",
        "rate_mbps",
        "covered",
    ])?;
    for r in &result.rows {
        let u = &r.ue;
        wr.write_record([
            (r.realization * ues_per_realization + u.ue_id).to_string(),
            format!("{:.3}", u.x_m),
            format!("{:.3}", u.y_m),
            u.serving_bs.map_or(String::new(), |b| b.to_string()),
            format!("{:.4}", lin_to_db(u.snr)),
            format!("{:.4}", lin_to_db(u.sinr)),
            format!("{:.6}", u.rate_bps / 1e6),
            u.covered.to_string(),
        ])?;
    }
    Ok(wr.into_inner().map_err(|e| e.into_error())?)
}

pub fn rate_cdf_csv(result: &RunResult) -> Result<Vec<u8>> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["rate_mbps", "cdf"])?;
    for (v, p) in &result.rate_cdf {
        wr.write_record([format!("{:.6}", v / 1e6), format!("{p}")])?;
    }
    Ok(wr.into_inner().map_err(|e| e.into_error())?)
}

pub fn coverage_csv(results: &[&RunResult]) -> Result<Vec<u8>> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["band", "ue_type", "coverage_fraction"])?;
    for r in results {
        wr.write_record([
            format!("{}", r.band.ghz()),
            r.ue_type.name().to_string(),
            format!("{}", r.coverage),
        ])?;
    }
    Ok(wr.into_inner().map_err(|e| e.into_error())?)
}

/// Writes all run outputs into `dir`, returning the written paths.
pub fn write_run_outputs(dir: &Path, cfg: &RunConfig, result: &RunResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let manifest = serde_json::to_vec_pretty(&Manifest::new(cfg))?;
    let files: Vec<(&str, Vec<u8>)> = vec![
        (METRICS_FILE, metrics_csv(result, cfg.n_ues)?),
        (RATE_CDF_FILE, rate_cdf_csv(result)?),
        (COVERAGE_FILE, coverage_csv(&[result])?),
        (MANIFEST_FILE, manifest),
    ];
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = write_atomic(&path, &bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}
