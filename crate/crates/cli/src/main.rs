//! `citylink` command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use citylink::antenna::{write_pattern_csv, ElementPattern};
use citylink::city::{generate_city, CityLayout};
use citylink::config::{resolve, ConfigFile, Overrides};
use citylink::geom::Point3;
use citylink::output::{write_atomic, write_run_outputs, MANIFEST_FILE};
use citylink::ray::{trace_paths, write_paths_csv};
use citylink::scenario::{load_geometry, run, Interference, RunConfig, UeType};

#[derive(Parser)]
#[command(name = "citylink", version, about = "Ray-traced multi-band urban link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a procedural city layout and write it as JSON.
    GenerateCity {
        #[command(flatten)]
        common: Common,
        /// Output file; defaults to `<out-dir>/layout.json`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Trace the paths between two points in one realization.
    TraceLink {
        #[command(flatten)]
        common: Common,
        /// Transmitter position `x,y,z` in metres.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        tx: Point3,
        /// Receiver position `x,y,z` in metres.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        rx: Point3,
    },
    /// Run a full Monte Carlo study and write metrics, rate CDF and manifest.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Write antenna gain cuts for the configured elements and arrays.
    PatternDump {
        #[command(flatten)]
        common: Common,
        /// Angular step of the cuts in degrees.
        #[arg(long, default_value_t = 1.0)]
        step_deg: f64,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    ues: Option<usize>,
    #[arg(long)]
    max_reflections: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    interference: Option<InterferenceArg>,
    #[arg(long)]
    ue_type: Option<UeTypeArg>,
    /// Carrier in GHz: 4.6, 8.2, 15 or 28.
    #[arg(long)]
    band: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InterferenceArg {
    Free,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum UeTypeArg {
    Vehicular,
    Pedestrian,
}

fn parse_point(s: &str) -> std::result::Result<Point3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("bad coordinate in `{s}`: {e}"))?;
    match v[..] {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Point3::new(x, y, z)),
        _ => Err(format!("expected `x,y,z`, got `{s}`")),
    }
}

impl Common {
    fn resolve(&self) -> Result<(RunConfig, PathBuf)> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => ConfigFile::default(),
        };
        let ov = Overrides {
            preset: self.preset.clone(),
            seed: self.seed,
            realizations: self.realizations,
            ues: self.ues,
            max_reflections: self.max_reflections,
            out_dir: self.out_dir.clone(),
            interference: self.interference.map(|i| match i {
                InterferenceArg::Free => Interference::Free,
                InterferenceArg::Full => Interference::Full,
            }),
            ue_type: self.ue_type.map(|u| match u {
                UeTypeArg::Vehicular => UeType::Vehicular,
                UeTypeArg::Pedestrian => UeType::Pedestrian,
            }),
            band_ghz: self.band,
        };
        let (cfg, out) = resolve(&file, &ov)?;
        Ok((cfg, out.unwrap_or_else(|| PathBuf::from("out"))))
    }
}

fn cmd_generate_city(common: &Common, output: Option<&Path>) -> Result<()> {
    let (cfg, out_dir) = common.resolve()?;
    let mut layout = generate_city(&cfg.itu, cfg.base_seed)?;
    for b in &mut layout.buildings {
        b.material = cfg.building_material.clone();
    }
    for (&i, m) in &cfg.building_materials {
        layout.set_material(i, m)?;
    }
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => {
            fs::create_dir_all(&out_dir)?;
            out_dir.join("layout.json")
        }
    };
    let text = layout.to_json()?;
    write_atomic(&path, text.as_bytes())?;
    if CityLayout::read(&path)? != layout {
        let _ = fs::remove_file(&path);
        bail!("layout written to {} does not read back identically", path.display());
    }
    println!("{}", path.display());
    Ok(())
}

fn cmd_trace_link(common: &Common, tx: Point3, rx: Point3) -> Result<()> {
    let (cfg, _) = common.resolve()?;
    let (_, scene, _) = load_geometry(&cfg, cfg.base_seed)?;
    let paths = trace_paths(&scene, tx, rx, cfg.band.f_hz, &cfg.trace_limits)?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    write_paths_csv(&mut lock, &paths)?;
    lock.flush()?;
    Ok(())
}

fn cmd_run(common: &Common) -> Result<()> {
    let (cfg, out_dir) = common.resolve()?;
    let result = run(&cfg)?;
    let written = write_run_outputs(&out_dir, &cfg, &result)?;
    let check = (|| -> Result<()> {
        let manifest: serde_json::Value =
            serde_json::from_slice(&fs::read(out_dir.join(MANIFEST_FILE))?)?;
        let file: ConfigFile = serde_json::from_value(manifest["config"].clone())?;
        let (again, _) = resolve(&file, &Overrides::default())?;
        if again != cfg {
            bail!("manifest does not reproduce the resolved configuration");
        }
        Ok(())
    })();
    if let Err(e) = check {
        for p in &written {
            let _ = fs::remove_file(p);
        }
        return Err(e);
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_pattern_dump(common: &Common, step_deg: f64) -> Result<()> {
    let (cfg, _) = common.resolve()?;
    if !(step_deg > 0.0 && step_deg <= 90.0) {
        bail!("--step-deg must lie in (0, 90], got {step_deg}");
    }
    let elements = [
        ("bs_element", cfg.bs_element),
        ("pedestrian_element", cfg.pedestrian_element),
        ("isotropic", ElementPattern::isotropic()),
    ];
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    write_pattern_csv(&mut lock, &elements, step_deg)?;
    lock.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::GenerateCity { common, output } => cmd_generate_city(common, output.as_deref()),
        Command::TraceLink { common, tx, rx } => cmd_trace_link(common, *tx, *rx),
        Command::Run { common } => cmd_run(common),
        Command::PatternDump { common, step_deg } => cmd_pattern_dump(common, *step_deg),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
