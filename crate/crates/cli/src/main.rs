//! `fillscape` command-line front end.
//!
//! Exit codes: 0 pass (or plain success), 2 usage or parse error, 3 solver
//! failure, 4 experiment fail, 5 experiment inconclusive.

mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{builder::PossibleValuesParser, Parser, Subcommand};
use sha2::{Digest, Sha256};

use fillscape::experiments::{run_experiment, ExperimentReport, Verdict, EXPERIMENTS};
use fillscape::metricfield::{boundary_distance_table, DistanceOptions, MetricField};
use fillscape::normspace::{density_report, DensityDef, Norm};
use fillscape::Error;

const USAGE: u8 = 2;
const SOLVER: u8 = 3;
const FAIL: u8 = 4;
const INCONCLUSIVE: u8 = 5;

fn experiment_help() -> String {
    let mut s = String::from("Registered experiments:\n");
    for (name, about) in EXPERIMENTS {
        s.push_str(&format!("  {name:<20} {about}\n"));
    }
    s.push_str("\nThe config file holds a JSON object; missing keys take their defaults and unknown keys are rejected.");
    s
}

#[derive(Parser)]
#[command(name = "fillscape", version, about = "Filling volumes, Finsler densities and boundary distance tables")]
#[command(after_help = "Environment: FILLSCAPE_THREADS caps the worker threads.\nExit codes: 0 pass, 2 usage/parse, 3 solver, 4 fail, 5 inconclusive.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Volume density of a norm given as JSON.
    Density {
        /// Norm file, e.g. {"dim": 2, "kind": "polytope", "facets": [[1, 0], [0, 1]]}.
        norm: PathBuf,
        #[arg(long = "def", default_value = "loewner", value_parser = PossibleValuesParser::new(["busemann", "holmes_thompson", "loewner", "benson"]))]
        def: String,
    },
    /// Boundary distance table of a metric field as CSV.
    Bdtable {
        /// Field file as written by `fillscape field`.
        field: PathBuf,
        /// Number of boundary nodes (at least 8).
        #[arg(long, default_value_t = 32)]
        p: usize,
        /// Endpoint tolerance of the shooting solver.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes the JSON of a standard metric field.
    Field {
        #[arg(value_parser = PossibleValuesParser::new(["euclidean", "hyperbolic", "hemisphere"]))]
        kind: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Chart radius; ignored for the hemisphere.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Size of a seeded band-limited perturbation.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Runs a registered experiment and writes its run directory.
    #[command(after_help = experiment_help())]
    Experiment {
        #[arg(value_parser = PossibleValuesParser::new(EXPERIMENTS.iter().map(|e| e.0)))]
        name: String,
        /// JSON config; defaults when absent.
        config: Option<PathBuf>,
        /// Overrides the seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Parent of the run directory.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Print the effective default config and exit.
        #[arg(long)]
        print_defaults: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        if e.is_solver() {
            Failure::Solver(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Usage(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Hex SHA-256 of the config with keys sorted at every level.
fn config_hash(config: &serde_json::Value) -> String {
    // serde_json maps are ordered by key, so serialization is canonical
    let canonical = serde_json::to_string(config).expect("json value serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn density(norm: &Path, def: &str) -> Result<u8, Failure> {
    let norm = Norm::from_json_str(&read(norm)?)?;
    let def: DensityDef = def.parse()?;
    let report = density_report(&norm, def)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    Ok(0)
}

fn bdtable(field: &Path, p: usize, tol: f64, out: Option<&Path>) -> Result<u8, Failure> {
    let field = MetricField::from_json_str(&read(field)?)?;
    if p < 8 {
        return Err(Failure::Usage(format!("p must be at least 8, got {p}")));
    }
    let opts = DistanceOptions { tol, ..DistanceOptions::default() };
    let table = boundary_distance_table(&field, p, opts)?;
    match out {
        Some(path) => std::fs::write(path, table.to_csv())?,
        None => print!("{}", table.to_csv()),
    }
    Ok(0)
}

fn field(kind: &str, dim: usize, radius: f64, eps: f64, seed: u64) -> Result<u8, Failure> {
    let base = match kind {
        "euclidean" => MetricField::euclidean(dim, radius)?,
        "hyperbolic" => MetricField::hyperbolic(dim, radius)?,
        _ => MetricField::sphere_cap(dim, std::f64::consts::FRAC_PI_2)?,
    };
    let f = base.perturbed(eps, seed)?;
    println!("{}", serde_json::to_string(&f.to_json()?).map_err(Error::from)?);
    Ok(0)
}

/// Writes `report.json`, `metrics.csv` and `plot.svg`; returns the run directory.
fn write_run(report: &mut ExperimentReport, parent: &Path) -> Result<PathBuf, Failure> {
    let hash = config_hash(&report.config);
    let dir = parent.join(format!("{}-{}-{}", report.name, report.seed, &hash[..16]));
    std::fs::create_dir_all(&dir)?;
    let files = ["report.json", "metrics.csv", "plot.svg"];
    report.artifacts = files.iter().map(|f| dir.join(f).display().to_string()).collect();
    std::fs::write(dir.join("metrics.csv"), report.metrics_csv())?;
    std::fs::write(dir.join("plot.svg"), svg::plot(&report.name, &report.series))?;
    let json = serde_json::to_string_pretty(report).map_err(Error::from)?;
    std::fs::write(dir.join("report.json"), json + "\n")?;
    Ok(dir)
}

fn experiment(name: &str, config: Option<&Path>, seed: Option<u64>, out: &Path, defaults: bool) -> Result<u8, Failure> {
    if defaults {
        let cfg = fillscape::experiments::default_config(name)?;
        println!("{}", serde_json::to_string_pretty(&cfg).map_err(Error::from)?);
        return Ok(0);
    }
    let mut cfg = match config {
        Some(path) => serde_json::from_str::<serde_json::Value>(&read(path)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => serde_json::json!({}),
    };
    if let Some(seed) = seed {
        match cfg.as_object_mut() {
            Some(map) => {
                map.insert("seed".into(), seed.into());
            }
            None => return Err(Failure::Usage("config must be a JSON object".into())),
        }
    }
    let mut report = run_experiment(name, &cfg)?;
    let dir = write_run(&mut report, out)?;
    println!("{}", dir.display());
    eprintln!("{name}: {:?}", report.verdict);
    Ok(match report.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => FAIL,
        Verdict::Inconclusive => INCONCLUSIVE,
    })
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("FILLSCAPE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("FILLSCAPE_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Density { norm, def } => density(norm, def),
        Command::Bdtable { field: f, p, tol, out } => bdtable(f, *p, *tol, out.as_deref()),
        Command::Field { kind, dim, radius, eps, seed } => field(kind, *dim, *radius, *eps, *seed),
        Command::Experiment { name, config, seed, out, print_defaults } => {
            experiment(name, config.as_deref(), *seed, out, *print_defaults)
        }
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(SOLVER)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::config_hash;

    #[test]
    fn hash_ignores_key_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"b": 1, "a": {"y": 2.5, "x": [1, 2]}}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"a": {"x": [1, 2], "y": 2.5}, "b": 1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        let c: serde_json::Value = serde_json::from_str(r#"{"a": {"x": [2, 1], "y": 2.5}, "b": 1}"#).unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
    }
}
