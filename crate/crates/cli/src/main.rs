use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use loopforge::excursions::{sample_xy_ensemble, write_paths_csv, HWalk};
use loopforge::graph::fixture;
use loopforge::lab::{self, ExperimentConfig, ExperimentKind, NegativeControl, TestReport};
use loopforge::loops::Parity;
use loopforge::seed::replicate;

#[derive(Parser)]
#[command(name = "loopforge", version, about = "Cable-graph free field and loop-soup experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write report.json, report.csv and manifest.json.
    Run {
        experiment: Experiment,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Sample crossing excursions between the marked vertices and write them
    /// to paths.csv in the output directory.
    Paths {
        /// Number of independent ensembles.
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Write a named graph fixture as JSON.
    Fixture {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    TwoPoint,
    Parity,
    Switching,
    Pnew,
    Winding,
    OneEdge,
    Iic,
    Interlacement,
    Calibrate,
}

impl From<Experiment> for ExperimentKind {
    fn from(e: Experiment) -> Self {
        match e {
            Experiment::TwoPoint => ExperimentKind::TwoPoint,
            Experiment::Parity => ExperimentKind::Parity,
            Experiment::Switching => ExperimentKind::Switching,
            Experiment::Pnew => ExperimentKind::Pnew,
            Experiment::Winding => ExperimentKind::Winding,
            Experiment::OneEdge => ExperimentKind::OneEdge,
            Experiment::Iic => ExperimentKind::Iic,
            Experiment::Interlacement => ExperimentKind::Interlacement,
            Experiment::Calibrate => ExperimentKind::Calibrate,
        }
    }
}

#[derive(Args)]
struct RunFlags {
    /// JSON experiment config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fixture name (path4, grid3x3, triangle, square, annulus6, box4, ...) or graph JSON file.
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    mesh: Option<usize>,
    /// Comma-separated probe vertex labels.
    #[arg(long, value_delimiter = ',')]
    probes: Option<Vec<String>>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long, env = "LOOPFORGE_SEED")]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// parity-even, mass-1.2 or c-1.5.
    #[arg(long)]
    negative_control: Option<String>,
    /// Crossing parity for the one-edge comparison (odd or even).
    #[arg(long)]
    parity: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    box_sizes: Option<Vec<usize>>,
    /// Boundary value for the direct conditioning of the iic experiment.
    #[arg(long)]
    pin: Option<f64>,
}

#[derive(Serialize)]
struct RunManifest {
    experiment: String,
    config_path: Option<PathBuf>,
    seed: u64,
    jobs: usize,
    version: &'static str,
    command_line: Vec<String>,
    started: String,
    finished: String,
    outputs: Vec<PathBuf>,
    verdict: String,
    config: ExperimentConfig,
}

fn resolve(kind: ExperimentKind, f: &RunFlags) -> Result<ExperimentConfig, String> {
    let mut c = match &f.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let file: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?;
            let serde_json::Value::Object(file) = file else {
                return Err(format!("{}: expected a JSON object", p.display()));
            };
            let mut merged = serde_json::to_value(ExperimentConfig::for_kind(kind)).map_err(|e| e.to_string())?;
            merged.as_object_mut().expect("config serializes to an object").extend(file);
            let mut c: ExperimentConfig = serde_json::from_value(merged).map_err(|e| format!("{}: {e}", p.display()))?;
            c.kind = kind;
            c
        }
        None => ExperimentConfig::for_kind(kind),
    };
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = &f.$field { c.$field = v.clone(); })* };
    }
    set!(graph, a, b, mesh, probes, replicas, seed, alpha, steps, box_sizes, pin);
    if let Some(x) = &f.x {
        c.x = Some(x.clone());
    }
    if let Some(y) = &f.y {
        c.y = Some(y.clone());
    }
    if let Some(nc) = &f.negative_control {
        c.negative_control = Some(NegativeControl::parse(nc).map_err(|e| e.to_string())?);
    }
    if let Some(p) = &f.parity {
        c.parity = match p.as_str() {
            "odd" => Parity::Odd,
            "even" => Parity::Even,
            other => return Err(format!("parity must be odd or even, got {other}")),
        };
    }
    c.validate().map_err(|e| e.to_string())?;
    c.base_graph().map_err(|e| e.to_string())?;
    Ok(c)
}

fn write_outputs(dir: &Path, report: &TestReport) -> Result<Vec<PathBuf>, String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let json = dir.join("report.json");
    let csv = dir.join("report.csv");
    let text = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
    fs::write(&json, text).map_err(|e| format!("{}: {e}", json.display()))?;
    let file = fs::File::create(&csv).map_err(|e| format!("{}: {e}", csv.display()))?;
    report.write_csv(file).map_err(|e| e.to_string())?;
    Ok(vec![json, csv])
}

fn run(experiment: Experiment, flags: RunFlags) -> Result<bool, String> {
    let cfg = resolve(experiment.into(), &flags)?;
    let jobs = flags.jobs.unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| e.to_string())?;
    let started = Utc::now();
    let report = pool.install(|| lab::run(&cfg)).map_err(|e| e.to_string())?;
    let finished = Utc::now();
    let mut outputs = write_outputs(&flags.out, &report)?;
    let manifest_path = flags.out.join("manifest.json");
    outputs.push(manifest_path.clone());
    let manifest = RunManifest {
        experiment: report.experiment.clone(),
        config_path: flags.config.clone(),
        seed: cfg.seed,
        jobs,
        version: env!("CARGO_PKG_VERSION"),
        command_line: std::env::args().collect(),
        started: started.to_rfc3339_opts(SecondsFormat::Millis, true),
        finished: finished.to_rfc3339_opts(SecondsFormat::Millis, true),
        outputs,
        verdict: report.verdict().as_str().to_string(),
        config: cfg,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())?;
    fs::write(&manifest_path, text).map_err(|e| format!("{}: {e}", manifest_path.display()))?;

    print!("{}", report.summary());
    for f in report.failures() {
        eprintln!("failed: {} (statistic {:.6e}, {})", f.functional, f.statistic, f.rule);
    }
    Ok(report.passed())
}

fn paths(count: usize, flags: RunFlags) -> Result<bool, String> {
    let cfg = resolve(ExperimentKind::Switching, &flags)?;
    let (base, g) = cfg.graph().map_err(|e| e.to_string())?;
    let (x, y) = cfg.marks(&base).map_err(|e| e.to_string())?;
    let walk = HWalk::new(&g, x, y, &[]).map_err(|e| e.to_string())?;
    let ensembles = replicate(count, cfg.seed, "paths", |_, rng| sample_xy_ensemble(&g, &walk, cfg.a, cfg.b, cfg.parity, rng))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let all: Vec<_> = ensembles.into_iter().flat_map(|e| e.paths).collect();
    fs::create_dir_all(&flags.out).map_err(|e| format!("{}: {e}", flags.out.display()))?;
    let path = flags.out.join("paths.csv");
    let file = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    write_paths_csv(&g, &all, file).map_err(|e| e.to_string())?;
    println!("{} excursions from {} ensembles written to {}", all.len(), count, path.display());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { experiment, flags } => run(experiment, flags),
        Command::Paths { count, flags } => paths(count, flags),
        Command::Fixture { name, out } => fixture(&name)
            .map_err(|e| e.to_string())
            .and_then(|g| serde_json::to_string_pretty(&g.to_spec()).map_err(|e| e.to_string()))
            .and_then(|text| match out {
                Some(p) => fs::write(&p, text).map_err(|e| format!("{}: {e}", p.display())),
                None => {
                    println!("{text}");
                    Ok(())
                }
            })
            .map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
