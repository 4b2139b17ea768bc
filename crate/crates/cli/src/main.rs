use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use jamguard::calibration::save_curve;
use jamguard::harness::config::{read_json, set_path, SEED_ENV};
use jamguard::harness::experiment::{calibrate, grid_points, GridAxis};
use jamguard::harness::metrics::compute_report;
use jamguard::harness::output::{parse_epochs_csv, report_json};
use jamguard::harness::{emit_report, resolve_seed, run_experiment, Formats, ScenarioConfig};
use rayon::prelude::*;
use serde_json::Value;

/// Simulate IR-UWB ranging links under jamming and evaluate the
/// distance-adaptive PDR detector.
///
/// Seed precedence: --seed, then the scenario's "seed" key, then the
/// JAMGUARD_SEED environment variable, then 0.
#[derive(Parser)]
#[command(name = "jamguard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the attack-free sweep and write curve.csv + curve.json.
    Calibrate(RunArgs),
    /// Run one scenario and write epochs.csv, attempts.csv, jammers.csv,
    /// report.json (and curve.csv when the scenario sweeps inline).
    Run(RunArgs),
    /// Run a scenario once per point of a parameter grid, one subdirectory
    /// per point, with an index in points.csv.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Grid axis as `dotted.config.path=v1,v2,...`; repeatable.
        #[arg(long = "param", required = true)]
        params: Vec<String>,
    },
    /// Recompute report.json from an existing epochs.csv.
    Report {
        /// Directory holding epochs.csv.
        #[arg(long)]
        input: PathBuf,
        /// Where to write report.json [default: the input directory].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// RNG seed; overrides the scenario file and JAMGUARD_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated output formats: csv, json.
    #[arg(long, default_value = "csv,json")]
    format: String,
}

impl RunArgs {
    fn formats(&self) -> Result<Formats> {
        Ok(self.format.parse()?)
    }
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

fn load(doc: &Value, config_path: &Path, cli_seed: Option<u64>) -> Result<(ScenarioConfig, u64)> {
    let base = config_path.parent().unwrap_or(Path::new("."));
    let config = ScenarioConfig::from_value(doc, base)
        .with_context(|| format!("loading {}", config_path.display()))?;
    let seed = resolve_seed(cli_seed, config.seed, env_seed().as_deref())?;
    Ok((config, seed))
}

fn cmd_calibrate(args: &RunArgs) -> Result<()> {
    let doc = read_json(&args.config)?;
    let (config, seed) = load(&doc, &args.config, args.seed)?;
    let curve = calibrate(&config, seed)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join("curve.csv");
    save_curve(&curve, &config.link_params, &path)?;
    println!("wrote {} ({} knots, seed {seed})", path.display(), curve.knots().len());
    Ok(())
}

fn run_one(doc: &Value, config_path: &Path, cli_seed: Option<u64>, out: &Path, formats: Formats) -> Result<String> {
    let (config, seed) = load(doc, config_path, cli_seed)?;
    let result = run_experiment(&config, seed)?;
    let swept = result.swept.then_some((&result.curve, &config.link_params));
    emit_report(&result.trace, &result.report, swept, out, formats)?;
    let g = &result.report.global;
    let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    Ok(format!(
        "{}: seed {seed}, {} epochs, FPR {}, TPR {}, detections {}",
        out.display(),
        g.epochs_total,
        show(g.fpr),
        show(g.tpr),
        g.detections
    ))
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let doc = read_json(&args.config)?;
    println!("{}", run_one(&doc, &args.config, args.seed, &args.out, args.formats()?)?);
    Ok(())
}

fn cmd_sweep(args: &RunArgs, params: &[String]) -> Result<()> {
    let formats = args.formats()?;
    let axes = params.iter().map(|p| p.parse::<GridAxis>()).collect::<Result<Vec<_>, _>>()?;
    let mut base = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        set_path(&mut base, "seed", Value::from(seed))?;
    }
    let points = grid_points(&axes);
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let results: Vec<Result<String>> = points
        .par_iter()
        .enumerate()
        .map(|(i, point)| {
            let mut doc = base.clone();
            for (path, value) in point {
                set_path(&mut doc, path, value.clone())?;
            }
            run_one(&doc, &args.config, None, &args.out.join(point_dir(i)), formats)
        })
        .collect();

    let mut index = format!("point,dir,{}\n", axes.iter().map(|a| a.path.as_str()).collect::<Vec<_>>().join(","));
    for (i, point) in points.iter().enumerate() {
        let values: Vec<String> = point.iter().map(|(_, v)| v.to_string().replace(',', ";")).collect();
        index.push_str(&format!("{i},{},{}\n", point_dir(i), values.join(",")));
    }
    let index_path = args.out.join("points.csv");
    fs::write(&index_path, index).with_context(|| format!("writing {}", index_path.display()))?;

    let mut failed = 0;
    for r in results {
        match r {
            Ok(line) => println!("{line}"),
            Err(e) => {
                failed += 1;
                eprintln!("error: {e:#}");
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} sweep points failed", points.len());
    }
    Ok(())
}

fn point_dir(i: usize) -> String {
    format!("point-{i:03}")
}

fn cmd_report(input: &Path, out: Option<&Path>) -> Result<()> {
    let epochs = input.join("epochs.csv");
    let text = fs::read_to_string(&epochs).with_context(|| format!("reading {}", epochs.display()))?;
    let rows = parse_epochs_csv(&text).with_context(|| format!("parsing {}", epochs.display()))?;
    let report = compute_report(&rows);
    let out = out.unwrap_or(input);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("report.json");
    fs::write(&path, report_json(&report)).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep { run, params } => cmd_sweep(run, params),
        Command::Report { input, out } => cmd_report(input, out.as_deref()),
    }
}
