//! Calibrate-then-run orchestration and parameter grids.

use serde_json::Value;

use crate::calibration::{build_threshold_curve, link_fingerprint, load_curve, run_sweep, ThresholdCurve};
use crate::error::{Error, Result};
use crate::harness::config::{CurveSource, ScenarioConfig};
use crate::harness::metrics::{compute_report, rows_from_trace, MetricsReport};
use crate::sim::{run_scenario, SimTrace};

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub seed: u64,
    pub curve: ThresholdCurve,
    /// The curve came from an inline sweep rather than a file.
    pub swept: bool,
    pub trace: SimTrace,
    pub report: MetricsReport,
}

/// Calibrates a fresh curve from the config's sweep settings (a default
/// sweep when the config points at a curve file).
pub fn calibrate(config: &ScenarioConfig, seed: u64) -> Result<ThresholdCurve> {
    let sweep = match &config.detector.curve {
        CurveSource::Sweep(s) => *s,
        CurveSource::File(_) => Default::default(),
    };
    let samples = run_sweep(&config.link_params, &sweep, seed)?;
    build_threshold_curve(&samples, config.detector.margin, config.link_params.d_max)
}

/// The curve the detector should use, and whether a sweep produced it.
pub fn obtain_curve(config: &ScenarioConfig, seed: u64) -> Result<(ThresholdCurve, bool)> {
    match &config.detector.curve {
        CurveSource::Sweep(_) => Ok((calibrate(config, seed)?, true)),
        CurveSource::File(path) => {
            let (curve, meta) = load_curve(path)?;
            let expected = link_fingerprint(&config.link_params);
            if meta.link_fingerprint != expected {
                return Err(Error::Config(format!(
                    "{}: curve was calibrated for link fingerprint {}, scenario has {expected}",
                    path.display(),
                    meta.link_fingerprint
                )));
            }
            Ok((curve, false))
        }
    }
}

pub fn run_experiment(config: &ScenarioConfig, seed: u64) -> Result<ExperimentOutput> {
    let (curve, swept) = obtain_curve(config, seed)?;
    let trace = run_scenario(config, &curve, seed)?;
    let report = compute_report(&rows_from_trace(&trace));
    Ok(ExperimentOutput {
        seed,
        curve,
        swept,
        trace,
        report,
    })
}

/// One swept parameter: a dotted config path and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub path: String,
    pub values: Vec<Value>,
}

impl std::str::FromStr for GridAxis {
    type Err = Error;

    /// Parses `path=v1,v2,...`; each value is read as JSON, falling back to
    /// a plain string.
    fn from_str(s: &str) -> Result<Self> {
        let (path, values) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("grid parameter `{s}` must look like path=v1,v2")))?;
        let values: Vec<Value> = values
            .split(',')
            .filter(|v| !v.is_empty())
            .map(|v| serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string())))
            .collect();
        if path.is_empty() || values.is_empty() {
            return Err(Error::Config(format!("grid parameter `{s}` has no path or no values")));
        }
        Ok(GridAxis {
            path: path.to_string(),
            values,
        })
    }
}

/// Cartesian product of the axes; the last axis varies fastest.
pub fn grid_points(axes: &[GridAxis]) -> Vec<Vec<(String, Value)>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut point = prefix.clone();
                    point.push((axis.path.clone(), v.clone()));
                    point
                })
            })
            .collect()
    })
}
