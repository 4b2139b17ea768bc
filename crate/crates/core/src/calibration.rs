//! Attack-free calibration sweep and the distance-dependent PDR threshold.
//!
//! The sweep measures delivery ratio on a distance grid with no jammer
//! present. Each measured point becomes a knot `thr = pdr_hat - z * sigma`,
//! where `sigma` is the binomial standard error of a PDR measured over
//! `n_runtime` packets, the window the detector later decides on. Knots are
//! forced non-increasing in distance and joined piecewise-linearly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::link::{transmit_packet, LinkParams, PacketOutcome};
use crate::rng::StreamKey;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    pub d: f64,
    pub pdr_hat: f64,
    pub n_packets: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginPolicy {
    /// Standard errors subtracted from the calibrated PDR.
    pub z: f64,
    /// Packets per runtime decision window.
    pub n_runtime: u64,
}

impl Default for MarginPolicy {
    fn default() -> Self {
        MarginPolicy { z: 4.0, n_runtime: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub d_min: f64,
    pub d_max: f64,
    pub step: f64,
    pub n_packets: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            d_min: 1.0,
            d_max: 30.0,
            step: 1.0,
            n_packets: 10_000,
        }
    }
}

impl SweepSpec {
    /// Grid distances `d_min, d_min + step, ...` up to `d_max`.
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.d_min >= 0.0 && self.d_min < self.d_max && self.d_max.is_finite()) {
            return Err(Error::Config(format!(
                "calibration sweep needs 0 <= d_min < d_max, got [{}, {}]",
                self.d_min, self.d_max
            )));
        }
        if self.step.is_nan() || self.step <= 0.0 {
            return Err(Error::Config(format!("calibration step must be positive, got {}", self.step)));
        }
        if self.n_packets == 0 {
            return Err(Error::Config("calibration needs n_packets >= 1".into()));
        }
        let tol = self.step * 1e-9;
        let grid: Vec<f64> = (0u64..)
            .map(|i| self.d_min + i as f64 * self.step)
            .take_while(|d| *d <= self.d_max + tol)
            .collect();
        if grid.is_empty() {
            return Err(Error::Config("calibration grid has no points".into()));
        }
        Ok(grid)
    }
}

/// Measures attack-free delivery ratios over the sweep grid.
pub fn run_sweep(link: &LinkParams, sweep: &SweepSpec, seed: u64) -> Result<Vec<CalibrationSample>> {
    link.validate()?;
    let grid = sweep.grid()?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let key = StreamKey::derive(seed, &format!("calibration/{i}"));
            let delivered = (0..sweep.n_packets)
                .filter(|&k| {
                    let mut rng = key.stream(k);
                    transmit_packet(0.0, 0, d, &[], link, &mut rng).outcome == PacketOutcome::Delivered
                })
                .count() as u64;
            CalibrationSample {
                d,
                pdr_hat: delivered as f64 / sweep.n_packets as f64,
                n_packets: sweep.n_packets,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub d: f64,
    pub thr: f64,
}

/// Piecewise-linear, non-increasing PDR threshold over distance.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCurve {
    knots: Vec<Knot>,
    d_max: f64,
    margin: MarginPolicy,
}

/// The margin applied to one calibrated delivery ratio, before clamping.
pub fn margin_threshold(pdr_hat: f64, margin: &MarginPolicy) -> f64 {
    pdr_hat - margin.z * (pdr_hat * (1.0 - pdr_hat) / margin.n_runtime as f64).sqrt()
}

/// Turns calibration samples into a threshold curve.
pub fn build_threshold_curve(
    samples: &[CalibrationSample],
    margin: MarginPolicy,
    d_max: f64,
) -> Result<ThresholdCurve> {
    if samples.len() < 2 {
        return Err(Error::Config(format!(
            "threshold curve needs at least 2 calibration samples, got {}",
            samples.len()
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.d.total_cmp(&b.d));
    if margin.n_runtime == 0 || margin.z.is_nan() || margin.z < 0.0 {
        return Err(Error::Config("margin policy needs z >= 0 and n_runtime >= 1".into()));
    }
    let mut floor = f64::INFINITY;
    let knots = sorted
        .iter()
        .map(|s| {
            // running minimum keeps the curve non-increasing in d
            floor = floor.min(margin_threshold(s.pdr_hat, &margin).clamp(0.0, 1.0));
            Knot { d: s.d, thr: floor }
        })
        .collect();
    ThresholdCurve::from_knots(knots, d_max, margin)
}

impl ThresholdCurve {
    pub fn from_knots(knots: Vec<Knot>, d_max: f64, margin: MarginPolicy) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Config("threshold curve needs at least 2 knots".into()));
        }
        if knots.iter().any(|k| !k.d.is_finite() || k.d < 0.0 || !(0.0..=1.0).contains(&k.thr)) {
            return Err(Error::Config("knots need finite d >= 0 and thr in [0, 1]".into()));
        }
        if knots.windows(2).any(|w| w[1].d <= w[0].d) {
            return Err(Error::Config("knot distances must be strictly increasing".into()));
        }
        if knots.windows(2).any(|w| w[1].thr > w[0].thr) {
            return Err(Error::Config("knot thresholds must be non-increasing in distance".into()));
        }
        if !(d_max > 0.0 && d_max.is_finite()) {
            return Err(Error::Config(format!("d_max must be positive, got {d_max}")));
        }
        Ok(ThresholdCurve { knots, d_max, margin })
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn margin(&self) -> MarginPolicy {
        self.margin
    }

    /// Threshold at distance `d`: knot values at knots, linear in between,
    /// held constant below the first knot and continued along the last
    /// segment's slope beyond the last one (clamped to `[0, 1]`).
    pub fn threshold_at(&self, d: f64) -> f64 {
        let k = &self.knots;
        let first = k[0];
        if d <= first.d {
            return first.thr;
        }
        let idx = k.partition_point(|kn| kn.d < d);
        if idx < k.len() {
            let (a, b) = (k[idx - 1], k[idx]);
            if d == b.d {
                return b.thr;
            }
            return a.thr + (b.thr - a.thr) * (d - a.d) / (b.d - a.d);
        }
        let (a, b) = (k[k.len() - 2], k[k.len() - 1]);
        let slope = (b.thr - a.thr) / (b.d - a.d);
        (b.thr + (d - b.d) * slope).clamp(0.0, 1.0)
    }
}

/// Sidecar metadata stored next to a curve CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub d_max: f64,
    pub z: f64,
    pub n_runtime: u64,
    pub link_fingerprint: String,
}

/// Stable digest of the channel parameters a curve was calibrated on.
pub fn link_fingerprint(p: &LinkParams) -> String {
    let canonical = serde_json::to_string(p).expect("link params serialize");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Path of the metadata sidecar belonging to a curve CSV.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn curve_to_csv(curve: &ThresholdCurve) -> String {
    let mut out = String::from("d_m,pdr_thr\n");
    for k in &curve.knots {
        // Display for f64 prints the shortest string that parses back exactly
        out.push_str(&format!("{},{}\n", k.d, k.thr));
    }
    out
}

pub fn curve_from_csv(text: &str, meta: &CurveMeta) -> Result<ThresholdCurve> {
    let mut lines = text.lines();
    if lines.next() != Some("d_m,pdr_thr") {
        return Err(Error::Config("curve CSV must start with header `d_m,pdr_thr`".into()));
    }
    let knots = lines
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, line)| {
            let (d, thr) = line
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("curve row {}: expected two fields", i + 1)))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Config(format!("curve row {}: `{s}`: {e}", i + 1)))
            };
            Ok(Knot { d: parse(d)?, thr: parse(thr)? })
        })
        .collect::<Result<Vec<_>>>()?;
    ThresholdCurve::from_knots(
        knots,
        meta.d_max,
        MarginPolicy {
            z: meta.z,
            n_runtime: meta.n_runtime,
        },
    )
}

/// Writes `curve` as CSV plus its JSON sidecar.
pub fn save_curve(curve: &ThresholdCurve, link: &LinkParams, csv_path: &Path) -> Result<()> {
    fs::write(csv_path, curve_to_csv(curve)).map_err(|e| Error::io(csv_path, e))?;
    let meta = CurveMeta {
        d_max: curve.d_max,
        z: curve.margin.z,
        n_runtime: curve.margin.n_runtime,
        link_fingerprint: link_fingerprint(link),
    };
    let side = sidecar_path(csv_path);
    let json = serde_json::to_string_pretty(&meta).expect("curve meta serializes") + "\n";
    fs::write(&side, json).map_err(|e| Error::io(&side, e))
}

pub fn load_curve(csv_path: &Path) -> Result<(ThresholdCurve, CurveMeta)> {
    let side = sidecar_path(csv_path);
    let meta_text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: CurveMeta = serde_json::from_str(&meta_text).map_err(|e| Error::parse(&side, e))?;
    let text = fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let curve = curve_from_csv(&text, &meta).map_err(|e| Error::parse(csv_path, e))?;
    Ok((curve, meta))
}
