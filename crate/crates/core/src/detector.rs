//! Distance-adaptive jamming decision.
//!
//! A window whose delivery ratio falls below the calibrated threshold for the
//! current distance is declared jammed, but only while the nodes are inside
//! the maximal operational distance. Beyond it a low PDR is attributed to
//! the weak link and the verdict is "no jamming".

use serde::{Deserialize, Serialize};

use crate::calibration::ThresholdCurve;
use crate::stats::WindowStats;

/// Minimum sent packets per window for a binary verdict.
pub const DEFAULT_N_MIN: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Jamming,
    NoJamming,
    /// Not enough packets in the window to decide.
    Insufficient,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Jamming => "Jamming",
            Verdict::NoJamming => "NoJamming",
            Verdict::Insufficient => "Insufficient",
        }
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Jamming" => Ok(Verdict::Jamming),
            "NoJamming" => Ok(Verdict::NoJamming),
            "Insufficient" => Ok(Verdict::Insufficient),
            other => Err(format!("unknown verdict `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictRecord {
    pub epoch_index: u64,
    pub link: usize,
    pub d_used: f64,
    /// `d_used` is a carried-over distance, not one measured this epoch.
    pub d_stale: bool,
    pub pdr_used: Option<f64>,
    pub thr: f64,
    pub verdict: Verdict,
    /// Ground truth: a jammer was active and hit at least one packet.
    pub truth: bool,
    pub n_samples: u64,
}

/// Binary decision for a measured `pdr` at distance `d`.
///
/// Both comparisons are strict: a PDR equal to the threshold, or a distance
/// equal to `d_max`, is not jamming.
pub fn decide(pdr: f64, d: f64, curve: &ThresholdCurve) -> Verdict {
    if d < curve.d_max() && pdr < curve.threshold_at(d) {
        Verdict::Jamming
    } else {
        Verdict::NoJamming
    }
}

/// Evaluates one finalized window.
pub fn step(
    w: &WindowStats,
    link: usize,
    d: f64,
    d_stale: bool,
    curve: &ThresholdCurve,
    truth: bool,
    n_min: u64,
) -> VerdictRecord {
    let pdr = w.pdr();
    let verdict = match pdr {
        Some(pdr) if w.sent >= n_min => decide(pdr, d, curve),
        _ => Verdict::Insufficient,
    };
    VerdictRecord {
        epoch_index: w.epoch_index,
        link,
        d_used: d,
        d_stale,
        pdr_used: pdr,
        thr: curve.threshold_at(d),
        verdict,
        truth,
        n_samples: w.sent,
    }
}

/// Invoked for every `Jamming` verdict.
pub trait Countermeasure: Send {
    fn on_jamming(&mut self, record: &VerdictRecord);
}

/// Countermeasure that does nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoCountermeasure;

impl Countermeasure for NoCountermeasure {
    fn on_jamming(&mut self, _record: &VerdictRecord) {}
}

/// Per-link detector: one verdict per epoch, handed to a countermeasure hook
/// when jamming is declared.
pub struct Detector<C = NoCountermeasure> {
    link: usize,
    n_min: u64,
    last_epoch: Option<u64>,
    hook: C,
}

impl Detector<NoCountermeasure> {
    pub fn new(link: usize, n_min: u64) -> Self {
        Detector::with_hook(link, n_min, NoCountermeasure)
    }
}

impl<C: Countermeasure> Detector<C> {
    pub fn with_hook(link: usize, n_min: u64, hook: C) -> Self {
        Detector {
            link,
            n_min,
            last_epoch: None,
            hook,
        }
    }

    /// Decides on `w`. Each epoch may be decided at most once, in order.
    pub fn step(
        &mut self,
        w: &WindowStats,
        d: f64,
        d_stale: bool,
        curve: &ThresholdCurve,
        truth: bool,
    ) -> crate::Result<VerdictRecord> {
        if self.last_epoch.is_some_and(|e| w.epoch_index <= e) {
            return Err(crate::Error::Contract(format!(
                "link {} already decided epoch {}",
                self.link, w.epoch_index
            )));
        }
        self.last_epoch = Some(w.epoch_index);
        let rec = step(w, self.link, d, d_stale, curve, truth, self.n_min);
        if rec.verdict == Verdict::Jamming {
            self.hook.on_jamming(&rec);
        }
        Ok(rec)
    }

    pub fn hook(&self) -> &C {
        &self.hook
    }
}
