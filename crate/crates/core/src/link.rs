//! Bit-level IR-UWB link model.
//!
//! Each packet is a synchronization header (SHR) followed by a payload. Every
//! bit fails independently with a probability set by the link distance plus
//! any jamming that overlaps the bit's airtime. An error in the SHR loses the
//! packet's sync; an error only in the payload delivers a corrupted packet.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Per-bit error probability ceiling; a fully jammed bit is a coin flip.
pub const MAX_BIT_ERROR_PROB: f64 = 0.5;

pub(crate) fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkParams {
    /// Bit error probability at short range.
    pub eps_min: f64,
    /// Bit error probability far beyond the usable range.
    pub eps_max: f64,
    /// Distance (m) where the error probability is halfway between the two.
    pub d50: f64,
    /// Logistic width (m) of the distance profile.
    pub slope: f64,
    pub shr_bits: u32,
    pub payload_bits: u32,
    pub bitrate: f64,
    /// Maximal operational distance (m).
    pub d_max: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            eps_min: 1e-5,
            eps_max: 5e-3,
            d50: 50.0,
            slope: 5.0,
            shr_bits: 64,
            payload_bits: 1024,
            bitrate: 6.8e6,
            d_max: 30.0,
        }
    }
}

impl LinkParams {
    /// A channel without any background bit errors.
    pub fn noiseless() -> Self {
        LinkParams {
            eps_min: 0.0,
            eps_max: 0.0,
            ..LinkParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.eps_min >= 0.0 && self.eps_min <= self.eps_max && self.eps_max <= MAX_BIT_ERROR_PROB) {
            problems.push("require 0 <= eps_min <= eps_max <= 0.5");
        }
        if !(self.slope > 0.0 && self.slope.is_finite()) {
            problems.push("slope must be positive");
        }
        if !self.d50.is_finite() {
            problems.push("d50 must be finite");
        }
        if self.shr_bits == 0 || self.payload_bits == 0 {
            problems.push("shr_bits and payload_bits must be >= 1");
        }
        if !(self.bitrate > 0.0 && self.bitrate.is_finite()) {
            problems.push("bitrate must be positive");
        }
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            problems.push("d_max must be positive");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("link params: {}", problems.join("; "))))
        }
    }

    pub fn bits_total(&self) -> u32 {
        self.shr_bits + self.payload_bits
    }

    pub fn airtime(&self) -> f64 {
        self.bits_total() as f64 / self.bitrate
    }

    pub fn shr_airtime(&self) -> f64 {
        self.shr_bits as f64 / self.bitrate
    }
}

/// Background per-bit error probability at link distance `d`.
pub fn base_bit_error_prob(d: f64, p: &LinkParams) -> f64 {
    p.eps_min + (p.eps_max - p.eps_min) * logistic((d - p.d50) / p.slope)
}

/// Closed-form delivery probability of a packet whose every bit sees the
/// extra jamming probability `eps_jam`.
pub fn packet_success_prob(d: f64, eps_jam: f64, p: &LinkParams) -> f64 {
    let eps = (base_bit_error_prob(d, p) + eps_jam).clamp(0.0, MAX_BIT_ERROR_PROB);
    (1.0 - eps).powi(p.bits_total() as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PacketOutcome {
    /// Deferred by clear-channel assessment; nothing went on air.
    NotSent,
    LostSync,
    ReceivedErroneous,
    Delivered,
}

impl PacketOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            PacketOutcome::NotSent => "NotSent",
            PacketOutcome::LostSync => "LostSync",
            PacketOutcome::ReceivedErroneous => "ReceivedErroneous",
            PacketOutcome::Delivered => "Delivered",
        }
    }
}

impl std::str::FromStr for PacketOutcome {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "NotSent" => PacketOutcome::NotSent,
            "LostSync" => PacketOutcome::LostSync,
            "ReceivedErroneous" => PacketOutcome::ReceivedErroneous,
            "Delivered" => PacketOutcome::Delivered,
            other => return Err(format!("unknown packet outcome `{other}`")),
        })
    }
}

/// A span of airtime during which jamming adds `eps_jam` to each bit's
/// error probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JamInterval {
    pub start: f64,
    pub end: f64,
    pub eps_jam: f64,
}

impl JamInterval {
    pub fn len(&self) -> f64 {
        (self.end - self.start).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketAttempt {
    pub t_start: f64,
    /// Index of the link in the scenario's link list.
    pub link: usize,
    pub d: f64,
    pub outcome: PacketOutcome,
    pub bit_errors: u32,
    pub bits_total: u32,
    /// Fraction of the packet airtime covered by jamming.
    pub jam_overlap: f64,
}

impl PacketAttempt {
    /// Attempt deferred by clear-channel assessment.
    pub fn not_sent(t_start: f64, link: usize, d: f64, jam_overlap: f64) -> Self {
        PacketAttempt {
            t_start,
            link,
            d,
            outcome: PacketOutcome::NotSent,
            bit_errors: 0,
            bits_total: 0,
            jam_overlap,
        }
    }
}

/// Length of the union of `intervals` clipped to `[lo, hi]`.
fn union_length(intervals: &[JamInterval], lo: f64, hi: f64) -> f64 {
    let mut spans: Vec<(f64, f64)> = intervals
        .iter()
        .map(|iv| (iv.start.max(lo), iv.end.min(hi)))
        .filter(|(s, e)| e > s)
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (s, e) in spans {
        match cur {
            Some((cs, ce)) if s <= ce => cur = Some((cs, ce.max(e))),
            Some((cs, ce)) => {
                total += ce - cs;
                cur = Some((s, e));
            }
            None => cur = Some((s, e)),
        }
    }
    if let Some((cs, ce)) = cur {
        total += ce - cs;
    }
    total
}

const EDGE_TOL: f64 = 1e-6;

/// Piecewise-constant per-bit error probability over a packet: `(first_bit,
/// end_bit, prob)` segments covering `0..n_bits`.
fn bit_segments(
    t_start: f64,
    base: f64,
    jams: &[JamInterval],
    p: &LinkParams,
) -> Vec<(u32, u32, f64)> {
    let n = p.bits_total();
    // bit i occupies [t_start + i/br, t_start + (i+1)/br); it is jammed when
    // that span overlaps the interval with positive length
    let ranges: Vec<(u32, u32, f64)> = jams
        .iter()
        .filter(|iv| !iv.is_empty() && iv.eps_jam > 0.0)
        .filter_map(|iv| {
            // tolerance keeps an interval ending/starting on a bit edge off
            // the neighbouring bit
            let lo = ((iv.start - t_start) * p.bitrate + EDGE_TOL).floor().max(0.0);
            let hi = ((iv.end - t_start) * p.bitrate - EDGE_TOL).ceil().min(n as f64);
            (hi > lo).then_some((lo as u32, hi as u32, iv.eps_jam))
        })
        .collect();

    let mut cuts: Vec<u32> = vec![0, n];
    cuts.extend(ranges.iter().flat_map(|r| [r.0, r.1]));
    cuts.sort_unstable();
    cuts.dedup();

    cuts.windows(2)
        .map(|w| {
            let extra: f64 = ranges
                .iter()
                .filter(|r| r.0 <= w[0] && w[0] < r.1)
                .map(|r| r.2)
                .sum();
            (w[0], w[1], (base + extra).clamp(0.0, MAX_BIT_ERROR_PROB))
        })
        .collect()
}

/// Positions of the erroneous bits of one packet.
///
/// Errors are drawn by inverting the cumulative hazard `-ln(1 - p_i)`: the
/// next error falls on the first bit where the accumulated hazard exceeds an
/// Exp(1) budget. This is exactly the independent-Bernoulli-per-bit law but
/// costs one draw per error, and for a fixed stream the first error can only
/// move earlier when any bit's probability grows.
fn sample_error_bits(segments: &[(u32, u32, f64)], rng: &mut RngStream) -> Vec<u32> {
    let mut errors = Vec::new();
    let mut budget: f64 = rng.sample(Exp1);
    for &(lo, hi, prob) in segments {
        if prob <= 0.0 {
            continue;
        }
        let hazard = -(-prob).ln_1p();
        let mut at = lo;
        while at < hi {
            let remaining = (hi - at) as f64;
            let need = (budget / hazard).ceil().max(1.0);
            if need <= remaining {
                let bit = at + need as u32 - 1;
                errors.push(bit);
                at = bit + 1;
                budget = rng.sample(Exp1);
            } else {
                budget -= remaining * hazard;
                at = hi;
            }
        }
    }
    errors
}

/// Sends one packet starting at `t_start` over a link of length `d`.
///
/// `jams` are the jamming intervals in absolute time; they are clipped to
/// the packet airtime. Overlapping intervals from several jammers add up.
pub fn transmit_packet(
    t_start: f64,
    link: usize,
    d: f64,
    jams: &[JamInterval],
    p: &LinkParams,
    rng: &mut RngStream,
) -> PacketAttempt {
    let airtime = p.airtime();
    let base = base_bit_error_prob(d, p);
    let segments = bit_segments(t_start, base, jams, p);
    let errors = sample_error_bits(&segments, rng);
    let outcome = match errors.first() {
        None => PacketOutcome::Delivered,
        Some(&first) if first < p.shr_bits => PacketOutcome::LostSync,
        Some(_) => PacketOutcome::ReceivedErroneous,
    };
    PacketAttempt {
        t_start,
        link,
        d,
        outcome,
        bit_errors: errors.len() as u32,
        bits_total: p.bits_total(),
        jam_overlap: (union_length(jams, t_start, t_start + airtime) / airtime).clamp(0.0, 1.0),
    }
}
