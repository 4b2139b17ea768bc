//! Interference schedulers for the four elementary jammer types.
//!
//! * Constant: emits noise the whole time it is active.
//! * Deceptive: injects protocol-compliant packets as a Poisson train; the
//!   legitimate sender's clear-channel assessment defers while one is on air.
//! * Random: alternates exponentially distributed ON and OFF phases.
//! * Reactive: listens, and when a transmission starts within its sense
//!   range it jams from `reaction_delay` after the start until packet end.
//!
//! Random and deceptive schedules are realized lazily from the jammer's own
//! stream, so every query of a run sees the same realization. Queries must
//! arrive in non-decreasing time order.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{logistic, JamInterval};
use crate::rng::RngStream;
use crate::sim::{distance, position_at, NodeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JammerKind {
    Constant,
    Deceptive,
    Random,
    Reactive,
}

impl JammerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            JammerKind::Constant => "constant",
            JammerKind::Deceptive => "deceptive",
            JammerKind::Random => "random",
            JammerKind::Reactive => "reactive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JammerSpec {
    pub kind: JammerKind,
    pub node: NodeSpec,
    /// Added bit error probability right at the receiver.
    pub eps_jmax: f64,
    /// Jammer-to-receiver distance (m) at which the effect halves.
    pub j50: f64,
    pub j_slope: f64,
    pub on_mean: f64,
    pub off_mean: f64,
    pub pkt_rate: f64,
    pub pkt_airtime: f64,
    pub sense_prob: f64,
    pub sense_range: f64,
    pub reaction_delay: f64,
    /// `(t_on, t_off)` in seconds.
    pub active_window: (f64, f64),
}

impl JammerSpec {
    pub fn new(kind: JammerKind, node: NodeSpec) -> Self {
        JammerSpec {
            kind,
            node,
            eps_jmax: 0.02,
            j50: 25.0,
            j_slope: 5.0,
            on_mean: 0.5,
            off_mean: 0.5,
            pkt_rate: 5000.0,
            pkt_airtime: 1.6e-4,
            sense_prob: 0.8,
            sense_range: 20.0,
            reaction_delay: 1.2e-5,
            active_window: (0.0, f64::INFINITY),
        }
    }

    pub fn with_window(mut self, t_on: f64, t_off: f64) -> Self {
        self.active_window = (t_on, t_off);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !prob(self.eps_jmax) {
            problems.push("eps_jmax must lie in [0, 1]");
        }
        if !prob(self.sense_prob) {
            problems.push("sense_prob must lie in [0, 1]");
        }
        if !positive(self.j_slope) {
            problems.push("j_slope must be positive");
        }
        if !self.j50.is_finite() {
            problems.push("j50 must be finite");
        }
        if !positive(self.on_mean) || !positive(self.off_mean) {
            problems.push("on_mean and off_mean must be positive");
        }
        if !(self.pkt_rate >= 0.0 && self.pkt_rate.is_finite()) {
            problems.push("pkt_rate must be non-negative");
        }
        if !positive(self.pkt_airtime) {
            problems.push("pkt_airtime must be positive");
        }
        if self.sense_range.is_nan() || self.sense_range < 0.0 {
            problems.push("sense_range must be non-negative");
        }
        if !(self.reaction_delay >= 0.0 && self.reaction_delay.is_finite()) {
            problems.push("reaction_delay must be non-negative");
        }
        let (on, off) = self.active_window;
        if !(on.is_finite() && on < off) {
            problems.push("active_window requires finite t_on < t_off");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("jammer on `{}`: {}", self.node.id(), problems.join("; "))))
        }
    }

    pub fn is_active(&self, t: f64) -> bool {
        t >= self.active_window.0 && t < self.active_window.1
    }

    /// Whether the active window intersects `[lo, hi)`.
    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.active_window.0 < hi && lo < self.active_window.1
    }
}

/// Added per-bit error probability caused by a jammer at distance `d_j`
/// from the receiver.
pub fn jam_effect(d_j: f64, spec: &JammerSpec) -> f64 {
    spec.eps_jmax * logistic((spec.j50 - d_j) / spec.j_slope)
}

/// Airtime of one legitimate packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Airtime {
    pub start: f64,
    pub len: f64,
}

impl Airtime {
    pub fn end(&self) -> f64 {
        self.start + self.len
    }
}

/// Transmitter and receiver of the link a packet travels on.
#[derive(Debug, Clone, Copy)]
pub struct LinkGeometry<'a> {
    pub tx: &'a NodeSpec,
    pub rx: &'a NodeSpec,
}

/// Lazily realized sequence of emission spans, in start order, restricted to
/// the active window.
#[derive(Debug)]
struct Emissions {
    spans: VecDeque<(f64, f64)>,
    /// Start of the next span/phase to realize.
    cursor: f64,
    /// Whether the phase starting at `cursor` is an ON phase (random only).
    next_on: bool,
    window: (f64, f64),
    generated: f64,
    rng: RngStream,
}

impl Emissions {
    fn new(window: (f64, f64), rng: RngStream) -> Self {
        Emissions {
            spans: VecDeque::new(),
            cursor: window.0,
            next_on: false,
            window,
            generated: 0.0,
            rng,
        }
    }

    fn push(&mut self, start: f64, end: f64) {
        let end = end.min(self.window.1);
        if end > start {
            self.generated += end - start;
            self.spans.push_back((start, end));
        }
    }

    /// Realize spans until the cursor passes `t` (or the window closes).
    fn extend_with(&mut self, t: f64, mut step: impl FnMut(&mut Self)) {
        while self.cursor <= t && self.cursor < self.window.1 {
            step(self);
        }
    }

    /// Forget spans that end at or before `t`.
    fn drop_before(&mut self, t: f64) {
        while self.spans.front().is_some_and(|s| s.1 <= t) {
            self.spans.pop_front();
        }
    }

    fn overlapping(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &(s, e) in self.spans.iter().take_while(|s| s.0 < hi) {
            let (s, e) = (s.max(lo), e.min(hi));
            if e <= s {
                continue;
            }
            match out.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => out.push((s, e)),
            }
        }
        out
    }

    fn contains(&self, t: f64) -> bool {
        self.spans.iter().take_while(|s| s.0 <= t).any(|s| t < s.1)
    }

    /// Emitted time realized up to `horizon`.
    fn emitted_until(&self, horizon: f64) -> f64 {
        let beyond: f64 = self
            .spans
            .iter()
            .map(|&(s, e)| (e - s.max(horizon)).max(0.0))
            .sum();
        self.generated - beyond
    }
}

#[derive(Debug)]
enum Schedule {
    Constant,
    Random(Emissions),
    Deceptive(Emissions),
    Reactive { rngs: Vec<RngStream>, emitted: f64 },
}

/// A jammer together with its realized schedule for one run.
#[derive(Debug)]
pub struct Jammer {
    spec: JammerSpec,
    schedule: Schedule,
}

impl Jammer {
    /// `index` identifies the jammer within the scenario and `link_labels`
    /// name the links it may react to; both select RNG streams.
    pub fn new(spec: JammerSpec, seed: u64, index: usize, link_labels: &[String]) -> Self {
        let timeline = || RngStream::new(seed, &format!("jammer/{index}/timeline"));
        let schedule = match spec.kind {
            JammerKind::Constant => Schedule::Constant,
            JammerKind::Random => {
                let mut em = Emissions::new(spec.active_window, timeline());
                // exponential phases are memoryless, so a stationary start
                // only needs the initial phase drawn with the duty-cycle odds
                let duty = spec.on_mean / (spec.on_mean + spec.off_mean);
                em.next_on = em.rng.random::<f64>() < duty;
                Schedule::Random(em)
            }
            JammerKind::Deceptive => Schedule::Deceptive(Emissions::new(spec.active_window, timeline())),
            JammerKind::Reactive => Schedule::Reactive {
                rngs: link_labels
                    .iter()
                    .map(|l| RngStream::new(seed, &format!("jammer/{index}/reactive/{l}")))
                    .collect(),
                emitted: 0.0,
            },
        };
        Jammer { spec, schedule }
    }

    pub fn spec(&self) -> &JammerSpec {
        &self.spec
    }

    fn extend(&mut self, t: f64) {
        let spec = &self.spec;
        match &mut self.schedule {
            Schedule::Random(em) => {
                let (on_mean, off_mean) = (spec.on_mean, spec.off_mean);
                em.extend_with(t, |em| {
                    let mean = if em.next_on { on_mean } else { off_mean };
                    let len = -mean * (1.0 - em.rng.random::<f64>()).ln();
                    let start = em.cursor;
                    if em.next_on {
                        em.push(start, start + len);
                    }
                    em.cursor = start + len;
                    em.next_on = !em.next_on;
                });
            }
            Schedule::Deceptive(em) => {
                let (rate, airtime) = (spec.pkt_rate, spec.pkt_airtime);
                if rate <= 0.0 {
                    return;
                }
                em.extend_with(t, |em| {
                    let gap = -(1.0 - em.rng.random::<f64>()).ln() / rate;
                    let start = em.cursor + gap;
                    if start < em.window.1 {
                        em.push(start, start + airtime);
                    }
                    em.cursor = start;
                });
            }
            _ => {}
        }
    }

    /// True iff a deceptive packet of this jammer occupies the channel at `t`.
    /// Noise jammers never trip clear-channel assessment.
    pub fn channel_busy(&mut self, t: f64) -> bool {
        if self.spec.kind != JammerKind::Deceptive || !self.spec.is_active(t) {
            return false;
        }
        self.extend(t);
        match &mut self.schedule {
            Schedule::Deceptive(em) => {
                em.drop_before(t);
                em.contains(t)
            }
            _ => unreachable!(),
        }
    }

    /// Jamming that overlaps `packet`, clipped to its airtime and to the
    /// active window; intervals are sorted and non-overlapping.
    ///
    /// `tx_visible` says whether the legitimate transmission actually went on
    /// air; only the reactive jammer depends on it.
    pub fn jam_intervals(
        &mut self,
        packet: Airtime,
        link: usize,
        geom: LinkGeometry<'_>,
        tx_visible: bool,
    ) -> Result<Vec<JamInterval>> {
        let (t_on, t_off) = self.spec.active_window;
        let lo = packet.start.max(t_on);
        let hi = packet.end().min(t_off);
        if hi <= lo {
            return Ok(Vec::new());
        }
        let spans: Vec<(f64, f64)> = match self.spec.kind {
            JammerKind::Constant => vec![(lo, hi)],
            JammerKind::Random | JammerKind::Deceptive => {
                self.extend(hi);
                match &mut self.schedule {
                    Schedule::Random(em) | Schedule::Deceptive(em) => {
                        em.drop_before(lo);
                        em.overlapping(lo, hi)
                    }
                    _ => unreachable!(),
                }
            }
            JammerKind::Reactive => {
                if !tx_visible || !self.spec.is_active(packet.start) {
                    Vec::new()
                } else {
                    let tx_pos = position_at(geom.tx, packet.start)?;
                    let jam_pos = position_at(&self.spec.node, packet.start)?;
                    let sense_prob = self.spec.sense_prob;
                    let start = packet.start + self.spec.reaction_delay;
                    match &mut self.schedule {
                        Schedule::Reactive { rngs, emitted } => {
                            let rng = rngs.get_mut(link).ok_or_else(|| {
                                Error::Contract(format!("reactive jammer has no stream for link {link}"))
                            })?;
                            if distance(tx_pos, jam_pos) <= self.spec.sense_range
                                && rng.random::<f64>() < sense_prob
                                && start < hi
                            {
                                *emitted += hi - start;
                                vec![(start, hi)]
                            } else {
                                Vec::new()
                            }
                        }
                        _ => unreachable!(),
                    }
                }
            }
        };

        spans
            .into_iter()
            .map(|(start, end)| {
                let mid = 0.5 * (start + end);
                let d_j = distance(position_at(&self.spec.node, mid)?, position_at(geom.rx, mid)?);
                Ok(JamInterval {
                    start,
                    end,
                    eps_jam: jam_effect(d_j, &self.spec),
                })
            })
            .collect()
    }

    /// Total time this jammer emitted within `[0, horizon]`.
    pub fn emitted_on_time(&mut self, horizon: f64) -> f64 {
        let (t_on, t_off) = self.spec.active_window;
        match self.spec.kind {
            JammerKind::Constant => (t_off.min(horizon) - t_on.max(0.0)).max(0.0),
            JammerKind::Random | JammerKind::Deceptive => {
                self.extend(horizon);
                match &self.schedule {
                    Schedule::Random(em) | Schedule::Deceptive(em) => em.emitted_until(horizon),
                    _ => unreachable!(),
                }
            }
            JammerKind::Reactive => match &self.schedule {
                Schedule::Reactive { emitted, .. } => *emitted,
                _ => unreachable!(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::LinkParams;
    use crate::sim::{NodeRole, Position};

    fn node(id: &str, x: f64) -> NodeSpec {
        NodeSpec::stationary(id, NodeRole::RangingNode, Position::new(x, 0.0, 0.0))
    }

    fn jammer(kind: JammerKind, x: f64) -> JammerSpec {
        JammerSpec::new(kind, NodeSpec::stationary("j", NodeRole::JammerHost, Position::new(x, 0.0, 0.0)))
    }

    fn labels() -> Vec<String> {
        vec!["tx->rx".to_string()]
    }

    #[test]
    fn effect_examples() {
        let spec = jammer(JammerKind::Constant, 0.0);
        assert_eq!(jam_effect(spec.j50, &spec), spec.eps_jmax / 2.0);
        assert!((jam_effect(5.0, &spec) - 0.019641).abs() < 1e-6);
        assert!(jam_effect(1e6, &spec) < 1e-300);
        assert!(jam_effect(10.0, &spec) >= jam_effect(11.0, &spec));
    }

    #[test]
    fn constant_covers_full_airtime() {
        let (tx, rx) = (node("tx", 0.0), node("rx", 10.0));
        let mut j = Jammer::new(jammer(JammerKind::Constant, 15.0), 1, 0, &labels());
        let pkt = Airtime { start: 2.0, len: 160e-6 };
        let ivs = j.jam_intervals(pkt, 0, LinkGeometry { tx: &tx, rx: &rx }, true).unwrap();
        assert_eq!(ivs.len(), 1);
        assert!((ivs[0].len() - 160e-6).abs() < 1e-15);
        assert!((ivs[0].eps_jam - 0.019640275800758).abs() < 1e-12);
        assert!(!j.channel_busy(2.0));
    }

    #[test]
    fn inactive_jammer_is_silent() {
        let (tx, rx) = (node("tx", 0.0), node("rx", 10.0));
        let spec = jammer(JammerKind::Constant, 15.0).with_window(5.0, 6.0);
        let mut j = Jammer::new(spec, 1, 0, &labels());
        let g = LinkGeometry { tx: &tx, rx: &rx };
        assert!(j.jam_intervals(Airtime { start: 4.0, len: 1e-4 }, 0, g, true).unwrap().is_empty());
        assert!(j.jam_intervals(Airtime { start: 6.0, len: 1e-4 }, 0, g, true).unwrap().is_empty());
        // straddling t_on is clipped to the window
        let ivs = j.jam_intervals(Airtime { start: 5.0 - 5e-5, len: 1e-4 }, 0, g, true).unwrap();
        assert!((ivs[0].start - 5.0).abs() < 1e-15);
        assert_eq!(j.emitted_on_time(100.0), 1.0);
    }

    #[test]
    fn reactive_waits_for_transmissions() {
        let (tx, rx) = (node("tx", 0.0), node("rx", 10.0));
        let mut spec = jammer(JammerKind::Reactive, 5.0);
        spec.sense_prob = 1.0;
        let mut j = Jammer::new(spec, 1, 0, &labels());
        let g = LinkGeometry { tx: &tx, rx: &rx };
        let air = LinkParams::default().airtime();
        for i in 0..100 {
            let pkt = Airtime { start: i as f64 * 0.02, len: air };
            assert!(j.jam_intervals(pkt, 0, g, false).unwrap().is_empty());
        }
        assert_eq!(j.emitted_on_time(10.0), 0.0);
        let ivs = j.jam_intervals(Airtime { start: 3.0, len: air }, 0, g, true).unwrap();
        assert_eq!(ivs.len(), 1);
        assert!((ivs[0].start - (3.0 + 1.2e-5)).abs() < 1e-12);
    }

    #[test]
    fn reactive_default_delay_misses_the_header() {
        let p = LinkParams::default();
        let spec = jammer(JammerKind::Reactive, 0.0);
        assert!(spec.reaction_delay > p.shr_airtime());
    }

    #[test]
    fn reactive_out_of_range_stays_quiet() {
        let (tx, rx) = (node("tx", 0.0), node("rx", 10.0));
        let mut spec = jammer(JammerKind::Reactive, 25.0);
        spec.sense_prob = 1.0;
        let mut j = Jammer::new(spec, 1, 0, &labels());
        let g = LinkGeometry { tx: &tx, rx: &rx };
        assert!(j.jam_intervals(Airtime { start: 0.0, len: 1e-4 }, 0, g, true).unwrap().is_empty());
    }

    #[test]
    fn deceptive_intervals_agree_with_busy() {
        let (tx, rx) = (node("tx", 0.0), node("rx", 10.0));
        let g = LinkGeometry { tx: &tx, rx: &rx };
        let mut j = Jammer::new(jammer(JammerKind::Deceptive, 12.0), 9, 0, &labels());
        let mut checked = 0;
        for i in 0..2000 {
            let t = i as f64 * 1e-3;
            let busy = j.channel_busy(t);
            let ivs = j.jam_intervals(Airtime { start: t, len: 1.6e-4 }, 0, g, !busy).unwrap();
            for w in ivs.windows(2) {
                assert!(w[0].end < w[1].start);
            }
            if busy {
                // a packet on air at t overlaps this airtime from t onwards
                assert!(ivs.first().is_some_and(|iv| iv.start == t));
                checked += 1;
            }
            for iv in &ivs {
                assert!(iv.start >= t && iv.end <= t + 1.6e-4);
            }
        }
        assert!(checked > 500);
    }

    #[test]
    fn deceptive_zero_rate_never_busy() {
        let mut spec = jammer(JammerKind::Deceptive, 0.0);
        spec.pkt_rate = 0.0;
        let mut j = Jammer::new(spec, 1, 0, &labels());
        assert!((0..1000).all(|i| !j.channel_busy(i as f64 * 1e-3)));
    }

    #[test]
    fn schedules_are_reproducible() {
        let (tx, rx) = (node("tx", 0.0), node("rx", 10.0));
        let g = LinkGeometry { tx: &tx, rx: &rx };
        let run = |seed| {
            let mut j = Jammer::new(jammer(JammerKind::Random, 12.0), seed, 0, &labels());
            (0..500)
                .map(|i| j.jam_intervals(Airtime { start: i as f64 * 0.02, len: 1.6e-4 }, 0, g, true).unwrap().len())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn random_emitted_time_near_duty_cycle() {
        let mut j = Jammer::new(jammer(JammerKind::Random, 0.0), 11, 0, &labels());
        let frac = j.emitted_on_time(10_000.0) / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }
}
