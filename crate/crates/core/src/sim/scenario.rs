use crate::calibration::ThresholdCurve;
use crate::detector::{Detector, VerdictRecord};
use crate::error::{Error, Result};
use crate::harness::config::ScenarioConfig;
use crate::jammer::{Airtime, Jammer, JammerKind, LinkGeometry};
use crate::link::{transmit_packet, PacketAttempt, PacketOutcome};
use crate::rng::StreamKey;
use crate::stats::WindowStats;

use super::node::{distance, position_at};

/// Simulated time; never runs backwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    now: f64,
    epoch_length: f64,
}

impl SimClock {
    pub fn new(epoch_length: f64) -> Result<Self> {
        if !(epoch_length > 0.0 && epoch_length.is_finite()) {
            return Err(Error::Config(format!("epoch_length must be positive, got {epoch_length}")));
        }
        Ok(SimClock { now: 0.0, epoch_length })
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn epoch_length(&self) -> f64 {
        self.epoch_length
    }

    pub fn epoch_start(&self, epoch: u64) -> f64 {
        epoch as f64 * self.epoch_length
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.now {
            return Err(Error::Contract(format!("clock moved backwards from {} to {t}", self.now)));
        }
        self.now = t;
        Ok(())
    }
}

/// One link's outcome for one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub t_start: f64,
    pub stats: WindowStats,
    pub verdict: VerdictRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JammerEmission {
    pub node: String,
    pub kind: JammerKind,
    pub emitted_s: f64,
}

/// Everything a run produced, in simulated-time order (ties broken by link
/// index).
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub link_labels: Vec<String>,
    pub attempts: Vec<PacketAttempt>,
    pub epochs: Vec<EpochRecord>,
    pub jammers: Vec<JammerEmission>,
}

struct LinkState {
    key: StreamKey,
    detector: Detector,
    last_good_d: Option<f64>,
}

/// Runs `config` against `curve`. Deterministic in `(config, curve, seed)`.
pub fn run_scenario(config: &ScenarioConfig, curve: &ThresholdCurve, seed: u64) -> Result<SimTrace> {
    config.link_params.validate()?;
    let p = &config.link_params;
    let sim = &config.sim;
    let mut clock = SimClock::new(sim.epoch_length)?;
    let labels = config.link_labels();
    let r = sim.attempts_per_epoch;
    if r == 0 {
        return Err(Error::Config("attempts_per_epoch must be >= 1".into()));
    }
    let spacing = sim.epoch_length / r as f64;
    let airtime = p.airtime();
    let n_epochs = sim.epochs();

    let mut jammers: Vec<Jammer> = config
        .jammers
        .iter()
        .enumerate()
        .map(|(i, spec)| Jammer::new(spec.clone(), seed, i, &labels))
        .collect();
    let mut links: Vec<LinkState> = labels
        .iter()
        .enumerate()
        .map(|(i, label)| LinkState {
            key: StreamKey::derive(seed, &format!("link_model/{label}")),
            detector: Detector::new(i, sim.n_min),
            last_good_d: None,
        })
        .collect();

    let mut trace = SimTrace {
        link_labels: labels.clone(),
        attempts: Vec::with_capacity((n_epochs * r) as usize * links.len()),
        epochs: Vec::with_capacity(n_epochs as usize * links.len()),
        jammers: Vec::new(),
    };

    for epoch in 0..n_epochs {
        let t0 = clock.epoch_start(epoch);
        let t1 = t0 + sim.epoch_length;
        let mut windows: Vec<WindowStats> = links.iter().map(|_| WindowStats::new(epoch)).collect();
        let mut hit = vec![false; links.len()];
        let mut epoch_good_d: Vec<Option<f64>> = vec![None; links.len()];
        let mut latest_d = vec![0.0; links.len()];

        for i in 0..r {
            let t = t0 + i as f64 * spacing;
            clock.advance_to(t)?;
            for (li, link) in config.links.iter().enumerate() {
                let tx = &config.nodes[link.tx];
                let rx = &config.nodes[link.rx];
                let d = distance(position_at(tx, t)?, position_at(rx, t)?);
                latest_d[li] = d;
                // every jammer is polled so lazy schedules stay in step
                let mut busy = false;
                for j in jammers.iter_mut() {
                    busy |= j.channel_busy(t);
                }
                let attempt = if busy {
                    PacketAttempt::not_sent(t, li, d, 1.0)
                } else {
                    let packet = Airtime { start: t, len: airtime };
                    let geom = LinkGeometry { tx, rx };
                    let mut jams = Vec::new();
                    for j in jammers.iter_mut() {
                        jams.extend(j.jam_intervals(packet, li, geom, true)?);
                    }
                    let mut rng = links[li].key.stream(epoch * r + i);
                    transmit_packet(t, li, d, &jams, p, &mut rng)
                };
                if attempt.jam_overlap > 0.0 {
                    hit[li] = true;
                }
                if attempt.outcome == PacketOutcome::Delivered {
                    epoch_good_d[li] = Some(d);
                }
                windows[li].record(&attempt, epoch)?;
                trace.attempts.push(attempt);
            }
        }

        let jammer_window = config.jammers.iter().any(|j| j.overlaps(t0, t1));
        for (li, state) in links.iter_mut().enumerate() {
            let (d_used, stale) = match (epoch_good_d[li], state.last_good_d) {
                (Some(d), _) => (d, false),
                (None, Some(d)) => (d, true),
                (None, None) => (latest_d[li], true),
            };
            if epoch_good_d[li].is_some() {
                state.last_good_d = epoch_good_d[li];
            }
            let truth = jammer_window && hit[li];
            let verdict = state.detector.step(&windows[li], d_used, stale, curve, truth)?;
            trace.epochs.push(EpochRecord {
                t_start: t0,
                stats: windows[li],
                verdict,
            });
        }
    }

    let horizon = n_epochs as f64 * sim.epoch_length;
    trace.jammers = jammers
        .iter_mut()
        .map(|j| JammerEmission {
            node: j.spec().node.id().to_string(),
            kind: j.spec().kind,
            emitted_s: j.emitted_on_time(horizon),
        })
        .collect();
    Ok(trace)
}
