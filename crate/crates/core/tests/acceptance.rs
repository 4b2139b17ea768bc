//! Acceptance criteria A1-A10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use jamguard::calibration::{
    build_threshold_curve, load_curve, margin_threshold, run_sweep, save_curve, Knot, MarginPolicy, SweepSpec,
    ThresholdCurve,
};
use jamguard::detector::{decide, Verdict};
use jamguard::harness::metrics::median;
use jamguard::harness::{emit_report, run_experiment, Formats, ScenarioConfig};
use jamguard::jammer::{Airtime, Jammer, JammerKind, JammerSpec, LinkGeometry};
use jamguard::link::{packet_success_prob, transmit_packet, LinkParams, PacketOutcome};
use jamguard::rng::{RngStream, StreamKey};
use jamguard::sim::{run_scenario, NodeRole, NodeSpec, Position};
use jamguard::stats::WindowStats;
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($msg)+)),
        }
    };
}

fn within(budget: Duration, started: Instant) -> Result<(), String> {
    let took = started.elapsed();
    if took > budget {
        return Err(format!("took {took:.1?}, budget {budget:?}"));
    }
    Ok(())
}

fn config(v: &Value) -> ScenarioConfig {
    ScenarioConfig::from_value(v, Path::new(".")).expect("valid scenario")
}

fn default_curve(seed: u64) -> ThresholdCurve {
    let p = LinkParams::default();
    let samples = run_sweep(&p, &SweepSpec::default(), seed).unwrap();
    build_threshold_curve(&samples, MarginPolicy::default(), p.d_max).unwrap()
}

fn a1_statistics() -> Outcome {
    let started = Instant::now();
    let w = |f: fn(&mut WindowStats)| {
        let mut w = WindowStats::new(0);
        f(&mut w);
        w
    };
    let cases: Vec<(&str, Option<f64>, Option<f64>)> = vec![
        ("pdr 75/100", w(|w| { w.delivered = 75; w.sent = 100; }).pdr(), Some(0.75)),
        ("pdr 50/50", w(|w| { w.delivered = 50; w.sent = 50; }).pdr(), Some(1.0)),
        ("pdr sent=0", w(|_| {}).pdr(), None),
        ("ber 1 in 1e6", w(|w| { w.bit_errors = 1; w.bits_transferred = 1_000_000; }).ber(), Some(1e-6)),
        ("ber 0 errors", w(|w| w.bits_transferred = 1088).ber(), Some(0.0)),
        ("ber bits=0", w(|_| {}).ber(), None),
        ("bpr 2/10", w(|w| { w.erroneous = 2; w.received_any = 10; }).bpr(), Some(0.2)),
        ("bpr 0/10", w(|w| w.received_any = 10).bpr(), Some(0.0)),
        ("bpr received=0", w(|_| {}).bpr(), None),
        ("psr 90/100", w(|w| { w.sent = 90; w.intended = 100; }).psr(), Some(0.9)),
        ("psr intended=0", w(|_| {}).psr(), None),
    ];
    for (name, got, want) in &cases {
        check!(got == want, "{name}: got {got:?}, want {want:?}");
    }
    within(Duration::from_secs(1), started)?;
    Ok(format!("{} exact cases", cases.len()))
}

fn a2_false_positive_control() -> Outcome {
    let started = Instant::now();
    let v = json!({
        "seed": 2024,
        "nodes": [
            { "id": "tx", "position": [0, 0, 0] },
            { "id": "rx", "waypoints": [{ "t": 0, "pos": [5, 0, 0] }, { "t": 10000, "pos": [29, 0, 0] }] }
        ],
        "links": [["tx", "rx"]],
        "sim": { "duration": 10000, "epoch_length": 1.0, "attempts_per_epoch": 50 },
        "detector": { "z": 4, "n_runtime": 50 }
    });
    let out = run_experiment(&config(&v), 2024).map_err(|e| e.to_string())?;
    let g = &out.report.global;
    let fpr = g.fpr.ok_or("no binary verdicts")?;
    check!(g.epochs_total == 10_000, "{} epochs", g.epochs_total);
    check!(fpr <= 0.01, "FPR {fpr:.5} > 0.01 ({} false positives)", g.false_positives);
    within(Duration::from_secs(30), started)?;
    Ok(format!(
        "FPR {fpr:.5} ({} / {} binary epochs), {:.1?}",
        g.false_positives,
        g.truth_negative_binary_epochs,
        started.elapsed()
    ))
}

fn a3_detection_power() -> Outcome {
    let started = Instant::now();
    let curve = default_curve(3);
    let trials: Vec<(u64, u64, Vec<Option<u64>>)> = (0..1000u64)
        .into_par_iter()
        .map(|seed| {
            let t_on = 4 + seed % 5;
            let v = json!({
                "nodes": [
                    { "id": "tx", "position": [0, 0, 0] },
                    { "id": "rx", "position": [10, 0, 0] },
                    { "id": "j", "role": "jammer-host", "position": [10, 5, 0] }
                ],
                "links": [["tx", "rx"]],
                "jammers": [{ "kind": "constant", "node": "j", "active_window": [t_on, null] }],
                "sim": { "duration": 12 }
            });
            let trace = run_scenario(&config(&v), &curve, seed).unwrap();
            let report = jamguard::harness::compute_report(&jamguard::harness::metrics::rows_from_trace(&trace));
            let g = report.global;
            (g.truth_positive_epochs, g.true_positives, g.detection_latency_epochs)
        })
        .collect();
    let positives: u64 = trials.iter().map(|t| t.0).sum();
    let hits: u64 = trials.iter().map(|t| t.1).sum();
    let activations: Vec<Option<u64>> = trials.iter().flat_map(|t| t.2.clone()).collect();
    check!(activations.len() == 1000, "{} activations", activations.len());
    let tpr = hits as f64 / positives as f64;
    // undetected activations sort last
    let mut lat: Vec<f64> = activations.iter().map(|l| l.map_or(f64::INFINITY, |x| x as f64)).collect();
    let med = median(&mut lat).unwrap();
    check!(tpr >= 0.99, "TPR {tpr:.4} < 0.99");
    check!(med <= 2.0, "median latency {med} > 2");
    within(Duration::from_secs(60), started)?;
    Ok(format!("TPR {tpr:.4} over {positives} jammed epochs, median latency {med} epochs, {:.1?}", started.elapsed()))
}

fn random_curve(rng: &mut RngStream, d_max: f64) -> ThresholdCurve {
    let n = rng.random_range(2..10);
    let mut d = rng.random_range(0.0..5.0);
    let mut thr: f64 = rng.random_range(0.0..=1.0);
    let knots = (0..n)
        .map(|_| {
            let k = Knot { d, thr };
            d += rng.random_range(0.1..8.0);
            thr = (thr - rng.random_range(0.0..0.3)).max(0.0);
            k
        })
        .collect();
    ThresholdCurve::from_knots(knots, d_max, MarginPolicy::default()).unwrap()
}

fn a4_exceptional_case() -> Outcome {
    let mut rng = RngStream::new(4, "acceptance/a4");
    let mut violations = 0;
    for _ in 0..100_000 {
        let d_max = rng.random_range(5.0..50.0);
        let curve = random_curve(&mut rng, d_max);
        let pdr = rng.random_range(0.0..=1.0);
        // (d_max, 3 d_max]
        let d = 3.0 * d_max - rng.random_range(0.0..2.0 * d_max);
        if decide(pdr, d, &curve) == Verdict::Jamming {
            violations += 1;
        }
    }
    check!(violations == 0, "{violations} Jamming verdicts beyond d_max");
    Ok("100000 cases, 0 violations".into())
}

fn a5_truth_table() -> Outcome {
    let mut rng = RngStream::new(5, "acceptance/a5");
    let mut mismatches = 0;
    let mut boundary = 0;
    for i in 0..100_000 {
        let d_max = rng.random_range(5.0..50.0);
        let curve = random_curve(&mut rng, d_max);
        let mut d = rng.random_range(0.0..2.0 * d_max);
        let mut pdr = rng.random_range(0.0..=1.0);
        match i % 4 {
            1 => pdr = curve.threshold_at(d),
            2 => d = d_max,
            3 => {
                d = d_max;
                pdr = curve.threshold_at(d);
            }
            _ => {}
        }
        if i % 4 != 0 {
            boundary += 1;
        }
        let expected = if pdr < curve.threshold_at(d) && d < d_max { Verdict::Jamming } else { Verdict::NoJamming };
        if decide(pdr, d, &curve) != expected {
            mismatches += 1;
        }
    }
    check!(mismatches == 0, "{mismatches} mismatches");
    Ok(format!("100000 triples ({boundary} on equality boundaries), 0 mismatches"))
}

fn a6_channel_oracle() -> Outcome {
    let p = LinkParams::default();
    let n = 100_000u64;
    let mut parts = Vec::new();
    for d in [10.0, 20.0, 30.0, 40.0] {
        let key = StreamKey::derive(6, &format!("acceptance/a6/{d}"));
        let delivered = (0..n)
            .into_par_iter()
            .filter(|&i| transmit_packet(0.0, 0, d, &[], &p, &mut key.stream(i)).outcome == PacketOutcome::Delivered)
            .count() as f64;
        let q = packet_success_prob(d, 0.0, &p);
        let sigma = (q * (1.0 - q) / n as f64).sqrt();
        let hat = delivered / n as f64;
        check!((hat - q).abs() <= 3.0 * sigma, "d={d}: MC {hat:.5} vs closed form {q:.5} (3 sigma {:.5})", 3.0 * sigma);
        parts.push(format!("{d} m: {hat:.4}/{q:.4}"));
    }
    Ok(parts.join(", "))
}

fn a7_range_claim() -> Outcome {
    let p = LinkParams::default();
    let mut worst = f64::INFINITY;
    for i in 1..=60 {
        let d = i as f64 * 0.5;
        let q = packet_success_prob(d, 0.0, &p);
        check!(q >= 0.75, "success {q} < 0.75 at d={d}");
        worst = worst.min(q);
    }
    Ok(format!("60 grid points, min {worst:.4} at 30 m"))
}

fn a8_jammer_schedulers() -> Outcome {
    let started = Instant::now();
    let tx = NodeSpec::stationary("tx", NodeRole::RangingNode, Position::new(0.0, 0.0, 0.0));
    let rx = NodeSpec::stationary("rx", NodeRole::RangingNode, Position::new(10.0, 0.0, 0.0));
    let host = NodeSpec::stationary("j", NodeRole::JammerHost, Position::new(15.0, 0.0, 0.0));
    let geom = LinkGeometry { tx: &tx, rx: &rx };
    let labels = vec!["tx->rx".to_string()];
    let airtime = LinkParams::default().airtime();
    let slot = 0.02;

    let mut random = Jammer::new(JammerSpec::new(JammerKind::Random, host.clone()), 8, 0, &labels);
    let mut jammed = 0.0;
    for i in 0..1_000_000u64 {
        let pkt = Airtime { start: i as f64 * slot, len: airtime };
        jammed += random.jam_intervals(pkt, 0, geom, true).unwrap().iter().map(|iv| iv.len()).sum::<f64>();
    }
    let duty = jammed / (1e6 * airtime);
    check!((duty - 0.5).abs() <= 0.02, "random duty cycle {duty:.4}");

    let spec = JammerSpec::new(JammerKind::Deceptive, host.clone());
    let expected_busy = 1.0 - (-spec.pkt_rate * spec.pkt_airtime).exp();
    let mut deceptive = Jammer::new(spec, 8, 0, &labels);
    let busy = (0..1_000_000u64).filter(|&i| deceptive.channel_busy(i as f64 * 1e-3)).count() as f64 / 1e6;
    check!((busy - expected_busy).abs() <= 0.02, "deceptive busy {busy:.4} vs {expected_busy:.4}");

    let mut reactive = Jammer::new(JammerSpec::new(JammerKind::Reactive, host.clone()), 8, 0, &labels);
    let mut emitted = 0;
    for i in 0..100_000u64 {
        let pkt = Airtime { start: i as f64 * slot, len: airtime };
        emitted += reactive.jam_intervals(pkt, 0, geom, false).unwrap().len();
    }
    check!(emitted == 0, "reactive emitted {emitted} intervals on a silent channel");
    check!(reactive.emitted_on_time(2000.0) == 0.0, "reactive on-time non-zero");

    let mut constant = Jammer::new(JammerSpec::new(JammerKind::Constant, host).with_window(10.0, 20.0), 8, 0, &labels);
    for i in 0..10_000u64 {
        let pkt = Airtime { start: 10.0 + i as f64 * 1e-3, len: airtime };
        let ivs = constant.jam_intervals(pkt, 0, geom, true).unwrap();
        let covered: f64 = ivs.iter().map(|iv| iv.len()).sum();
        check!(ivs.len() == 1 && (covered / airtime - 1.0).abs() < 1e-9, "constant covered {covered} of {airtime}");
    }
    within(Duration::from_secs(30), started)?;
    Ok(format!(
        "random duty {duty:.4}, deceptive busy {busy:.4} (expect {expected_busy:.4}), reactive silent, constant 100%, {:.1?}",
        started.elapsed()
    ))
}

/// Recount of FPR/TPR from epochs.csv text, independent of the crate's
/// metrics code.
fn recount(epochs_csv: &str) -> (u64, u64, u64, u64) {
    let mut fp = 0;
    let mut negatives = 0;
    let mut tp = 0;
    let mut positives = 0;
    for line in epochs_csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let (verdict, truth) = (cols[9], cols[10] == "true");
        if truth {
            positives += 1;
            tp += (verdict == "Jamming") as u64;
        } else if verdict != "Insufficient" {
            negatives += 1;
            fp += (verdict == "Jamming") as u64;
        }
    }
    (fp, negatives, tp, positives)
}

fn a9_determinism_and_round_trips() -> Outcome {
    let v = json!({
        "seed": 99,
        "nodes": [
            { "id": "a", "waypoints": [{ "t": 0, "pos": [0, 0, 0] }, { "t": 60, "pos": [0, 20, 0] }] },
            { "id": "b", "position": [8, 0, 0] },
            { "id": "j", "role": "jammer-host", "position": [10, 5, 0] }
        ],
        "links": [["a", "b"], ["b", "a"]],
        "jammers": [
            { "kind": "random", "node": "j", "active_window": [10, 40] },
            { "kind": "reactive", "node": "j", "active_window": [30, null] }
        ],
        "sim": { "duration": 60 },
        "detector": { "sweep": { "d_min": 1, "d_max": 30, "step": 1, "n_packets": 4000 } }
    });
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let out = run_experiment(&config(&v), 99).map_err(|e| e.to_string())?;
        emit_report(&out.trace, &out.report, Some((&out.curve, &LinkParams::default())), dir.path(), Formats::default())
            .map_err(|e| e.to_string())?;
    }
    for name in ["epochs.csv", "attempts.csv", "report.json", "curve.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        check!(a == b, "{name} differs between identical runs");
    }

    let curve_path = dirs[0].path().join("curve.csv");
    let (curve, _) = load_curve(&curve_path).map_err(|e| e.to_string())?;
    let again = dirs[0].path().join("again.csv");
    save_curve(&curve, &LinkParams::default(), &again).unwrap();
    check!(std::fs::read(&again).unwrap() == std::fs::read(&curve_path).unwrap(), "curve CSV not byte-stable");
    let (back, _) = load_curve(&again).unwrap();
    let bits = |c: &ThresholdCurve| c.knots().iter().map(|k| (k.d.to_bits(), k.thr.to_bits())).collect::<Vec<_>>();
    check!(bits(&back) == bits(&curve), "curve knots not bit-exact after round trip");

    let epochs = std::fs::read_to_string(dirs[0].path().join("epochs.csv")).unwrap();
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dirs[0].path().join("report.json")).unwrap()).unwrap();
    let (fp, negatives, tp, positives) = recount(&epochs);
    let g = &report["global"];
    check!(g["false_positives"] == json!(fp), "false_positives {} vs recount {fp}", g["false_positives"]);
    check!(g["true_positives"] == json!(tp), "true_positives {} vs recount {tp}", g["true_positives"]);
    check!(g["fpr"].as_f64() == Some(fp as f64 / negatives as f64), "fpr {} vs recount", g["fpr"]);
    check!(g["tpr"].as_f64() == Some(tp as f64 / positives as f64), "tpr {} vs recount", g["tpr"]);
    Ok(format!("byte-identical outputs, bit-exact curve, recount fp={fp}/{negatives} tp={tp}/{positives}"))
}

fn a10_calibration_interpolation() -> Outcome {
    let curve = default_curve(10);
    for k in curve.knots() {
        check!(curve.threshold_at(k.d) == k.thr, "knot at {} not reproduced", k.d);
    }
    let d_max = curve.d_max();
    let mut prev = f64::INFINITY;
    let steps = 30_000;
    for i in 0..=steps {
        let d = 3.0 * d_max * i as f64 / steps as f64;
        let thr = curve.threshold_at(d);
        check!(thr.is_finite() && (0.0..=1.0).contains(&thr), "thr {thr} at d={d}");
        check!(thr <= prev, "threshold rises at d={d}: {prev} -> {thr}");
        prev = thr;
    }
    let worked = margin_threshold(0.9886, &MarginPolicy { z: 4.0, n_runtime: 50 });
    check!((worked - 0.9285).abs() <= 1e-3, "worked margin value {worked}");
    Ok(format!("{} knots exact, monotone on [0, {}] m, worked margin {worked:.4}", curve.knots().len(), 3.0 * d_max))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("A1 statistics exactness", a1_statistics),
        ("A2 false-positive control", a2_false_positive_control),
        ("A3 detection power", a3_detection_power),
        ("A4 exceptional-case rule", a4_exceptional_case),
        ("A5 decision truth table", a5_truth_table),
        ("A6 channel oracle equivalence", a6_channel_oracle),
        ("A7 range claim at model level", a7_range_claim),
        ("A8 jammer schedulers", a8_jammer_schedulers),
        ("A9 determinism and round-trips", a9_determinism_and_round_trips),
        ("A10 calibration and interpolation", a10_calibration_interpolation),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
