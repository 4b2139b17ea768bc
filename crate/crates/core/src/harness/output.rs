//! Trace and report files.
//!
//! * `epochs.csv`: one row per link per epoch; empty cells for undefined
//!   ratios.
//! * `attempts.csv`: one row per packet attempt.
//! * `jammers.csv`: emitted on-time per jammer.
//! * `report.json`: the metrics report.
//! * `curve.csv` + `curve.json`: the threshold curve, when a sweep ran.
//!
//! Decimals carry at most 9 significant digits, lines end with LF.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::calibration::{save_curve, ThresholdCurve};
use crate::error::{Error, Result};
use crate::harness::metrics::{EpochRow, MetricsReport};
use crate::link::LinkParams;
use crate::sim::SimTrace;

pub const EPOCHS_HEADER: [&str; 12] = [
    "epoch", "t_s", "link", "d_m", "pdr", "ber", "bpr", "psr", "thr", "verdict", "truth", "n_sent",
];
pub const ATTEMPTS_HEADER: [&str; 7] = ["t_s", "link", "d_m", "outcome", "bit_errors", "bits_total", "jam_overlap"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Formats { csv: true, json: true }
    }
}

impl FromStr for Formats {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut f = Formats { csv: false, json: false };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csv" => f.csv = true,
                "json" => f.json = true,
                other => return Err(Error::Config(format!("unknown output format `{other}`"))),
            }
        }
        if !f.csv && !f.json {
            return Err(Error::Config("no output format selected".into()));
        }
        Ok(f)
    }
}

/// `x` rounded to 9 significant digits, printed without trailing noise.
pub fn fmt_decimal(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("scientific float parses");
    format!("{rounded}")
}

fn opt_decimal(x: Option<f64>) -> String {
    x.map(fmt_decimal).unwrap_or_default()
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory csv writer")
}

pub fn epochs_csv(trace: &SimTrace) -> Vec<u8> {
    let mut w = csv_writer();
    w.write_record(EPOCHS_HEADER).expect("in-memory write");
    for e in &trace.epochs {
        let v = &e.verdict;
        w.write_record([
            v.epoch_index.to_string(),
            fmt_decimal(e.t_start),
            trace.link_labels[v.link].clone(),
            fmt_decimal(v.d_used),
            opt_decimal(e.stats.pdr()),
            opt_decimal(e.stats.ber()),
            opt_decimal(e.stats.bpr()),
            opt_decimal(e.stats.psr()),
            fmt_decimal(v.thr),
            v.verdict.as_str().to_string(),
            v.truth.to_string(),
            e.stats.sent.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn attempts_csv(trace: &SimTrace) -> Vec<u8> {
    let mut w = csv_writer();
    w.write_record(ATTEMPTS_HEADER).expect("in-memory write");
    for a in &trace.attempts {
        w.write_record([
            fmt_decimal(a.t_start),
            trace.link_labels[a.link].clone(),
            fmt_decimal(a.d),
            a.outcome.as_str().to_string(),
            a.bit_errors.to_string(),
            a.bits_total.to_string(),
            fmt_decimal(a.jam_overlap),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn jammers_csv(trace: &SimTrace) -> Vec<u8> {
    let mut w = csv_writer();
    w.write_record(["jammer", "kind", "emitted_s"]).expect("in-memory write");
    for j in &trace.jammers {
        w.write_record([j.node.clone(), j.kind.as_str().to_string(), fmt_decimal(j.emitted_s)])
            .expect("in-memory write");
    }
    finish(w)
}

pub fn report_json(report: &MetricsReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

/// Reads the rows the metrics report is computed from back out of
/// `epochs.csv` text.
pub fn parse_epochs_csv(text: &str) -> Result<Vec<EpochRow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Config(format!("epochs.csv header: {e}")))?;
    if header.iter().collect::<Vec<_>>() != EPOCHS_HEADER {
        return Err(Error::Config(format!("epochs.csv header must be `{}`", EPOCHS_HEADER.join(","))));
    }
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Config(format!("epochs.csv line {line}: {e}")))?;
            let bad = |what: &str| Error::Config(format!("epochs.csv line {line}: bad {what}"));
            Ok(EpochRow {
                epoch: rec[0].parse().map_err(|_| bad("epoch"))?,
                link: rec[2].to_string(),
                verdict: rec[9].parse().map_err(|_| bad("verdict"))?,
                truth: rec[10].parse().map_err(|_| bad("truth"))?,
            })
        })
        .collect()
}

fn write(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the selected outputs of a run into `out_dir`, creating it if
/// needed. Returns the paths written.
pub fn emit_report(
    trace: &SimTrace,
    report: &MetricsReport,
    swept_curve: Option<(&ThresholdCurve, &LinkParams)>,
    out_dir: &Path,
    formats: Formats,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    if formats.csv {
        write(out_dir, "epochs.csv", &epochs_csv(trace), &mut written)?;
        write(out_dir, "attempts.csv", &attempts_csv(trace), &mut written)?;
        write(out_dir, "jammers.csv", &jammers_csv(trace), &mut written)?;
        if let Some((curve, link)) = swept_curve {
            let path = out_dir.join("curve.csv");
            save_curve(curve, link, &path)?;
            written.push(path);
        }
    }
    if formats.json {
        write(out_dir, "report.json", report_json(report).as_bytes(), &mut written)?;
    }
    Ok(written)
}
