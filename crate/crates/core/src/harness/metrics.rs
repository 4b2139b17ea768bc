//! Detection metrics aggregated from per-epoch verdicts.
//!
//! The report is a pure function of `(link, epoch, verdict, truth)` rows so
//! it can be recomputed from `epochs.csv` alone.

use serde::{Deserialize, Serialize};

use crate::detector::Verdict;
use crate::sim::SimTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub link: String,
    pub epoch: u64,
    pub verdict: Verdict,
    pub truth: bool,
}

pub fn rows_from_trace(trace: &SimTrace) -> Vec<EpochRow> {
    trace
        .epochs
        .iter()
        .map(|e| EpochRow {
            link: trace.link_labels[e.verdict.link].clone(),
            epoch: e.verdict.epoch_index,
            verdict: e.verdict.verdict,
            truth: e.verdict.truth,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub epochs_total: u64,
    pub truth_positive_epochs: u64,
    /// Truth-negative epochs that received a binary verdict.
    pub truth_negative_binary_epochs: u64,
    pub detections: u64,
    pub true_positives: u64,
    pub false_positives: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fpr: Option<f64>,
    /// Insufficient verdicts on jammed epochs count as misses.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tpr: Option<f64>,
    /// One entry per jammer activation; `null` if it was never detected.
    pub detection_latency_epochs: Vec<Option<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_latency_epochs: Option<f64>,
    pub insufficient_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub link: String,
    #[serde(flatten)]
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub links: Vec<LinkMetrics>,
    pub global: Tally,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

impl Tally {
    fn finish(mut self) -> Self {
        self.fpr = (self.truth_negative_binary_epochs > 0)
            .then(|| self.false_positives as f64 / self.truth_negative_binary_epochs as f64);
        self.tpr = (self.truth_positive_epochs > 0)
            .then(|| self.true_positives as f64 / self.truth_positive_epochs as f64);
        let mut detected: Vec<f64> = self.detection_latency_epochs.iter().flatten().map(|&l| l as f64).collect();
        self.median_latency_epochs = median(&mut detected);
        self
    }

    fn add(&mut self, other: &Tally) {
        self.epochs_total += other.epochs_total;
        self.truth_positive_epochs += other.truth_positive_epochs;
        self.truth_negative_binary_epochs += other.truth_negative_binary_epochs;
        self.detections += other.detections;
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.insufficient_count += other.insufficient_count;
        self.detection_latency_epochs.extend(&other.detection_latency_epochs);
    }
}

fn tally_link(rows: &[&EpochRow]) -> Tally {
    let mut t = Tally::default();
    // (activation epoch, detected) for the current truth-positive run
    let mut open: Option<(u64, bool)> = None;
    for row in rows {
        t.epochs_total += 1;
        let jamming = row.verdict == Verdict::Jamming;
        if jamming {
            t.detections += 1;
        }
        match row.verdict {
            Verdict::Insufficient => t.insufficient_count += 1,
            _ if !row.truth => t.truth_negative_binary_epochs += 1,
            _ => {}
        }
        if row.truth {
            t.truth_positive_epochs += 1;
            if jamming {
                t.true_positives += 1;
            }
            let (start, detected) = *open.get_or_insert((row.epoch, false));
            if jamming && !detected {
                open = Some((start, true));
                t.detection_latency_epochs.push(Some(row.epoch - start));
            }
        } else {
            if jamming {
                t.false_positives += 1;
            }
            if let Some((_, false)) = open {
                t.detection_latency_epochs.push(None);
            }
            open = None;
        }
    }
    if let Some((_, false)) = open {
        t.detection_latency_epochs.push(None);
    }
    t.finish()
}

/// Aggregates rows; links appear in order of first occurrence and each
/// link's rows are taken in epoch order.
pub fn compute_report(rows: &[EpochRow]) -> MetricsReport {
    let mut order: Vec<&str> = Vec::new();
    for r in rows {
        if !order.contains(&r.link.as_str()) {
            order.push(&r.link);
        }
    }
    let links: Vec<LinkMetrics> = order
        .iter()
        .map(|&name| {
            let mut mine: Vec<&EpochRow> = rows.iter().filter(|r| r.link == name).collect();
            mine.sort_by_key(|r| r.epoch);
            LinkMetrics {
                link: name.to_string(),
                tally: tally_link(&mine),
            }
        })
        .collect();
    let mut global = Tally::default();
    for l in &links {
        global.add(&l.tally);
    }
    MetricsReport {
        links,
        global: global.finish(),
    }
}
