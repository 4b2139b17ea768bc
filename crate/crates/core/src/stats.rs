//! Per-epoch counters and the four link-quality ratios derived from them.
//!
//! Ratios return `None` when their denominator is zero so callers can tell
//! "no data" apart from a bad link.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{PacketAttempt, PacketOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WindowStats {
    pub epoch_index: u64,
    pub intended: u64,
    pub sent: u64,
    /// Packets that reached the receiver, corrupted or not.
    pub received_any: u64,
    pub erroneous: u64,
    pub delivered: u64,
    pub bit_errors: u64,
    pub bits_transferred: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl WindowStats {
    pub fn new(epoch_index: u64) -> Self {
        WindowStats {
            epoch_index,
            ..Default::default()
        }
    }

    /// Adds one attempt of this window's epoch.
    pub fn record(&mut self, attempt: &PacketAttempt, attempt_epoch: u64) -> Result<()> {
        if attempt_epoch != self.epoch_index {
            return Err(Error::Contract(format!(
                "attempt of epoch {attempt_epoch} recorded into window of epoch {}",
                self.epoch_index
            )));
        }
        self.intended += 1;
        if attempt.outcome == PacketOutcome::NotSent {
            return Ok(());
        }
        self.sent += 1;
        self.bit_errors += attempt.bit_errors as u64;
        self.bits_transferred += attempt.bits_total as u64;
        match attempt.outcome {
            PacketOutcome::ReceivedErroneous => {
                self.received_any += 1;
                self.erroneous += 1;
            }
            PacketOutcome::Delivered => {
                self.received_any += 1;
                self.delivered += 1;
            }
            _ => {}
        }
        Ok(())
    }

    /// Packet delivery ratio: delivered over sent packets.
    pub fn pdr(&self) -> Option<f64> {
        ratio(self.delivered, self.sent)
    }

    /// Bit error ratio over all transferred bits.
    pub fn ber(&self) -> Option<f64> {
        ratio(self.bit_errors, self.bits_transferred)
    }

    /// Bad packet ratio: erroneous over received packets.
    pub fn bpr(&self) -> Option<f64> {
        ratio(self.erroneous, self.received_any)
    }

    /// Packet send ratio: sent over intended packets.
    pub fn psr(&self) -> Option<f64> {
        ratio(self.sent, self.intended)
    }

    /// Sum of two windows' counters, keeping this window's epoch index.
    pub fn merge(&self, other: &WindowStats) -> WindowStats {
        WindowStats {
            epoch_index: self.epoch_index,
            intended: self.intended + other.intended,
            sent: self.sent + other.sent,
            received_any: self.received_any + other.received_any,
            erroneous: self.erroneous + other.erroneous,
            delivered: self.delivered + other.delivered,
            bit_errors: self.bit_errors + other.bit_errors,
            bits_transferred: self.bits_transferred + other.bits_transferred,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.delivered <= self.sent
            && self.sent <= self.intended
            && self.erroneous <= self.received_any
            && self.received_any == self.erroneous + self.delivered
            && self.bit_errors <= self.bits_transferred
    }
}
