//! Jamming detection for IR-UWB ranging links.
//!
//! The crate simulates ranging exchanges between moving nodes under the four
//! elementary jammer types and runs a distance-adaptive packet-delivery-ratio
//! detector on every link. The detector compares each epoch's PDR with a
//! threshold calibrated against distance on an attack-free channel, and
//! never declares jamming beyond the maximal operational distance.

pub mod calibration;
pub mod detector;
mod error;
pub mod harness;
pub mod jammer;
pub mod link;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result, ValidationIssue};
