//! Simulation clock, node trajectories and the scenario engine.

mod node;
mod scenario;

pub use node::{distance, position_at, NodeRole, NodeSpec, Position, Waypoint};
pub use scenario::{run_scenario, EpochRecord, JammerEmission, SimClock, SimTrace};
