use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cartesian position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position(pub [f64; 3]);

impl Position {
    pub const ORIGIN: Position = Position([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Position([x, y, z])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    fn lerp(self, other: Position, frac: f64) -> Position {
        let mut out = [0.0; 3];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(other.0.iter())) {
            *o = a + (b - a) * frac;
        }
        Position(out)
    }
}

/// Euclidean distance between two points.
pub fn distance(a: Position, b: Position) -> f64 {
    a.0.iter()
        .zip(b.0.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub pos: Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeRole {
    RangingNode,
    JammerHost,
}

/// A node moving along a piecewise-linear waypoint path.
///
/// A node with a single waypoint is stationary for all time.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    id: String,
    role: NodeRole,
    waypoints: Vec<Waypoint>,
}

impl NodeSpec {
    pub fn new(id: impl Into<String>, role: NodeRole, waypoints: Vec<Waypoint>) -> Result<Self> {
        let id = id.into();
        if waypoints.is_empty() {
            return Err(Error::Config(format!("node `{id}` has no waypoints")));
        }
        if let Some(bad) = waypoints.iter().find(|w| !w.t.is_finite() || !w.pos.is_finite()) {
            return Err(Error::Config(format!(
                "node `{id}` has a non-finite waypoint at t={}",
                bad.t
            )));
        }
        if waypoints.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::Config(format!(
                "node `{id}` waypoint times must be strictly increasing"
            )));
        }
        Ok(NodeSpec { id, role, waypoints })
    }

    pub fn stationary(id: impl Into<String>, role: NodeRole, pos: Position) -> Self {
        NodeSpec {
            id: id.into(),
            role,
            waypoints: vec![Waypoint { t: 0.0, pos }],
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn role(&self) -> NodeRole {
        self.role
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    /// Time span covered by the waypoints, or `None` for a stationary node.
    pub fn span(&self) -> Option<(f64, f64)> {
        match self.waypoints.as_slice() {
            [_] => None,
            w => Some((w[0].t, w[w.len() - 1].t)),
        }
    }
}

/// Position of `node` at time `t`, interpolated linearly between the
/// bracketing waypoints.
pub fn position_at(node: &NodeSpec, t: f64) -> Result<Position> {
    let wps = &node.waypoints;
    if wps.len() == 1 {
        return Ok(wps[0].pos);
    }
    let (start, end) = (wps[0].t, wps[wps.len() - 1].t);
    if !(t >= start && t <= end) {
        return Err(Error::OutOfRange {
            node: node.id.clone(),
            t,
            start,
            end,
        });
    }
    // first waypoint strictly after t; t == end falls through to the last knot
    let idx = wps.partition_point(|w| w.t <= t);
    if idx == wps.len() {
        return Ok(wps[idx - 1].pos);
    }
    let (a, b) = (&wps[idx - 1], &wps[idx]);
    if t == a.t {
        return Ok(a.pos);
    }
    Ok(a.pos.lerp(b.pos, (t - a.t) / (b.t - a.t)))
}
