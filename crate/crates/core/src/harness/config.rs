//! Scenario files.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "seed": 7,
//!   "nodes": [
//!     { "id": "uav1", "position": [0, 0, 0] },
//!     { "id": "uav2", "waypoints": [{ "t": 0, "pos": [5, 0, 0] }, { "t": 60, "pos": [25, 0, 0] }] },
//!     { "id": "j1", "role": "jammer-host", "position": [12, 4, 0] }
//!   ],
//!   "links": [["uav1", "uav2"]],
//!   "jammers": [{ "kind": "constant", "node": "j1", "active_window": [20, null] }],
//!   "link_params": { "d_max": 30 },
//!   "sim": { "duration": 60, "epoch_length": 1.0, "attempts_per_epoch": 50, "n_min": 20 },
//!   "detector": { "sweep": { "d_min": 1, "d_max": 30, "step": 1, "n_packets": 10000 }, "z": 4 }
//! }
//! ```
//!
//! Validation reports every problem it finds, each tagged with the JSON path
//! of the offending value.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::calibration::{MarginPolicy, SweepSpec};
use crate::detector::DEFAULT_N_MIN;
use crate::error::{Error, Result, ValidationIssue};
use crate::jammer::{JammerKind, JammerSpec};
use crate::link::LinkParams;
use crate::sim::{NodeRole, NodeSpec, Position, Waypoint};

pub const SEED_ENV: &str = "JAMGUARD_SEED";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub duration: f64,
    pub epoch_length: f64,
    pub attempts_per_epoch: u64,
    pub n_min: u64,
}

impl SimParams {
    pub fn epochs(&self) -> u64 {
        (self.duration / self.epoch_length + 1e-9).floor() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveSource {
    File(PathBuf),
    Sweep(SweepSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub curve: CurveSource,
    pub margin: MarginPolicy,
}

/// Directed ranging link between two nodes, by index into `nodes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkSpec {
    pub tx: usize,
    pub rx: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
    pub jammers: Vec<JammerSpec>,
    pub link_params: LinkParams,
    pub sim: SimParams,
    pub detector: DetectorConfig,
    pub seed: Option<u64>,
}

impl ScenarioConfig {
    pub fn link_label(&self, link: &LinkSpec) -> String {
        format!("{}->{}", self.nodes[link.tx].id(), self.nodes[link.rx].id())
    }

    pub fn link_labels(&self) -> Vec<String> {
        self.links.iter().map(|l| self.link_label(l)).collect()
    }

    /// Builds a validated config from a parsed JSON document. Relative curve
    /// paths resolve against `base_dir`.
    pub fn from_value(value: &Value, base_dir: &Path) -> Result<Self> {
        let mut v = Validator::default();
        let config = v.scenario(value, base_dir);
        match config {
            Some(c) if v.issues.is_empty() => Ok(c),
            _ => Err(Error::Validation(v.issues)),
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let value = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    ScenarioConfig::from_value(&value, base)
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

/// Sets the value at a dotted path (`sim.attempts_per_epoch`), creating
/// intermediate objects as needed.
pub fn set_path(doc: &mut Value, dotted: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = dotted.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad parameter path `{dotted}`")));
    }
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        let here = || parts[..i].join(".");
        cur = match cur {
            Value::Array(items) => {
                let len = items.len();
                let slot = part
                    .parse::<usize>()
                    .ok()
                    .and_then(|k| items.get_mut(k))
                    .ok_or_else(|| Error::Config(format!("`{part}` is not an index into `{}` (len {len})", here())))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            Value::Object(obj) => {
                if last {
                    obj.insert(part.to_string(), value);
                    return Ok(());
                }
                obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            _ => return Err(Error::Config(format!("`{}` is not an object or array", here()))),
        };
    }
    unreachable!()
}

/// Seed precedence: command line, then scenario file, then environment.
pub fn resolve_seed(cli: Option<u64>, config: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(s) = cli.or(config) {
        return Ok(s);
    }
    match env {
        Some(raw) => raw
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}=`{raw}` is not a u64"))),
        None => Ok(0),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWaypoint {
    t: f64,
    pos: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: Option<String>,
    role: Option<NodeRole>,
    waypoints: Option<Vec<RawWaypoint>>,
    position: Option<[f64; 3]>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawLink {
    Pair([String; 2]),
    Named { tx: String, rx: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJammer {
    kind: Option<JammerKind>,
    node: Option<String>,
    eps_jmax: Option<f64>,
    j50: Option<f64>,
    j_slope: Option<f64>,
    on_mean: Option<f64>,
    off_mean: Option<f64>,
    pkt_rate: Option<f64>,
    pkt_airtime: Option<f64>,
    sense_prob: Option<f64>,
    sense_range: Option<f64>,
    reaction_delay: Option<f64>,
    /// `[t_on, t_off]`; a null `t_off` means "until the end".
    active_window: Option<(f64, Option<f64>)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    duration: Option<f64>,
    epoch_length: Option<f64>,
    attempts_per_epoch: Option<u64>,
    n_min: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    curve: Option<String>,
    sweep: Option<SweepSpec>,
    z: Option<f64>,
    n_runtime: Option<u64>,
}

#[derive(Default)]
struct Validator {
    issues: Vec<ValidationIssue>,
}

impl Validator {
    fn issue(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn parse<T: DeserializeOwned>(&mut self, path: &str, v: &Value) -> Option<T> {
        match T::deserialize(v) {
            Ok(t) => Some(t),
            Err(e) => {
                self.issue(path, e.to_string());
                None
            }
        }
    }

    fn scenario(&mut self, doc: &Value, base_dir: &Path) -> Option<ScenarioConfig> {
        let Some(obj) = doc.as_object() else {
            self.issue("$", "scenario must be a JSON object");
            return None;
        };
        const KNOWN: [&str; 7] = ["seed", "nodes", "links", "jammers", "link_params", "sim", "detector"];
        for key in obj.keys().filter(|k| !KNOWN.contains(&k.as_str())) {
            self.issue(key.clone(), "unknown key");
        }

        let seed = obj.get("seed").and_then(|v| self.parse::<u64>("seed", v));
        let link_params = match obj.get("link_params") {
            Some(v) => self.parse::<LinkParams>("link_params", v),
            None => Some(LinkParams::default()),
        };
        if let Some(Err(Error::Config(msg))) = link_params.map(|p| p.validate()) {
            self.issue("link_params", msg);
        }
        let sim = self.sim(obj.get("sim"));
        let nodes = self.nodes(obj.get("nodes"), sim.as_ref());
        let links = self.links(obj.get("links"), nodes.as_deref());
        let jammers = self.jammers(obj.get("jammers"), nodes.as_deref());
        let detector = self.detector(obj.get("detector"), sim.as_ref(), base_dir);

        Some(ScenarioConfig {
            nodes: nodes?,
            links: links?,
            jammers: jammers?,
            link_params: link_params?,
            sim: sim?,
            detector: detector?,
            seed,
        })
    }

    fn sim(&mut self, v: Option<&Value>) -> Option<SimParams> {
        let Some(v) = v else {
            self.issue("sim", "missing key");
            return None;
        };
        let raw: RawSim = self.parse("sim", v)?;
        let epoch_length = raw.epoch_length.unwrap_or(1.0);
        let attempts_per_epoch = raw.attempts_per_epoch.unwrap_or(50);
        let mut ok = true;
        if !(epoch_length > 0.0 && epoch_length.is_finite()) {
            self.issue("sim.epoch_length", format!("must be positive, got {epoch_length}"));
            ok = false;
        }
        if attempts_per_epoch == 0 {
            self.issue("sim.attempts_per_epoch", "must be >= 1");
            ok = false;
        }
        let duration = match raw.duration {
            None => {
                self.issue("sim.duration", "missing key");
                return None;
            }
            Some(d) if !(d > 0.0 && d.is_finite()) => {
                self.issue("sim.duration", format!("must be positive, got {d}"));
                return None;
            }
            Some(d) => d,
        };
        if ok && duration + 1e-9 * epoch_length < epoch_length {
            self.issue("sim.duration", format!("must cover at least one epoch ({epoch_length} s)"));
            ok = false;
        }
        ok.then_some(SimParams {
            duration,
            epoch_length,
            attempts_per_epoch,
            n_min: raw.n_min.unwrap_or(DEFAULT_N_MIN),
        })
    }

    fn nodes(&mut self, v: Option<&Value>, sim: Option<&SimParams>) -> Option<Vec<NodeSpec>> {
        let Some(v) = v else {
            self.issue("nodes", "missing key");
            return None;
        };
        let items: Vec<Value> = self.parse("nodes", v)?;
        let mut out = Vec::new();
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            let path = format!("nodes[{i}]");
            let Some(raw) = self.parse::<RawNode>(&path, item) else {
                ok = false;
                continue;
            };
            let Some(id) = raw.id.filter(|s| !s.is_empty()) else {
                self.issue(format!("{path}.id"), "missing key");
                ok = false;
                continue;
            };
            if out.iter().any(|n: &NodeSpec| n.id() == id) {
                self.issue(format!("{path}.id"), format!("duplicate node id `{id}`"));
                ok = false;
                continue;
            }
            let role = raw.role.unwrap_or(NodeRole::RangingNode);
            let waypoints = match (raw.waypoints, raw.position) {
                (Some(_), Some(_)) => {
                    self.issue(&path, "give either `waypoints` or `position`, not both");
                    ok = false;
                    continue;
                }
                (None, None) => {
                    self.issue(format!("{path}.waypoints"), "missing key (or `position`)");
                    ok = false;
                    continue;
                }
                (Some(w), None) => w
                    .into_iter()
                    .map(|w| Waypoint { t: w.t, pos: Position(w.pos) })
                    .collect(),
                (None, Some(p)) => vec![Waypoint { t: 0.0, pos: Position(p) }],
            };
            match NodeSpec::new(id, role, waypoints) {
                Ok(node) => {
                    if let (Some((start, end)), Some(sim)) = (node.span(), sim) {
                        if start > 0.0 || end < sim.duration {
                            self.issue(
                                format!("{path}.waypoints"),
                                format!("span [{start}, {end}] does not cover the run [0, {}]", sim.duration),
                            );
                            ok = false;
                        }
                    }
                    out.push(node);
                }
                Err(e) => {
                    self.issue(format!("{path}.waypoints"), e.to_string());
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn node_index(&mut self, path: &str, id: &str, nodes: &[NodeSpec], role: NodeRole) -> Option<usize> {
        match nodes.iter().position(|n| n.id() == id) {
            None => {
                self.issue(path, format!("unknown node id `{id}`"));
                None
            }
            Some(i) if nodes[i].role() != role => {
                self.issue(path, format!("node `{id}` has role {:?}, expected {role:?}", nodes[i].role()));
                None
            }
            Some(i) => Some(i),
        }
    }

    fn links(&mut self, v: Option<&Value>, nodes: Option<&[NodeSpec]>) -> Option<Vec<LinkSpec>> {
        let Some(v) = v else {
            self.issue("links", "missing key");
            return None;
        };
        let items: Vec<Value> = self.parse("links", v)?;
        if items.is_empty() {
            self.issue("links", "at least one link is required");
            return None;
        }
        let mut out = Vec::new();
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            let path = format!("links[{i}]");
            let Some(raw) = self.parse::<RawLink>(&path, item) else {
                ok = false;
                continue;
            };
            let (tx, rx) = match raw {
                RawLink::Pair([tx, rx]) => (tx, rx),
                RawLink::Named { tx, rx } => (tx, rx),
            };
            if tx == rx {
                self.issue(&path, format!("link endpoints must differ, both are `{tx}`"));
                ok = false;
                continue;
            }
            let Some(nodes) = nodes else { continue };
            let a = self.node_index(&path, &tx, nodes, NodeRole::RangingNode);
            let b = self.node_index(&path, &rx, nodes, NodeRole::RangingNode);
            match (a, b) {
                (Some(tx), Some(rx)) => out.push(LinkSpec { tx, rx }),
                _ => ok = false,
            }
        }
        (ok && nodes.is_some()).then_some(out)
    }

    fn jammers(&mut self, v: Option<&Value>, nodes: Option<&[NodeSpec]>) -> Option<Vec<JammerSpec>> {
        let Some(v) = v else { return Some(Vec::new()) };
        let items: Vec<Value> = self.parse("jammers", v)?;
        let mut out = Vec::new();
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            let path = format!("jammers[{i}]");
            let Some(raw) = self.parse::<RawJammer>(&path, item) else {
                ok = false;
                continue;
            };
            if raw.kind.is_none() {
                self.issue(format!("{path}.kind"), "missing key");
            }
            let Some(node_id) = raw.node.as_deref() else {
                self.issue(format!("{path}.node"), "missing key");
                ok = false;
                continue;
            };
            let (Some(kind), Some(nodes)) = (raw.kind, nodes) else {
                ok = false;
                continue;
            };
            let Some(idx) = self.node_index(&format!("{path}.node"), node_id, nodes, NodeRole::JammerHost) else {
                ok = false;
                continue;
            };
            let mut spec = JammerSpec::new(kind, nodes[idx].clone());
            let set = |slot: &mut f64, v: Option<f64>| {
                if let Some(v) = v {
                    *slot = v;
                }
            };
            set(&mut spec.eps_jmax, raw.eps_jmax);
            set(&mut spec.j50, raw.j50);
            set(&mut spec.j_slope, raw.j_slope);
            set(&mut spec.on_mean, raw.on_mean);
            set(&mut spec.off_mean, raw.off_mean);
            set(&mut spec.pkt_rate, raw.pkt_rate);
            set(&mut spec.pkt_airtime, raw.pkt_airtime);
            set(&mut spec.sense_prob, raw.sense_prob);
            set(&mut spec.sense_range, raw.sense_range);
            set(&mut spec.reaction_delay, raw.reaction_delay);
            if let Some((on, off)) = raw.active_window {
                spec.active_window = (on, off.unwrap_or(f64::INFINITY));
            }
            match spec.validate() {
                Ok(()) => out.push(spec),
                Err(e) => {
                    self.issue(&path, e.to_string());
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn detector(&mut self, v: Option<&Value>, sim: Option<&SimParams>, base_dir: &Path) -> Option<DetectorConfig> {
        let raw: RawDetector = match v {
            Some(v) => self.parse("detector", v)?,
            None => RawDetector { curve: None, sweep: None, z: None, n_runtime: None },
        };
        let curve = match (raw.curve, raw.sweep) {
            (Some(_), Some(_)) => {
                self.issue("detector", "give either `curve` or `sweep`, not both");
                return None;
            }
            (Some(path), None) => CurveSource::File(base_dir.join(path)),
            (None, sweep) => {
                let sweep = sweep.unwrap_or_default();
                if let Err(e) = sweep.grid() {
                    self.issue("detector.sweep", e.to_string());
                    return None;
                }
                CurveSource::Sweep(sweep)
            }
        };
        let z = raw.z.unwrap_or(4.0);
        if !(z >= 0.0 && z.is_finite()) {
            self.issue("detector.z", format!("must be non-negative, got {z}"));
            return None;
        }
        let n_runtime = raw.n_runtime.or(sim.map(|s| s.attempts_per_epoch)).unwrap_or(50);
        if n_runtime == 0 {
            self.issue("detector.n_runtime", "must be >= 1");
            return None;
        }
        Some(DetectorConfig {
            curve,
            margin: MarginPolicy { z, n_runtime },
        })
    }
}
