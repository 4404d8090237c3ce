//! Scenario files: JSON in SI units, parsed strictly.
//!
//! ```json
//! {
//!   "label": "unicycle_static_turn",
//!   "model": "unicycle",
//!   "params": { "l": 0.1, "width": 0.2 },
//!   "initial_state": { "x": 0, "y": 0, "theta": 0, "v": 0, "omega": 0 },
//!   "obstacles": [
//!     { "id": "o1", "shape": { "type": "ellipse", "c1": 0.5, "c2": 0.5 },
//!       "center": [4.0, 0.3], "velocity": [0, 0] }
//!   ],
//!   "barrier": { "kind": "c3bf", "class_k": 1.0 },
//!   "target": { "type": "constant_velocity", "speed": 1.0, "heading": 0.0 },
//!   "bounds": { "lower": [-3, null], "upper": [3, null] },
//!   "sim": { "dt": 0.01, "duration": 10, "seed": 0 },
//!   "flags": { "start_unsafe": false }
//! }
//! ```
//!
//! `agents` replaces `initial_state` and `target` for multi-agent runs; each
//! agent carries its own `initial_state` and `target` and may override
//! `model`, `params`, `gains` and `bounds`.

use crate::barriers::{evaluate, separation, BarrierKind};
use crate::obstacles::{Obstacle, ObstacleShape, ObstacleState, DEFAULT_CYLINDER_RATIO};
use crate::reference_control::{Gains, Target};
use crate::safety_filter::{Bound, ClassK};
use crate::sim_engine::{agent_as_obstacle, Agent, Integrator, Scenario, SimConfig};
use crate::vehicle_models::{
    BicycleParams, BicycleState, ModelTag, PointMassParams, PointMassState, QuadrotorParams,
    QuadrotorState, UnicycleParams, UnicycleState, Vec3, Vehicle, VehicleState,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use std::path::Path;
use thiserror::Error;

/// Slack allowed on `h(0) ≥ 0` for rounding in the initial evaluation.
const INITIAL_H_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("malformed JSON at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("schema error at `{path}`: {msg}")]
    Schema { path: String, msg: String },
    #[error("{0}")]
    Semantic(String),
}

fn schema(path: impl Into<String>, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema {
        path: path.into(),
        msg: msg.into(),
    }
}

fn semantic(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Semantic(msg.into())
}

fn join(prefix: &str, rest: &str) -> String {
    match (prefix.is_empty(), rest.is_empty()) {
        (true, _) => rest.to_string(),
        (_, true) => prefix.to_string(),
        _ if rest.starts_with('[') => format!("{prefix}{rest}"),
        _ => format!("{prefix}.{rest}"),
    }
}

/// Name of a missing key; serde reports it against the parent path.
fn missing_key(msg: &str) -> Option<&str> {
    msg.strip_prefix("missing field `")?.split('`').next()
}

fn from_path_error(prefix: &str, e: serde_path_to_error::Error<serde_json::Error>) -> ScenarioError {
    let inner = e.inner();
    match inner.classify() {
        serde_json::error::Category::Syntax | serde_json::error::Category::Eof => ScenarioError::Parse {
            line: inner.line(),
            column: inner.column(),
            msg: inner.to_string(),
        },
        _ => {
            let mut path = e.path().to_string();
            if path == "." {
                path.clear();
            }
            let mut msg = inner.to_string();
            // drop serde_json's position suffix; the path is more useful
            if let Some(i) = msg.find(" at line ") {
                msg.truncate(i);
            }
            if let Some(key) = missing_key(&msg) {
                path = join(&path, key);
            }
            schema(join(prefix, &path), msg)
        }
    }
}

fn parse_value<T: DeserializeOwned>(prefix: &str, v: Value) -> Result<T, ScenarioError> {
    serde_path_to_error::deserialize(v).map_err(|e| from_path_error(prefix, e))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    label: Option<String>,
    model: ModelTag,
    #[serde(default)]
    params: Option<Value>,
    #[serde(default)]
    initial_state: Option<Value>,
    #[serde(default)]
    obstacles: Vec<Value>,
    barrier: RawBarrier,
    #[serde(default)]
    target: Option<Value>,
    #[serde(default)]
    gains: Option<Gains>,
    #[serde(default)]
    bounds: Option<RawBounds>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
    #[serde(default)]
    sim: RawSim,
    #[serde(default)]
    agents: Option<Vec<Value>>,
    #[serde(default)]
    flags: RawFlags,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum RawBarrierKind {
    C3bf,
    Hocbf,
    Ellipse,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBarrier {
    kind: RawBarrierKind,
    /// HOCBF speed constant, m/s.
    #[serde(default)]
    gamma: Option<f64>,
    /// Slope of the linear class-K function, 1/s.
    #[serde(default)]
    class_k: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    #[serde(default)]
    lower: Option<Vec<Option<f64>>>,
    #[serde(default)]
    upper: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    #[serde(default)]
    dt: Option<f64>,
    #[serde(default)]
    duration: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    integrator: Option<Integrator>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlags {
    #[serde(default)]
    start_unsafe: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    id: String,
    #[serde(default)]
    model: Option<ModelTag>,
    #[serde(default)]
    params: Option<Value>,
    initial_state: Value,
    target: Value,
    #[serde(default)]
    gains: Option<Gains>,
    #[serde(default)]
    bounds: Option<RawBounds>,
    #[serde(default = "yes")]
    filtered: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObstacle {
    #[serde(default)]
    id: Option<String>,
    shape: Value,
    center: Vec<f64>,
    #[serde(default)]
    velocity: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawShape {
    Ellipse { c1: f64, c2: f64 },
    Ellipsoid { c1: f64, c2: f64, c3: f64 },
    Sphere { radius: f64 },
    Cylinder { axis: [f64; 3], height: f64, radii: [f64; 2] },
    /// Ellipsoid or cylinder, decided by the semi-axis ratio.
    Auto {
        semi_axes: [f64; 3],
        #[serde(default)]
        ratio: Option<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawTarget {
    ConstantVelocity {
        speed: f64,
        heading: f64,
        #[serde(default)]
        altitude: Option<f64>,
    },
    Waypoint { point: Vec<f64>, speed: f64 },
}

fn vehicle_from(model: ModelTag, params: Option<Value>, path: &str) -> Result<Vehicle, ScenarioError> {
    let params = params.unwrap_or_else(|| Value::Object(Default::default()));
    Ok(match model {
        ModelTag::Unicycle => Vehicle::Unicycle(parse_value::<UnicycleParams>(path, params)?),
        ModelTag::Bicycle => Vehicle::Bicycle(parse_value::<BicycleParams>(path, params)?),
        ModelTag::Quadrotor => Vehicle::Quadrotor(parse_value::<QuadrotorParams>(path, params)?),
        ModelTag::PointMass => Vehicle::PointMass(parse_value::<PointMassParams>(path, params)?),
    })
}

fn state_from(model: ModelTag, v: Value, path: &str) -> Result<VehicleState, ScenarioError> {
    Ok(match model {
        ModelTag::Unicycle => VehicleState::Unicycle(parse_value::<UnicycleState>(path, v)?),
        ModelTag::Bicycle => VehicleState::Bicycle(parse_value::<BicycleState>(path, v)?),
        ModelTag::Quadrotor => VehicleState::Quadrotor(parse_value::<QuadrotorState>(path, v)?),
        ModelTag::PointMass => VehicleState::PointMass(parse_value::<PointMassState>(path, v)?),
    })
}

/// `[x, y]` or `[x, y, z]`; planar worlds reject a nonzero `z`.
fn point_from(v: &[f64], planar: bool, path: &str) -> Result<Vec3, ScenarioError> {
    let p = match (v.len(), planar) {
        (2, true) => Vec3::new(v[0], v[1], 0.0),
        (3, _) => Vec3::new(v[0], v[1], v[2]),
        (n, true) => return Err(schema(path, format!("expected 2 or 3 components, got {n}"))),
        (n, false) => return Err(schema(path, format!("expected 3 components, got {n}"))),
    };
    if !p.iter().all(|x| x.is_finite()) {
        return Err(schema(path, "components must be finite"));
    }
    if planar && p.z != 0.0 {
        return Err(semantic(format!("{path}: planar model with nonzero z = {}", p.z)));
    }
    Ok(p)
}

fn target_from(v: Value, planar: bool, path: &str) -> Result<Target, ScenarioError> {
    let t = match parse_value::<RawTarget>(path, v)? {
        RawTarget::ConstantVelocity {
            speed,
            heading,
            altitude,
        } => Target::ConstantVelocity {
            speed,
            heading,
            altitude,
        },
        RawTarget::Waypoint { point, speed } => Target::Waypoint {
            point: point_from(&point, planar, &join(path, "point"))?,
            speed,
        },
    };
    let speed = match t {
        Target::ConstantVelocity { speed, .. } | Target::Waypoint { speed, .. } => speed,
    };
    if !(speed >= 0.0 && speed.is_finite()) {
        return Err(semantic(format!("{path}.speed must be nonnegative, got {speed}")));
    }
    Ok(t)
}

fn bounds_from(raw: &RawBounds, m: usize, path: &str) -> Result<Vec<Bound>, ScenarioError> {
    let side = |v: &Option<Vec<Option<f64>>>, name: &str| -> Result<Vec<Option<f64>>, ScenarioError> {
        match v {
            None => Ok(vec![None; m]),
            Some(v) if v.len() == m => Ok(v.clone()),
            Some(v) => Err(schema(
                join(path, name),
                format!("expected {m} entries, got {}", v.len()),
            )),
        }
    };
    let lo = side(&raw.lower, "lower")?;
    let hi = side(&raw.upper, "upper")?;
    let bounds: Vec<Bound> = lo.into_iter().zip(hi).map(|(lo, hi)| Bound { lo, hi }).collect();
    for (i, b) in bounds.iter().enumerate() {
        if let (Some(lo), Some(hi)) = (b.lo, b.hi) {
            if !(lo <= hi) {
                return Err(semantic(format!("{path}: lower[{i}] = {lo} exceeds upper[{i}] = {hi}")));
            }
        }
    }
    Ok(bounds)
}

fn shape_from(v: Value, path: &str) -> Result<ObstacleShape, ScenarioError> {
    Ok(match parse_value::<RawShape>(path, v)? {
        RawShape::Ellipse { c1, c2 } => ObstacleShape::PlanarEllipse { c1, c2 },
        RawShape::Ellipsoid { c1, c2, c3 } => ObstacleShape::Ellipsoid { c1, c2, c3 },
        RawShape::Sphere { radius } => ObstacleShape::Ellipsoid {
            c1: radius,
            c2: radius,
            c3: radius,
        },
        RawShape::Cylinder { axis, height, radii } => ObstacleShape::Cylinder {
            axis: Vec3::from(axis),
            height,
            radii: (radii[0], radii[1]),
        },
        RawShape::Auto { semi_axes, ratio } => {
            let [c1, c2, c3] = semi_axes;
            ObstacleShape::from_semi_axes(c1, c2, c3, ratio.unwrap_or(DEFAULT_CYLINDER_RATIO))
        }
    })
}

fn obstacle_from(v: Value, index: usize, planar: bool) -> Result<Obstacle, ScenarioError> {
    let path = format!("obstacles[{index}]");
    let raw: RawObstacle = parse_value(&path, v)?;
    let shape = shape_from(raw.shape, &join(&path, "shape"))?;
    match (&shape, planar) {
        (ObstacleShape::PlanarEllipse { .. }, false) => {
            return Err(semantic(format!("{path}: planar ellipse in a 3D world")))
        }
        (ObstacleShape::Ellipsoid { .. } | ObstacleShape::Cylinder { .. }, true) => {
            return Err(semantic(format!("{path}: planar models take `ellipse` obstacles")))
        }
        _ => {}
    }
    let center = point_from(&raw.center, planar, &join(&path, "center"))?;
    let velocity = match raw.velocity {
        Some(v) => point_from(&v, planar, &join(&path, "velocity"))?,
        None => Vec3::zeros(),
    };
    let o = Obstacle {
        id: raw.id.unwrap_or_else(|| format!("o{index}")),
        shape,
        state: ObstacleState { center, velocity },
    };
    o.validate().map_err(|e| semantic(format!("{path}: {e}")))?;
    Ok(o)
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, sc: &mut Scenario) {
        if let Some(dt) = self.dt {
            sc.sim.dt = dt;
        }
        if let Some(d) = self.duration {
            sc.sim.duration = d;
        }
        if let Some(s) = self.seed {
            sc.sim.seed = s;
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(&mut de).map_err(|e| from_path_error("", e))?;
    de.end().map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let sc = build(raw)?;
    check_semantics(&sc)?;
    Ok(sc)
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let mut sc = parse_scenario_str(&text)?;
    if sc.label.is_empty() {
        if let Some(stem) = path.file_stem() {
            sc.label = stem.to_string_lossy().into_owned();
        }
    }
    Ok(sc)
}

fn build(raw: RawScenario) -> Result<Scenario, ScenarioError> {
    let barrier = match raw.barrier.kind {
        RawBarrierKind::C3bf | RawBarrierKind::Ellipse if raw.barrier.gamma.is_some() => {
            return Err(schema("barrier.gamma", "only meaningful for kind `hocbf`"));
        }
        RawBarrierKind::C3bf => BarrierKind::C3bf,
        RawBarrierKind::Ellipse => BarrierKind::Ellipse,
        RawBarrierKind::Hocbf => match raw.barrier.gamma {
            Some(gamma) => BarrierKind::Hocbf { gamma },
            None => return Err(schema("barrier.gamma", "required when kind is `hocbf`")),
        },
    };
    let class_k = ClassK {
        gamma: raw.barrier.class_k.unwrap_or(1.0),
    };

    let default_gains = raw.gains.unwrap_or_default();
    let agents = match (raw.agents, raw.initial_state) {
        (Some(_), Some(_)) => {
            return Err(schema("agents", "give either `agents` or `initial_state`, not both"))
        }
        (None, None) => return Err(schema("initial_state", "missing field `initial_state`")),
        (None, Some(state)) => {
            let vehicle = vehicle_from(raw.model, raw.params, "params")?;
            let target = match raw.target {
                Some(t) => target_from(t, raw.model.is_planar(), "target")?,
                None => return Err(schema("target", "missing field `target`")),
            };
            let bounds = match &raw.bounds {
                Some(b) => Some(bounds_from(b, raw.model.input_dim(), "bounds")?),
                None => None,
            };
            vec![Agent {
                id: "ego".into(),
                vehicle,
                initial_state: state_from(raw.model, state, "initial_state")?,
                target,
                gains: default_gains,
                bounds,
                filtered: true,
            }]
        }
        (Some(list), None) => {
            if raw.target.is_some() {
                return Err(schema("target", "targets belong to each agent when `agents` is given"));
            }
            let mut agents = Vec::with_capacity(list.len());
            for (i, v) in list.into_iter().enumerate() {
                let path = format!("agents[{i}]");
                let a: RawAgent = parse_value(&path, v)?;
                let model = a.model.unwrap_or(raw.model);
                let params = a.params.or_else(|| raw.params.clone());
                let bounds = match a.bounds.as_ref().or(raw.bounds.as_ref()) {
                    Some(b) => Some(bounds_from(b, model.input_dim(), &join(&path, "bounds"))?),
                    None => None,
                };
                if agents.iter().any(|x: &Agent| x.id == a.id) {
                    return Err(semantic(format!("{path}: duplicate agent id `{}`", a.id)));
                }
                agents.push(Agent {
                    id: a.id,
                    vehicle: vehicle_from(model, params, &join(&path, "params"))?,
                    initial_state: state_from(model, a.initial_state, &join(&path, "initial_state"))?,
                    target: target_from(a.target, model.is_planar(), &join(&path, "target"))?,
                    gains: a.gains.unwrap_or(default_gains),
                    bounds,
                    filtered: a.filtered,
                });
            }
            agents
        }
    };

    let planar = raw.model.is_planar();
    let obstacles = raw
        .obstacles
        .into_iter()
        .enumerate()
        .map(|(i, v)| obstacle_from(v, i, planar))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, o) in obstacles.iter().enumerate() {
        if obstacles[..i].iter().any(|p| p.id == o.id) {
            return Err(semantic(format!("obstacles[{i}]: duplicate id `{}`", o.id)));
        }
    }

    let defaults = SimConfig::default();
    Ok(Scenario {
        label: raw.label.unwrap_or_default(),
        agents,
        obstacles,
        barrier,
        class_k,
        weights: raw.weights,
        sim: SimConfig {
            dt: raw.sim.dt.unwrap_or(defaults.dt),
            duration: raw.sim.duration.unwrap_or(defaults.duration),
            integrator: raw.sim.integrator.unwrap_or(defaults.integrator),
            seed: raw.sim.seed.unwrap_or(defaults.seed),
        },
        start_unsafe: raw.flags.start_unsafe,
    })
}

/// Everything `agent` must avoid at `t = 0`: the real obstacles and the
/// other agents.
pub fn initial_view(sc: &Scenario, agent: usize) -> Result<Vec<Obstacle>, ScenarioError> {
    let mut view = sc.obstacles.clone();
    for (j, other) in sc.agents.iter().enumerate() {
        if j != agent {
            view.push(
                agent_as_obstacle(other, &other.initial_state)
                    .map_err(|e| semantic(format!("agent {}: {e}", other.id)))?,
            );
        }
    }
    Ok(view)
}

/// Checks that need the whole scenario: model consistency, clearance and
/// the sign of the initial barrier values.
pub fn check_semantics(sc: &Scenario) -> Result<(), ScenarioError> {
    sc.check().map_err(|e| semantic(e.to_string()))?;
    if sc.agents.iter().map(|a| a.vehicle.tag().is_planar()).any(|p| p != sc.agents[0].vehicle.tag().is_planar()) {
        return Err(semantic("agents mix planar and spatial models"));
    }
    if let Some(w) = &sc.weights {
        for a in &sc.agents {
            if w.len() != a.vehicle.input_dim() || !w.iter().all(|x| *x > 0.0 && x.is_finite()) {
                return Err(semantic(format!(
                    "weights must be {} positive numbers for agent {}",
                    a.vehicle.input_dim(),
                    a.id
                )));
            }
        }
    }
    if sc.agents.len() > 1 && sc.agents.iter().any(|a| !(a.vehicle.width() > 0.0)) {
        return Err(semantic("multi-agent runs need positive vehicle widths"));
    }
    for (i, agent) in sc.agents.iter().enumerate() {
        for o in initial_view(sc, i)? {
            let sep = separation(&agent.vehicle, &agent.initial_state, &o)
                .map_err(|e| semantic(format!("agent {} / {}: {e}", agent.id, o.id)))?;
            if !(sep.distance > sep.radius) {
                return Err(semantic(format!(
                    "agent {} starts inside obstacle {} (distance {} <= radius {})",
                    agent.id, o.id, sep.distance, sep.radius
                )));
            }
            let e = evaluate(&agent.vehicle, &agent.initial_state, &o, sc.barrier)
                .map_err(|e| semantic(format!("agent {} / {}: {e}", agent.id, o.id)))?;
            if e.h < -INITIAL_H_TOL && !sc.start_unsafe {
                return Err(semantic(format!(
                    "agent {} / {}: initial h = {} < 0; set flags.start_unsafe to allow",
                    agent.id, o.id, e.h
                )));
            }
        }
    }
    Ok(())
}
