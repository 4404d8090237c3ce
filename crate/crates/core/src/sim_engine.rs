//! Fixed-step closed-loop simulation with zero-order-hold inputs.
//!
//! Each step: reference input, safety filter, log, integrate. Obstacles are
//! placed at `initial + velocity·t` directly rather than integrated, so
//! logged centers carry no accumulated rounding.

use crate::barriers::{evaluate, separation, BarrierError, BarrierEval, BarrierKind};
use crate::obstacles::{Obstacle, ObstacleShape, ObstacleState};
use crate::reference_control::{reference_input, Gains, Target};
use crate::safety_filter::{
    constraint_from_barrier, solve_active_set, Bound, ClassK, FilterError, FilterProblem,
    FilterStatus,
};
use crate::vehicle_models::{ModelError, ModelTag, Vec3, Vehicle, VehicleState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper limit on `duration / dt`; logs are kept in memory.
pub const MAX_STEPS: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("non-finite state after integration")]
    Numeric,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub integrator: Integrator,
    /// Recorded for reproducibility; the simulation itself draws no random numbers.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            duration: 10.0,
            integrator: Integrator::Rk4,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: String,
    pub vehicle: Vehicle,
    pub initial_state: VehicleState,
    pub target: Target,
    pub gains: Gains,
    pub bounds: Option<Vec<Bound>>,
    /// When false the agent applies its reference input unmodified.
    pub filtered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub agents: Vec<Agent>,
    pub obstacles: Vec<Obstacle>,
    pub barrier: BarrierKind,
    pub class_k: ClassK,
    pub weights: Option<Vec<f64>>,
    pub sim: SimConfig,
    pub start_unsafe: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    #[serde(rename = "COMPLETED")]
    Completed,
    #[serde(rename = "FAILED-INFEASIBLE")]
    FailedInfeasible,
    #[serde(rename = "FAILED-PENETRATION")]
    FailedPenetration,
    #[serde(rename = "FAILED-NUMERIC")]
    FailedNumeric,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "COMPLETED",
            RunStatus::FailedInfeasible => "FAILED-INFEASIBLE",
            RunStatus::FailedPenetration => "FAILED-PENETRATION",
            RunStatus::FailedNumeric => "FAILED-NUMERIC",
        }
    }

    pub fn is_failure(self) -> bool {
        self != RunStatus::Completed
    }
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What happened to the input at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Optimal,
    Infeasible,
    /// Agent runs without a filter.
    Unfiltered,
    /// Some obstacle is inside its conservative radius; no barrier values.
    Penetration,
    /// Barrier or reference evaluation failed numerically.
    Numeric,
}

impl StepStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            StepStatus::Optimal => "optimal",
            StepStatus::Infeasible => "infeasible",
            StepStatus::Unfiltered => "unfiltered",
            StepStatus::Penetration => "penetration",
            StepStatus::Numeric => "numeric",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            StepStatus::Optimal,
            StepStatus::Infeasible,
            StepStatus::Unfiltered,
            StepStatus::Penetration,
            StepStatus::Numeric,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }
}

/// Per-obstacle values at one step. Barrier fields are NaN when the barrier
/// could not be evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleRecord {
    pub h: f64,
    pub lfh: f64,
    pub lgh_u: f64,
    pub lgh_norm: f64,
    /// `‖p_rel‖` as the barrier measures it (projected for cylinders).
    pub distance: f64,
    pub center: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub state: Vec<f64>,
    pub u_ref: Vec<f64>,
    pub u_star: Vec<f64>,
    pub obstacles: Vec<ObstacleRecord>,
    pub status: StepStatus,
    pub active_set: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub label: String,
    pub agent_id: String,
    pub model: ModelTag,
    pub barrier: BarrierKind,
    pub obstacle_ids: Vec<String>,
    pub obstacle_radii: Vec<f64>,
    pub records: Vec<StepRecord>,
    pub status: RunStatus,
    pub failure: Option<String>,
}

/// Classical RK4 on a flat state with the input held by the caller.
pub fn rk4<F>(f: F, x: &[f64], dt: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let shifted = |k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let k1 = f(x);
    let k2 = f(&shifted(&k1, dt / 2.0));
    let k3 = f(&shifted(&k2, dt / 2.0));
    let k4 = f(&shifted(&k3, dt));
    x.iter()
        .enumerate()
        .map(|(i, xi)| xi + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

pub fn rk4_step(
    vehicle: &Vehicle,
    state: &VehicleState,
    input: &[f64],
    dt: f64,
) -> Result<VehicleState, SimError> {
    let k1 = vehicle.derivative(state, input)?;
    let k2 = vehicle.derivative(&state.axpy(dt / 2.0, &k1), input)?;
    let k3 = vehicle.derivative(&state.axpy(dt / 2.0, &k2), input)?;
    let k4 = vehicle.derivative(&state.axpy(dt, &k3), input)?;
    let next = state
        .axpy(dt / 6.0, &k1)
        .axpy(dt / 3.0, &k2)
        .axpy(dt / 3.0, &k3)
        .axpy(dt / 6.0, &k4);
    if !next.is_finite() {
        return Err(SimError::Numeric);
    }
    Ok(next)
}

pub fn euler_step(
    vehicle: &Vehicle,
    state: &VehicleState,
    input: &[f64],
    dt: f64,
) -> Result<VehicleState, SimError> {
    let next = state.axpy(dt, &vehicle.derivative(state, input)?);
    if !next.is_finite() {
        return Err(SimError::Numeric);
    }
    Ok(next)
}

fn integrate(
    cfg: &SimConfig,
    vehicle: &Vehicle,
    state: &VehicleState,
    input: &[f64],
) -> Result<VehicleState, SimError> {
    match cfg.integrator {
        Integrator::Rk4 => rk4_step(vehicle, state, input, cfg.dt),
        Integrator::Euler => euler_step(vehicle, state, input, cfg.dt),
    }
}

/// Another agent seen as a circular obstacle moving at its current velocity.
pub(crate) fn agent_as_obstacle(
    agent: &Agent,
    state: &VehicleState,
) -> Result<Obstacle, ModelError> {
    let mut center = agent.vehicle.reference_point(state)?;
    let mut velocity = agent.vehicle.reference_velocity(state)?;
    center.z = 0.0;
    velocity.z = 0.0;
    let radius = 0.5 * agent.vehicle.width();
    Ok(Obstacle {
        id: format!("agent:{}", agent.id),
        shape: ObstacleShape::PlanarEllipse {
            c1: radius,
            c2: radius,
        },
        state: ObstacleState { center, velocity },
    })
}

impl Scenario {
    /// Structural checks shared by every entry point.
    pub fn check(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Invalid(m));
        if !(self.sim.dt > 0.0 && self.sim.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.sim.dt));
        }
        if !(self.sim.duration > 0.0 && self.sim.duration.is_finite()) {
            return bad(format!("duration must be positive, got {}", self.sim.duration));
        }
        if self.sim.duration / self.sim.dt > MAX_STEPS as f64 {
            return bad(format!("duration / dt exceeds {MAX_STEPS} steps"));
        }
        if self.agents.is_empty() {
            return bad("no agents".into());
        }
        if !(self.class_k.gamma > 0.0) {
            return bad(format!("class-K gamma must be positive, got {}", self.class_k.gamma));
        }
        if let BarrierKind::Hocbf { gamma } = self.barrier {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return bad(format!("hocbf gamma must be positive, got {gamma}"));
            }
        }
        for a in &self.agents {
            a.vehicle.validate()?;
            if a.initial_state.tag() != a.vehicle.tag() {
                return Err(ModelError::ModelMismatch.into());
            }
            if !a.initial_state.is_finite() {
                return Err(ModelError::NonFinite("initial state").into());
            }
            if !a.gains.is_valid() {
                return bad(format!("agent {}: gains must be nonnegative", a.id));
            }
            if let Some(b) = &a.bounds {
                if b.len() != a.vehicle.input_dim() {
                    return bad(format!("agent {}: {} bounds for {} inputs", a.id, b.len(), a.vehicle.input_dim()));
                }
            }
        }
        if self.agents.len() > 1 && !self.agents.iter().all(|a| a.vehicle.tag().is_planar()) {
            return bad("multi-agent runs need planar models".into());
        }
        for o in &self.obstacles {
            o.validate().map_err(|e| SimError::Invalid(format!("obstacle {}: {e}", o.id)))?;
        }
        Ok(())
    }

    pub fn with_barrier(&self, kind: BarrierKind) -> Scenario {
        Scenario {
            barrier: kind,
            ..self.clone()
        }
    }

    pub fn obstacles_at(&self, t: f64) -> Vec<Obstacle> {
        self.obstacles.iter().map(|o| o.advance(t)).collect()
    }
}

struct StepOutcome {
    record: StepRecord,
    failure: Option<(RunStatus, String)>,
}

fn nan_record(center: Vec3, distance: f64) -> ObstacleRecord {
    ObstacleRecord {
        h: f64::NAN,
        lfh: f64::NAN,
        lgh_u: f64::NAN,
        lgh_norm: f64::NAN,
        distance,
        center,
    }
}

fn step_agent(
    sc: &Scenario,
    agent: &Agent,
    state: &VehicleState,
    obstacles: &[Obstacle],
    t: f64,
) -> StepOutcome {
    let m = agent.vehicle.input_dim();
    let mut record = StepRecord {
        t,
        state: state.to_vec(),
        u_ref: vec![f64::NAN; m],
        u_star: vec![f64::NAN; m],
        obstacles: Vec::with_capacity(obstacles.len()),
        status: StepStatus::Numeric,
        active_set: Vec::new(),
    };
    let fail = |record: StepRecord, status, msg: String| StepOutcome {
        record,
        failure: Some((status, msg)),
    };

    let u_ref = match reference_input(&agent.vehicle, state, &agent.target, &agent.gains) {
        Ok(u) => u,
        Err(e) => return fail(record, RunStatus::FailedNumeric, format!("reference: {e}")),
    };
    record.u_ref = u_ref.clone();
    record.u_star = u_ref.clone();

    let mut seps = Vec::with_capacity(obstacles.len());
    for o in obstacles {
        match separation(&agent.vehicle, state, o) {
            Ok(s) => seps.push(s),
            Err(e) => return fail(record, RunStatus::FailedNumeric, format!("separation: {e}")),
        }
    }
    if let Some((o, s)) = obstacles.iter().zip(&seps).find(|(_, s)| !(s.distance > s.radius)) {
        record.obstacles = obstacles
            .iter()
            .zip(&seps)
            .map(|(o, s)| nan_record(o.state.center, s.distance))
            .collect();
        record.status = StepStatus::Penetration;
        let msg = format!(
            "t={t}: inside obstacle {} (distance {} <= radius {})",
            o.id, s.distance, s.radius
        );
        return fail(record, RunStatus::FailedPenetration, msg);
    }

    let evals: Result<Vec<BarrierEval>, BarrierError> = obstacles
        .iter()
        .map(|o| evaluate(&agent.vehicle, state, o, sc.barrier))
        .collect();
    let evals = match evals {
        Ok(e) => e,
        Err(e) => {
            record.obstacles = obstacles
                .iter()
                .zip(&seps)
                .map(|(o, s)| nan_record(o.state.center, s.distance))
                .collect();
            return fail(record, RunStatus::FailedNumeric, format!("barrier: {e}"));
        }
    };

    let mut failure = None;
    if agent.filtered {
        let problem = FilterProblem {
            u_ref: u_ref.clone(),
            constraints: evals.iter().map(|e| constraint_from_barrier(e, sc.class_k)).collect(),
            bounds: agent.bounds.clone(),
            weights: sc.weights.clone(),
        };
        match solve_active_set(&problem) {
            Ok(r) if r.status == FilterStatus::Optimal => {
                record.u_star = r.u_star;
                record.active_set = r.active_set;
                record.status = StepStatus::Optimal;
            }
            Ok(_) => {
                record.status = StepStatus::Infeasible;
                failure = Some((RunStatus::FailedInfeasible, format!("t={t}: safety filter infeasible")));
            }
            Err(FilterError::IterationLimit(n)) => {
                failure = Some((RunStatus::FailedNumeric, format!("t={t}: QP exceeded {n} pivots")));
            }
            Err(e) => failure = Some((RunStatus::FailedNumeric, format!("t={t}: {e}"))),
        }
    } else {
        record.status = StepStatus::Unfiltered;
    }
    record.obstacles = obstacles
        .iter()
        .zip(&seps)
        .zip(&evals)
        .map(|((o, s), e)| ObstacleRecord {
            h: e.h,
            lfh: e.lfh,
            lgh_u: e.lgh.iter().zip(&record.u_star).map(|(a, b)| a * b).sum(),
            lgh_norm: e.lgh_norm(),
            distance: s.distance,
            center: o.state.center,
        })
        .collect();
    StepOutcome { record, failure }
}

/// Runs every agent of the scenario in lockstep and returns one log per agent.
///
/// Each agent filters against the real obstacles followed by every other
/// agent, modeled as a circle of half its width moving at its current
/// velocity. A failure of any agent stops the run for all of them.
pub fn multi_agent_run(sc: &Scenario) -> Vec<TrajectoryLog> {
    let n = sc.sim.steps();
    let mut states: Vec<VehicleState> = sc.agents.iter().map(|a| a.initial_state).collect();
    let mut logs: Vec<TrajectoryLog> = sc
        .agents
        .iter()
        .map(|a| {
            let mut ids: Vec<String> = sc.obstacles.iter().map(|o| o.id.clone()).collect();
            let mut radii: Vec<f64> = sc
                .obstacles
                .iter()
                .map(|o| o.effective_radius(a.vehicle.width()))
                .collect();
            for other in sc.agents.iter().filter(|o| o.id != a.id) {
                ids.push(format!("agent:{}", other.id));
                radii.push(0.5 * other.vehicle.width() + 0.5 * a.vehicle.width());
            }
            TrajectoryLog {
                label: sc.label.clone(),
                agent_id: a.id.clone(),
                model: a.vehicle.tag(),
                barrier: sc.barrier,
                obstacle_ids: ids,
                obstacle_radii: radii,
                records: Vec::with_capacity((n + 1).min(MAX_STEPS + 1)),
                status: RunStatus::Completed,
                failure: None,
            }
        })
        .collect();

    if let Err(e) = sc.check() {
        for log in &mut logs {
            log.status = RunStatus::FailedNumeric;
            log.failure = Some(e.to_string());
        }
        return logs;
    }

    for k in 0..=n {
        let t = k as f64 * sc.sim.dt;
        let world = sc.obstacles_at(t);
        let mut stop: Option<(RunStatus, String)> = None;
        let mut inputs = Vec::with_capacity(sc.agents.len());
        for (i, agent) in sc.agents.iter().enumerate() {
            let mut obstacles = world.clone();
            for (j, other) in sc.agents.iter().enumerate() {
                if j == i {
                    continue;
                }
                match agent_as_obstacle(other, &states[j]) {
                    Ok(o) => obstacles.push(o),
                    Err(e) => {
                        stop.get_or_insert((RunStatus::FailedNumeric, e.to_string()));
                    }
                }
            }
            let out = step_agent(sc, agent, &states[i], &obstacles, t);
            if let Some(f) = out.failure {
                logs[i].status = f.0;
                logs[i].failure = Some(f.1.clone());
                stop.get_or_insert(f);
            }
            inputs.push(out.record.u_star.clone());
            logs[i].records.push(out.record);
        }
        if let Some((status, msg)) = stop {
            for log in &mut logs {
                if log.failure.is_none() {
                    log.status = status;
                    log.failure = Some(format!("stopped with the run: {msg}"));
                }
            }
            return logs;
        }
        if k == n {
            break;
        }
        for (i, agent) in sc.agents.iter().enumerate() {
            match integrate(&sc.sim, &agent.vehicle, &states[i], &inputs[i]) {
                Ok(next) => states[i] = next,
                Err(e) => {
                    stop.get_or_insert((RunStatus::FailedNumeric, format!("t={t}: {e}")));
                }
            }
        }
        if let Some((status, msg)) = stop {
            for log in &mut logs {
                log.status = status;
                log.failure = Some(msg.clone());
            }
            return logs;
        }
    }
    logs
}

/// Single-agent run; uses the first agent of the scenario.
pub fn run(sc: &Scenario) -> TrajectoryLog {
    if sc.agents.len() <= 1 {
        return multi_agent_run(sc).into_iter().next().unwrap_or_else(|| TrajectoryLog {
            label: sc.label.clone(),
            agent_id: String::new(),
            model: ModelTag::PointMass,
            barrier: sc.barrier,
            obstacle_ids: Vec::new(),
            obstacle_radii: Vec::new(),
            records: Vec::new(),
            status: RunStatus::FailedNumeric,
            failure: Some("no agents".into()),
        });
    }
    multi_agent_run(sc).swap_remove(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSummary {
    pub id: String,
    pub min_margin: f64,
    pub min_h: f64,
    pub first_violation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionReport {
    pub obstacles: Vec<ObstacleSummary>,
}

impl CollisionReport {
    pub fn min_margin(&self) -> f64 {
        self.obstacles.iter().map(|o| o.min_margin).fold(f64::INFINITY, f64::min)
    }

    pub fn min_h(&self) -> f64 {
        self.obstacles.iter().map(|o| o.min_h).fold(f64::INFINITY, f64::min)
    }

    pub fn first_violation(&self) -> Option<f64> {
        self.obstacles
            .iter()
            .filter_map(|o| o.first_violation)
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// Minima of margin and `h` per obstacle over the log; a violation is
/// `‖p_rel‖ < r`. NaN barrier values (failed steps) are skipped for `min_h`.
pub fn collision_report(log: &TrajectoryLog) -> CollisionReport {
    let obstacles = log
        .obstacle_ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let r = log.obstacle_radii[i];
            let mut s = ObstacleSummary {
                id: id.clone(),
                min_margin: f64::INFINITY,
                min_h: f64::INFINITY,
                first_violation: None,
            };
            for rec in &log.records {
                let o = &rec.obstacles[i];
                let margin = o.distance - r;
                s.min_margin = s.min_margin.min(margin);
                if !o.h.is_nan() {
                    s.min_h = s.min_h.min(o.h);
                }
                if o.distance < r && s.first_violation.is_none() {
                    s.first_violation = Some(rec.t);
                }
            }
            s
        })
        .collect();
    CollisionReport { obstacles }
}

/// Largest `h(0)·e^{−γt} − h(t)` over the log and obstacles.
pub fn envelope_deficit(log: &TrajectoryLog, gamma: f64) -> f64 {
    let Some(first) = log.records.first() else {
        return 0.0;
    };
    let mut worst = f64::NEG_INFINITY;
    for rec in &log.records {
        for (o, o0) in rec.obstacles.iter().zip(&first.obstacles) {
            if o.h.is_nan() {
                continue;
            }
            worst = worst.max(o0.h * (-gamma * rec.t).exp() - o.h);
        }
    }
    worst
}
