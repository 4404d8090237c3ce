//! Self-checks run by `c3bf validate` and the acceptance test.
//!
//! Every check is seeded and deterministic. [`acceptance`] covers the
//! numbered criteria, [`module_invariants`] the per-module properties that
//! are not already part of a criterion.

use crate::barriers::{
    cone_terms, evaluate, hocbf_effective_angle, lgh_degeneracy_report, numeric_hdot, projector,
    sample_case, BarrierError, BarrierEval, BarrierKind, Degeneracy, EffectiveCone, Pairing,
    DEGENERACY_THRESHOLD,
};
use crate::corpus;
use crate::obstacles::{effective_radius, Obstacle, ObstacleShape};
use crate::reference_control::{pd_unicycle, reference_input, wrap_angle, Gains, Target};
use crate::safety_filter::{
    filter, kkt_residuals, solve_active_set, Bound, FilterProblem, FilterStatus, LinearConstraint,
};
use crate::scenario::initial_view;
use crate::sim_engine::{
    collision_report, envelope_deficit, multi_agent_run, rk4, rk4_step, RunStatus, Scenario,
};
use crate::trajectory_csv::{parse_csv, to_csv_string};
use crate::vehicle_models::{
    euler_rate_map, rotation_matrix, ModelTag, QuadrotorParams, QuadrotorState, UnicycleParams,
    UnicycleState, Vec3, Vehicle, VehicleState,
};
use nalgebra::{Matrix3, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

/// Sensitivity `‖Δu⋆‖/‖Δx‖` above which the Lipschitz spot check fails.
pub const LIPSCHITZ_LIMIT: f64 = 1e4;

/// Scenario used for the high-speed comparison.
pub const HIGH_SPEED_SCENARIO: &str = "point_mass_high_speed";

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// Acceptance criterion number, `None` for module invariants.
    pub criterion: Option<u8>,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(criterion: Option<u8>, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            criterion,
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.criterion {
            Some(c) => format!("[{c}]"),
            None => "[-]".into(),
        };
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {tag} {}: {}", self.name, self.detail)
    }
}

/// Signature of a barrier evaluator; [`evaluate`] in production, a corrupted
/// copy in mutation tests.
pub type Evaluator = dyn Fn(&Vehicle, &VehicleState, &Obstacle, BarrierKind) -> Result<BarrierEval, BarrierError>;

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

fn kinds() -> [BarrierKind; 3] {
    [BarrierKind::C3bf, BarrierKind::Hocbf { gamma: 1.0 }, BarrierKind::Ellipse]
}

// ---------------------------------------------------------------------------
// Criterion 1

/// Compares `lfh + lgh·u` from `eval` against a central difference of `h`
/// on `samples` random safe configurations.
pub fn derivative_check_with(
    pairing: Pairing,
    kind: BarrierKind,
    samples: usize,
    seed: u64,
    eval: &Evaluator,
) -> Check {
    let name = format!("derivative {}/{}", pairing.name(), kind.name());
    let mut rng = rng_for(seed, 1);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let c = sample_case(pairing, &mut rng);
        let analytic = match eval(&c.vehicle, &c.state, &c.obstacle, kind) {
            Ok(e) => e.hdot(&c.input),
            Err(e) => return Check::new(Some(1), name, false, e.to_string()),
        };
        let numeric = match numeric_hdot(&c.vehicle, kind, &c.state, &c.obstacle, &c.input, 1e-6) {
            Ok(x) => x,
            Err(e) => return Check::new(Some(1), name, false, e.to_string()),
        };
        let rel = (numeric - analytic).abs() / analytic.abs().max(1.0);
        if !(rel <= worst) {
            worst = if rel.is_nan() { f64::INFINITY } else { rel };
        }
    }
    Check::new(
        Some(1),
        name,
        worst <= 1e-4,
        format!("max relative error {worst:.2e} over {samples} samples"),
    )
}

pub fn criterion_1(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for pairing in Pairing::ALL {
        for kind in kinds() {
            if pairing.supports(kind) {
                out.push(derivative_check_with(pairing, kind, 1000, seed, &evaluate));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Criterion 2

fn expected_class(pairing: Pairing, kind: BarrierKind) -> Option<Degeneracy> {
    match (kind, pairing) {
        (BarrierKind::Ellipse, Pairing::Unicycle | Pairing::PointMass | Pairing::QuadrotorSphere) => Some(Degeneracy::Degenerate),
        // only the slip column is ever active; validity is decided by the obstacle velocity
        (BarrierKind::Ellipse, _) => None,
        _ => Some(Degeneracy::Nondegenerate),
    }
}

pub fn criterion_2(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for pairing in Pairing::ALL {
        for kind in kinds() {
            if !pairing.supports(kind) {
                continue;
            }
            let name = format!("degeneracy {}/{}", pairing.name(), kind.name());
            let n = if kind == BarrierKind::C3bf { 10_000 } else { 2_000 };
            let report = match lgh_degeneracy_report(pairing, kind, n, seed) {
                Ok(r) => r,
                Err(e) => {
                    out.push(Check::new(Some(2), name, false, e.to_string()));
                    continue;
                }
            };
            let detail = format!(
                "{:?}, ‖lgh‖ in [{:.3e}, {:.3e}], active columns {:?}",
                report.classification, report.min_norm, report.max_norm, report.active_columns
            );
            let passed = match expected_class(pairing, kind) {
                Some(Degeneracy::Degenerate) => report.max_norm == 0.0,
                Some(_) => report.classification == Degeneracy::Nondegenerate && report.min_norm > DEGENERACY_THRESHOLD,
                None => report.active_columns == [false, true],
            };
            out.push(Check::new(Some(2), name, passed, detail));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Criterion 3

const IDENTITY_SAMPLES: usize = 10_000;

fn rel_gap(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1.0)
}

fn identity_check(name: &str, worst: f64, n: usize) -> Check {
    Check::new(Some(3), name, worst <= 1e-12, format!("max relative gap {worst:.2e} over {n} samples"))
}

fn conservativeness_identity(seed: u64) -> Check {
    let mut rng = rng_for(seed, 31);
    let pairings = [Pairing::Unicycle, Pairing::PointMass, Pairing::QuadrotorSphere];
    let mut worst = 0.0f64;
    for i in 0..IDENTITY_SAMPLES {
        let c = sample_case(pairings[i % pairings.len()], &mut rng);
        let gamma = rng.random_range(0.1..5.0);
        let c3 = evaluate(&c.vehicle, &c.state, &c.obstacle, BarrierKind::C3bf);
        let ho = evaluate(&c.vehicle, &c.state, &c.obstacle, BarrierKind::Hocbf { gamma });
        let (Ok(c3), Ok(ho)) = (c3, ho) else {
            return Check::new(Some(3), "identity h_C3BF - h_HO", false, "barrier evaluation failed");
        };
        let g = c3.geometry.expect("cone geometry");
        let s = (g.p_rel.norm_squared() - g.r * g.r).sqrt();
        let expected = (g.v_rel.norm() - gamma) * s;
        let scale = c3.h.abs().max(ho.h.abs()).max((g.v_rel.norm() + gamma) * s);
        worst = worst.max(rel_gap(c3.h - ho.h, expected, scale));
    }
    identity_check("identity h_C3BF - h_HO", worst, IDENTITY_SAMPLES)
}

fn bicycle_rewrite_identity(seed: u64) -> Check {
    let mut rng = rng_for(seed, 32);
    let mut worst = 0.0f64;
    for _ in 0..IDENTITY_SAMPLES {
        let c = sample_case(Pairing::Bicycle, &mut rng);
        let Ok(e) = evaluate(&c.vehicle, &c.state, &c.obstacle, BarrierKind::C3bf) else {
            return Check::new(Some(3), "identity bicycle rewrite", false, "barrier evaluation failed");
        };
        let g = e.geometry.expect("cone geometry");
        let s = (g.p_rel.norm_squared() - g.r * g.r).sqrt();
        let vn = g.v_rel.norm();
        let pv = g.p_rel.dot(&g.v_rel);
        let lhs = vn * vn + pv * vn / s;
        let rhs = vn / s * e.h;
        let scale = vn * vn + (pv * vn / s).abs();
        worst = worst.max(rel_gap(lhs, rhs, scale));
    }
    identity_check("identity bicycle rewrite", worst, IDENTITY_SAMPLES)
}

fn random_unit3(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn cone_edge_identity(seed: u64) -> Check {
    let mut rng = rng_for(seed, 33);
    let mut worst = 0.0f64;
    for _ in 0..IDENTITY_SAMPLES {
        let p = random_unit3(&mut rng) * rng.random_range(0.5..10.0);
        let r = p.norm() * rng.random_range(0.01..0.99);
        let cos_phi = (p.norm_squared() - r * r).sqrt() / p.norm();
        let sin_phi = r / p.norm();
        // unit vector perpendicular to p
        let t = {
            let q = random_unit3(&mut rng);
            let t = q - p * (q.dot(&p) / p.norm_squared());
            if t.norm() < 1e-3 {
                continue;
            }
            t.normalize()
        };
        let speed = rng.random_range(0.01..10.0);
        let v = -(p.normalize() * cos_phi + t * sin_phi) * speed;
        let (h, _) = cone_terms(&p, &v, r).expect("outside by construction");
        worst = worst.max(h.abs() / (speed * p.norm()));
    }
    identity_check("identity cone edge h = 0", worst, IDENTITY_SAMPLES)
}

fn projector_identity(seed: u64) -> Check {
    let mut rng = rng_for(seed, 34);
    let mut worst = 0.0f64;
    for _ in 0..IDENTITY_SAMPLES {
        let n = random_unit3(&mut rng);
        let x = random_unit3(&mut rng) * rng.random_range(0.01..100.0);
        let p = projector(&n);
        let px = p * x;
        let scale = x.norm();
        worst = worst.max(((p * px) - px).amax() / scale).max(px.dot(&n).abs() / scale);
    }
    // projected cone quantities of the cylinder pairing lie in the plane
    for _ in 0..1000 {
        let c = sample_case(Pairing::QuadrotorProjection, &mut rng);
        let axis = c.obstacle.shape.axis().expect("cylinder");
        let Ok(e) = evaluate(&c.vehicle, &c.state, &c.obstacle, BarrierKind::C3bf) else {
            return Check::new(Some(3), "identity projector", false, "barrier evaluation failed");
        };
        let g = e.geometry.expect("cone geometry");
        worst = worst
            .max(g.p_rel.dot(&axis).abs() / g.p_rel.norm().max(1.0))
            .max(g.v_rel.dot(&axis).abs() / g.v_rel.norm().max(1.0));
    }
    identity_check("identity projector idempotent and in-plane", worst, IDENTITY_SAMPLES + 1000)
}

pub fn criterion_3(seed: u64) -> Vec<Check> {
    vec![
        conservativeness_identity(seed),
        bicycle_rewrite_identity(seed),
        cone_edge_identity(seed),
        projector_identity(seed),
    ]
}

// ---------------------------------------------------------------------------
// Criterion 4

/// Random QP with a known feasible point; `u_ref` is usually infeasible.
pub fn random_problem(rng: &mut impl Rng, inputs: usize, constraints: usize, bounded: bool) -> FilterProblem {
    let u_feas: Vec<f64> = (0..inputs).map(|_| rng.random_range(-3.0..3.0)).collect();
    let cons = (0..constraints)
        .map(|_| {
            let a: Vec<f64> = (0..inputs).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = a.iter().zip(&u_feas).map(|(x, y)| x * y).sum::<f64>() - rng.random_range(0.0..1.0);
            LinearConstraint { a, b }
        })
        .collect();
    let bounds = bounded.then(|| {
        u_feas
            .iter()
            .map(|&u| Bound {
                lo: rng.random_bool(0.7).then(|| u - rng.random_range(0.0..2.0)),
                hi: rng.random_bool(0.7).then(|| u + rng.random_range(0.0..2.0)),
            })
            .collect()
    });
    FilterProblem {
        u_ref: (0..inputs).map(|_| rng.random_range(-5.0..5.0)).collect(),
        constraints: cons,
        bounds,
        weights: None,
    }
}

fn kkt_check(seed: u64) -> Check {
    let mut rng = rng_for(seed, 41);
    let mut worst = 0.0f64;
    let mut active = 0;
    for i in 0..500 {
        let m = rng.random_range(1..=4);
        let k = rng.random_range(0..=4);
        let p = random_problem(&mut rng, m, k, i % 2 == 0);
        let r = match solve_active_set(&p) {
            Ok(r) if r.status == FilterStatus::Optimal => r,
            Ok(_) => return Check::new(Some(4), "qp kkt", false, format!("problem {i}: infeasible but feasible by construction")),
            Err(e) => return Check::new(Some(4), "qp kkt", false, format!("problem {i}: {e}")),
        };
        if !r.active_set.is_empty() {
            active += 1;
        }
        worst = worst.max(kkt_residuals(&p, &r).max());
    }
    Check::new(
        Some(4),
        "qp kkt",
        worst <= 1e-8,
        format!("max residual {worst:.2e} over 500 problems ({active} with active constraints)"),
    )
}

/// Lines `a·u = b` bounding the feasible set of a 2-input problem.
fn boundary_lines(p: &FilterProblem) -> Vec<([f64; 2], f64)> {
    let mut lines: Vec<([f64; 2], f64)> = p
        .constraints
        .iter()
        .filter(|c| c.a[0] != 0.0 || c.a[1] != 0.0)
        .map(|c| ([c.a[0], c.a[1]], c.b))
        .collect();
    if let Some(bounds) = &p.bounds {
        for (j, b) in bounds.iter().enumerate() {
            let mut e = [0.0; 2];
            e[j] = 1.0;
            if let Some(lo) = b.lo {
                lines.push((e, lo));
            }
            if let Some(hi) = b.hi {
                lines.push((e, hi));
            }
        }
    }
    lines
}

fn nearly_feasible(p: &FilterProblem, u: &[f64]) -> bool {
    const TOL: f64 = 1e-9;
    p.constraints.iter().all(|c| c.slack(u) >= -TOL)
        && p.bounds.as_ref().is_none_or(|bs| {
            bs.iter().zip(u).all(|(b, &x)| b.lo.is_none_or(|lo| x >= lo - TOL) && b.hi.is_none_or(|hi| x <= hi + TOL))
        })
}

/// Brute-force minimiser for 2-input problems: `u_ref` if feasible, else the
/// best feasible point of a uniform grid laid along every boundary line.
pub fn grid_oracle(p: &FilterProblem, step: f64, half_width: f64) -> Option<[f64; 2]> {
    assert_eq!(p.u_ref.len(), 2, "grid oracle is two-dimensional");
    if nearly_feasible(p, &p.u_ref) {
        return Some([p.u_ref[0], p.u_ref[1]]);
    }
    let n = (half_width / step).ceil() as i64;
    let mut best: Option<([f64; 2], f64)> = None;
    for (a, b) in boundary_lines(p) {
        let aa = a[0] * a[0] + a[1] * a[1];
        let norm = aa.sqrt();
        let base = [a[0] * b / aa, a[1] * b / aa];
        let dir = [-a[1] / norm, a[0] / norm];
        // start the grid at the foot of the perpendicular from u_ref
        let t0 = (p.u_ref[0] - base[0]) * dir[0] + (p.u_ref[1] - base[1]) * dir[1];
        for k in -n..=n {
            let t = t0 + k as f64 * step;
            let u = [base[0] + t * dir[0], base[1] + t * dir[1]];
            if !nearly_feasible(p, &u) {
                continue;
            }
            let f = (u[0] - p.u_ref[0]).powi(2) + (u[1] - p.u_ref[1]).powi(2);
            if best.is_none_or(|(_, fb)| f < fb) {
                best = Some((u, f));
            }
        }
    }
    best.map(|(u, _)| u)
}

fn grid_check(seed: u64) -> Check {
    const STEP: f64 = 1e-3;
    let mut rng = rng_for(seed, 42);
    let mut worst = 0.0f64;
    let mut problems = 0;
    while problems < 100 {
        let k = rng.random_range(1..=4);
        let p = random_problem(&mut rng, 2, k, problems % 2 == 0);
        let Ok(r) = solve_active_set(&p) else {
            return Check::new(Some(4), "qp grid oracle", false, "solver error");
        };
        let Some(g) = grid_oracle(&p, STEP, 25.0) else {
            return Check::new(Some(4), "qp grid oracle", false, "oracle found no feasible point");
        };
        worst = worst.max((r.u_star[0] - g[0]).abs().max((r.u_star[1] - g[1]).abs()));
        problems += 1;
    }
    Check::new(
        Some(4),
        "qp grid oracle",
        worst <= 2.0 * STEP,
        format!("max |u* - u_grid| = {worst:.2e} (grid step {STEP:e}) over {problems} problems"),
    )
}

fn minimal_intervention_check(seed: u64) -> Check {
    let mut rng = rng_for(seed, 43);
    let mut failures = 0;
    for i in 0..500 {
        let m = rng.random_range(1..=4);
        let k = rng.random_range(0..=4);
        let mut p = random_problem(&mut rng, m, k, i % 2 == 0);
        // move u_ref into the feasible set
        p.u_ref = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        for c in &mut p.constraints {
            c.b = c.a.iter().zip(&p.u_ref).map(|(x, y)| x * y).sum::<f64>() - rng.random_range(0.0..1.0);
        }
        if let Some(bs) = &mut p.bounds {
            for (b, &u) in bs.iter_mut().zip(&p.u_ref) {
                b.lo = b.lo.map(|_| u - 0.5);
                b.hi = b.hi.map(|_| u + 0.5);
            }
        }
        if !p.is_feasible(&p.u_ref) {
            continue;
        }
        let ok = solve_active_set(&p).is_ok_and(|r| {
            r.u_star.iter().zip(&p.u_ref).all(|(a, b)| a.to_bits() == b.to_bits())
        });
        if !ok {
            failures += 1;
        }
    }
    Check::new(
        Some(4),
        "qp minimal intervention",
        failures == 0,
        format!("{failures} of 500 feasible references modified"),
    )
}

pub fn criterion_4(seed: u64) -> Vec<Check> {
    vec![kkt_check(seed), grid_check(seed), minimal_intervention_check(seed)]
}

// ---------------------------------------------------------------------------
// Criterion 5

/// Largest negative initial barrier value over agents and obstacles.
fn initial_min_h(sc: &Scenario) -> Result<f64, String> {
    let mut min_h = f64::INFINITY;
    for (i, agent) in sc.agents.iter().enumerate() {
        for o in initial_view(sc, i).map_err(|e| e.to_string())? {
            let e = evaluate(&agent.vehicle, &agent.initial_state, &o, sc.barrier).map_err(|e| e.to_string())?;
            min_h = min_h.min(e.h);
        }
    }
    Ok(min_h)
}

fn corpus_check(name: &str) -> Check {
    let label = format!("corpus {name}");
    let sc = match corpus::load(name) {
        Ok(sc) => sc,
        Err(e) => return Check::new(Some(5), label, false, e.to_string()),
    };
    let h0 = match initial_min_h(&sc) {
        Ok(h) => h,
        Err(e) => return Check::new(Some(5), label, false, e),
    };
    let t0 = Instant::now();
    let logs = multi_agent_run(&sc);
    let wall = t0.elapsed().as_secs_f64();
    let mut min_h = f64::INFINITY;
    let mut margin = f64::INFINITY;
    let mut status = RunStatus::Completed;
    for log in &logs {
        let rep = collision_report(log);
        min_h = min_h.min(rep.min_h());
        margin = margin.min(rep.min_margin());
        if log.status.is_failure() {
            status = log.status;
        }
    }
    let passed = h0 >= 0.0
        && status == RunStatus::Completed
        && min_h >= -1e-2
        && margin >= -1e-3
        && sc.sim.dt == 0.01
        && sc.sim.duration <= 20.0
        && wall < 10.0;
    Check::new(
        Some(5),
        label,
        passed,
        format!("{status}, h(0) {h0:.3e}, min h {min_h:.3e}, min margin {margin:.3e}, under 10 s {}", wall < 10.0),
    )
}

/// Corpus scenarios that must start safe and complete.
pub fn safe_corpus() -> Vec<&'static str> {
    corpus::SCENARIOS
        .iter()
        .map(|(n, _)| *n)
        .filter(|n| corpus::load(n).is_ok_and(|sc| !sc.start_unsafe))
        .collect()
}

pub fn criterion_5(_seed: u64) -> Vec<Check> {
    let names = safe_corpus();
    let mut out: Vec<Check> = names.iter().map(|n| corpus_check(n)).collect();
    let families = [
        "unicycle_static_turn",
        "unicycle_static_brake",
        "unicycle_head_on_reverse",
        "unicycle_overtake",
        "unicycle_perpendicular",
        "bicycle_static_turn",
        "bicycle_static_brake",
        "bicycle_head_on_reverse",
        "bicycle_overtake",
        "bicycle_perpendicular",
        "point_mass_head_on",
        "point_mass_crossing",
        "quadrotor_static_sphere",
        "quadrotor_static_cylinder",
        "quadrotor_moving_sphere",
        "unicycle_multi_obstacle",
        "unicycle_multi_agent",
    ];
    let missing: Vec<&str> = families.iter().copied().filter(|f| !names.contains(f)).collect();
    let shape_ok = corpus::load("unicycle_multi_obstacle").is_ok_and(|sc| sc.obstacles.len() >= 3)
        && corpus::load("unicycle_multi_agent").is_ok_and(|sc| sc.agents.len() == 2 && sc.agents.iter().all(|a| a.filtered))
        && corpus::load("quadrotor_static_cylinder")
            .is_ok_and(|sc| matches!(sc.obstacles[0].shape, ObstacleShape::Cylinder { .. }));
    out.push(Check::new(
        Some(5),
        "corpus coverage",
        missing.is_empty() && shape_ok,
        if missing.is_empty() {
            format!("{} scenarios", names.len())
        } else {
            format!("missing {missing:?}")
        },
    ));
    out
}

// ---------------------------------------------------------------------------
// Criterion 6

/// Runs the high-speed scenario under C3BF and HOCBF(γ=1) and checks the
/// scenario geometry.
pub fn high_speed_check() -> Check {
    let name = "high-speed obstacle: C3BF completes, HOCBF fails";
    let sc = match corpus::load(HIGH_SPEED_SCENARIO) {
        Ok(sc) => sc,
        Err(e) => return Check::new(Some(6), name, false, e.to_string()),
    };
    let agent = &sc.agents[0];
    let o = &sc.obstacles[0];
    let geometry = evaluate(&agent.vehicle, &agent.initial_state, o, BarrierKind::C3bf)
        .ok()
        .and_then(|e| e.geometry);
    let Some(g) = geometry else {
        return Check::new(Some(6), name, false, "no cone geometry at t = 0");
    };
    let range = g.p_rel.norm();
    let approach = -g.v_rel.dot(&g.p_rel) / range;
    let setup_ok = (range - 5.0).abs() < 1e-2 && (g.r - 1.0).abs() < 1e-12 && approach >= 4.0 * g.cos_phi;

    let c3 = multi_agent_run(&sc.with_barrier(BarrierKind::C3bf)).swap_remove(0);
    let ho = multi_agent_run(&sc.with_barrier(BarrierKind::Hocbf { gamma: 1.0 })).swap_remove(0);
    let passed = setup_ok
        && c3.status == RunStatus::Completed
        && matches!(ho.status, RunStatus::FailedInfeasible | RunStatus::FailedPenetration);
    Check::new(
        Some(6),
        name,
        passed,
        format!(
            "range {range:.3}, r {:.3}, approach {approach:.3} vs 4cos(phi) {:.3}; c3bf {}, hocbf {}",
            g.r,
            4.0 * g.cos_phi,
            c3.status,
            ho.status
        ),
    )
}

pub fn effective_angle_check(seed: u64) -> Check {
    let mut rng = rng_for(seed, 61);
    let mut violations = 0;
    for _ in 0..10_000 {
        let gamma = rng.random_range(0.05..5.0);
        let v = gamma * rng.random_range(1.0..20.0) + 1e-9;
        let cos_phi = rng.random_range(1e-6..1.0);
        match hocbf_effective_angle(gamma, v, cos_phi) {
            EffectiveCone::CosPhi(c) if c < cos_phi => {}
            _ => violations += 1,
        }
    }
    Check::new(
        Some(6),
        "effective angle narrower when ‖v_rel‖ > γ",
        violations == 0,
        format!("{violations} of 10000 samples violate cos φ' < cos φ"),
    )
}

pub fn criterion_6(seed: u64) -> Vec<Check> {
    vec![high_speed_check(), effective_angle_check(seed)]
}

// ---------------------------------------------------------------------------
// Criterion 7

pub fn unsafe_corpus() -> Vec<&'static str> {
    corpus::SCENARIOS
        .iter()
        .map(|(n, _)| *n)
        .filter(|n| corpus::load(n).is_ok_and(|sc| sc.start_unsafe))
        .collect()
}

pub fn criterion_7(_seed: u64) -> Vec<Check> {
    let names = unsafe_corpus();
    let mut out = Vec::new();
    for name in &names {
        let label = format!("envelope {name}");
        let sc = match corpus::load(name) {
            Ok(sc) => sc,
            Err(e) => {
                out.push(Check::new(Some(7), label, false, e.to_string()));
                continue;
            }
        };
        let log = multi_agent_run(&sc).swap_remove(0);
        let h0 = log.records.first().map_or(f64::NAN, |r| {
            r.obstacles.iter().map(|o| o.h).fold(f64::INFINITY, f64::min)
        });
        let deficit = envelope_deficit(&log, sc.class_k.gamma);
        out.push(Check::new(
            Some(7),
            label,
            h0 < 0.0 && log.status == RunStatus::Completed && deficit <= 1e-2,
            format!("{}, h(0) {h0:.3e}, worst deficit {deficit:.3e}", log.status),
        ));
    }
    let models: Vec<ModelTag> = names
        .iter()
        .filter_map(|n| corpus::load(n).ok())
        .map(|sc| sc.agents[0].vehicle.tag())
        .collect();
    let covered = [ModelTag::Unicycle, ModelTag::PointMass, ModelTag::Quadrotor]
        .iter()
        .all(|m| models.contains(m));
    out.push(Check::new(
        Some(7),
        "envelope coverage",
        names.len() >= 3 && covered,
        format!("{} start_unsafe scenarios", names.len()),
    ));
    out
}

// ---------------------------------------------------------------------------
// Criterion 8

fn determinism_check() -> Check {
    let mut differing = Vec::new();
    let mut n = 0;
    for (name, _) in corpus::SCENARIOS {
        let Ok(sc) = corpus::load(name) else {
            differing.push(*name);
            continue;
        };
        let a: Vec<String> = multi_agent_run(&sc).iter().map(to_csv_string).collect();
        let b: Vec<String> = multi_agent_run(&sc).iter().map(to_csv_string).collect();
        if a != b {
            differing.push(*name);
        }
        n += 1;
    }
    Check::new(
        Some(8),
        "determinism",
        differing.is_empty(),
        if differing.is_empty() {
            format!("{n} scenarios byte-identical on rerun")
        } else {
            format!("differ: {differing:?}")
        },
    )
}

fn rk4_order_check() -> Check {
    // ẋ = 1 − x², x(0) = 0 has the solution tanh t
    let err = |dt: f64| (rk4(|x| vec![1.0 - x[0] * x[0]], &[0.0], dt)[0] - dt.tanh()).abs();
    let scalar = err(0.2) / err(0.1);

    // the vehicle integrator against a much finer RK4 solution
    let vehicle = Vehicle::Unicycle(UnicycleParams::default());
    let s = VehicleState::Unicycle(UnicycleState {
        theta: 0.3,
        v: 1.0,
        omega: 0.5,
        ..Default::default()
    });
    let u = [0.4, -0.3];
    let reference = |dt: f64| {
        let mut x = s;
        for _ in 0..256 {
            x = rk4_step(&vehicle, &x, &u, dt / 256.0).expect("finite");
        }
        x.to_vec()
    };
    let step_err = |dt: f64| {
        let x = rk4_step(&vehicle, &s, &u, dt).expect("finite").to_vec();
        x.iter()
            .zip(reference(dt))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let vehicle_ratio = step_err(0.4) / step_err(0.2);
    Check::new(
        Some(8),
        "rk4 one-step error ratio",
        scalar >= 15.0 && vehicle_ratio >= 15.0,
        format!("tanh {scalar:.1}, unicycle {vehicle_ratio:.1}"),
    )
}

pub fn criterion_8(_seed: u64) -> Vec<Check> {
    vec![determinism_check(), rk4_order_check()]
}

/// All acceptance criteria in order.
pub fn acceptance(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for f in [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
    ] {
        out.extend(f(seed));
    }
    out
}

// ---------------------------------------------------------------------------
// Module invariants

fn random_vehicle_state(tag: ModelTag, rng: &mut impl Rng) -> (Vehicle, VehicleState) {
    let vehicle = Vehicle::default_for(tag);
    let mut x: Vec<f64> = (0..tag.state_dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
    if tag == ModelTag::Quadrotor {
        x[7] = rng.random_range(-1.0..1.0);
    }
    (vehicle, VehicleState::from_slice(tag, &x))
}

fn input_affinity(seed: u64) -> Check {
    let mut rng = rng_for(seed, 101);
    let mut worst = 0.0f64;
    for tag in [ModelTag::Unicycle, ModelTag::Bicycle, ModelTag::Quadrotor, ModelTag::PointMass] {
        for _ in 0..250 {
            let (vehicle, s) = random_vehicle_state(tag, &mut rng);
            let m = tag.input_dim();
            let mut draw = || -> Vec<f64> { (0..m).map(|_| rng.random_range(-0.2..0.2)).collect() };
            let (u1, u2) = (draw(), draw());
            let sum: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
            let f = |u: &[f64]| vehicle.derivative(&s, u).expect("valid sample").to_vec();
            let lhs: Vec<f64> = f(&sum).iter().zip(f(&u2)).map(|(a, b)| a - b).collect();
            let rhs: Vec<f64> = f(&u1).iter().zip(f(&vec![0.0; m])).map(|(a, b)| a - b).collect();
            for (a, b) in lhs.iter().zip(&rhs) {
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
        }
    }
    Check::new(None, "dynamics affine in input", worst <= 1e-12, format!("max gap {worst:.2e}"))
}

fn rotation_checks(seed: u64) -> Check {
    let mut rng = rng_for(seed, 102);
    let mut orth = 0.0f64;
    let mut det = 0.0f64;
    let mut winv = 0.0f64;
    for _ in 0..1000 {
        let e = Vec3::new(
            rng.random_range(-PI..PI),
            rng.random_range(-1.5..1.5),
            rng.random_range(-PI..PI),
        );
        let r = rotation_matrix(&e);
        orth = orth.max((r.transpose() * r - Matrix3::identity()).amax());
        det = det.max((r.determinant() - 1.0).abs());
        if let Ok((w, wi)) = euler_rate_map(&e, 1e-3) {
            winv = winv.max((w * wi - Matrix3::identity()).amax());
        }
    }
    Check::new(
        None,
        "rotation orthonormal, euler map invertible",
        orth < 1e-12 && det <= 1e-12 && winv <= 1e-10,
        format!("‖RᵀR − I‖ {orth:.1e}, |det − 1| {det:.1e}, ‖W·W⁻¹ − I‖ {winv:.1e}"),
    )
}

fn hover_check() -> Check {
    let p = QuadrotorParams::default();
    let s = VehicleState::Quadrotor(QuadrotorState {
        pos: Vec3::new(1.0, -2.0, 3.0),
        ..Default::default()
    });
    let f = p.mass * p.gravity / 4.0;
    let d = Vehicle::Quadrotor(p).derivative(&s, &[f; 4]).expect("hover is valid").to_vec();
    let worst = d.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Check::new(None, "quadrotor hover equilibrium", worst <= 1e-12, format!("max |ẋ| {worst:.1e}"))
}

fn obstacle_checks(seed: u64) -> Check {
    let mut rng = rng_for(seed, 103);
    let mut monotone = true;
    let mut along = 0.0f64;
    for _ in 0..1000 {
        let (a, b, c) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
        let w = rng.random_range(0.0..1.0);
        let bump = rng.random_range(0.0..1.0);
        let base = effective_radius(&ObstacleShape::Ellipsoid { c1: a, c2: b, c3: c }, w);
        monotone &= effective_radius(&ObstacleShape::Ellipsoid { c1: a + bump, c2: b, c3: c }, w) >= base
            && effective_radius(&ObstacleShape::Ellipsoid { c1: a, c2: b + bump, c3: c }, w) >= base
            && effective_radius(&ObstacleShape::Ellipsoid { c1: a, c2: b, c3: c + bump }, w) >= base
            && effective_radius(&ObstacleShape::Ellipsoid { c1: a, c2: b, c3: c }, w + bump) >= base
            && effective_radius(&ObstacleShape::PlanarEllipse { c1: a, c2: b }, w + bump)
                >= effective_radius(&ObstacleShape::PlanarEllipse { c1: a, c2: b }, w);

        let axis = random_unit3(&mut rng);
        let raw = random_unit3(&mut rng);
        let o = Obstacle {
            id: "c".into(),
            shape: ObstacleShape::Cylinder {
                axis,
                height: 2.0,
                radii: (a, b),
            },
            state: crate::obstacles::ObstacleState {
                center: random_unit3(&mut rng),
                velocity: raw - axis * raw.dot(&axis),
            },
        };
        let moved = o.advance(rng.random_range(0.0..10.0));
        along = along.max(moved.state.velocity.dot(&axis).abs());
    }
    Check::new(
        None,
        "effective radius monotone, cylinder motion stays perpendicular",
        monotone && along <= 1e-12,
        format!("monotone {monotone}, max axial velocity {along:.1e}"),
    )
}

fn cone_membership(seed: u64) -> Check {
    let mut rng = rng_for(seed, 104);
    let mut mismatches = 0;
    let mut scale_gap = 0.0f64;
    for _ in 0..10_000 {
        let p = SVector::<f64, 2>::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let v = SVector::<f64, 2>::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        if p.norm() < 1e-3 || v.norm() < 1e-9 {
            continue;
        }
        let r = p.norm() * rng.random_range(0.0..0.99);
        let (h, cos_phi) = cone_terms(&p, &v, r).expect("outside");
        let cos_angle = p.dot(&v) / (p.norm() * v.norm());
        // skip samples numerically on the cone edge
        if (cos_angle + cos_phi).abs() > 1e-9 && (h >= 0.0) != (cos_angle >= -cos_phi) {
            mismatches += 1;
        }
        let lambda = rng.random_range(0.1..10.0);
        let (h_scaled, _) = cone_terms(&p, &(v * lambda), r).expect("outside");
        scale_gap = scale_gap.max((h_scaled - lambda * h).abs() / (lambda * v.norm() * p.norm()));
    }
    Check::new(
        None,
        "cone membership and velocity scaling",
        mismatches == 0 && scale_gap <= 1e-12,
        format!("{mismatches} membership mismatches, scaling gap {scale_gap:.1e}"),
    )
}

fn projection_contraction(seed: u64) -> Check {
    let mut rng = rng_for(seed, 105);
    let mut feasible = 0;
    let mut violations = 0;
    while feasible < 10_000 {
        let m = rng.random_range(1..=4);
        let k = rng.random_range(1..=4);
        let bounded = rng.random_bool(0.5);
        let p = random_problem(&mut rng, m, k, bounded);
        let Ok(r) = solve_active_set(&p) else {
            return Check::new(None, "qp projection contraction", false, "solver error");
        };
        let d_star: f64 = r.u_star.iter().zip(&p.u_ref).map(|(a, b)| (a - b).powi(2)).sum();
        for _ in 0..500 {
            let u: Vec<f64> = (0..m).map(|_| rng.random_range(-6.0..6.0)).collect();
            if !p.is_feasible(&u) {
                continue;
            }
            feasible += 1;
            let d: f64 = u.iter().zip(&p.u_ref).map(|(a, b)| (a - b).powi(2)).sum();
            if d_star > d * (1.0 + 1e-12) + 1e-15 {
                violations += 1;
            }
        }
    }
    Check::new(
        None,
        "qp projection contraction",
        violations == 0,
        format!("{violations} of {feasible} feasible points closer to u_ref than u*"),
    )
}

/// Finite-difference sensitivity of `u⋆` to the state along corpus runs.
pub fn lipschitz_check(seed: u64, limit: f64) -> Check {
    let mut rng = rng_for(seed, 106);
    let mut worst = 0.0f64;
    let mut probes = 0;
    for name in ["unicycle_static_turn", "bicycle_overtake", "point_mass_crossing", "quadrotor_static_sphere"] {
        let Ok(sc) = corpus::load(name) else {
            return Check::new(None, "qp lipschitz spot check", false, format!("cannot load {name}"));
        };
        let agent = &sc.agents[0];
        let log = multi_agent_run(&sc).swap_remove(0);
        for rec in log.records.iter().step_by(10) {
            let obstacles = sc.obstacles_at(rec.t);
            let s = VehicleState::from_slice(agent.vehicle.tag(), &rec.state);
            let solve = |s: &VehicleState| {
                filter(&agent.vehicle, s, &obstacles, sc.barrier, &rec.u_ref, sc.class_k, None, None).ok()
            };
            let Some(base) = solve(&s) else { continue };
            // away from lgh = 0 and from v_rel = 0, where v_rel/‖v_rel‖ is not Lipschitz
            let smooth = base.evals.iter().all(|e| {
                e.lgh_norm() >= 1e-3 && e.geometry.is_none_or(|g| g.v_rel.norm() >= 0.05)
            });
            if base.result.status != FilterStatus::Optimal || !smooth {
                continue;
            }
            let delta = 1e-7;
            let dir: Vec<f64> = (0..rec.state.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            let moved: Vec<f64> = rec.state.iter().zip(&dir).map(|(x, d)| x + delta * d / n).collect();
            let Some(pert) = solve(&VehicleState::from_slice(agent.vehicle.tag(), &moved)) else {
                continue;
            };
            let du = base
                .result
                .u_star
                .iter()
                .zip(&pert.result.u_star)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(du / delta);
            probes += 1;
        }
    }
    Check::new(
        None,
        "qp lipschitz spot check",
        probes > 0 && worst <= limit,
        format!("max sensitivity {worst:.3e} over {probes} probes (limit {limit:e})"),
    )
}

fn reference_checks(seed: u64) -> Check {
    let mut rng = rng_for(seed, 107);
    let g = Gains::default();
    let mut repeat_ok = true;
    let mut seam_gap = 0.0f64;
    for tag in [ModelTag::Unicycle, ModelTag::Bicycle, ModelTag::Quadrotor, ModelTag::PointMass] {
        for _ in 0..200 {
            let (vehicle, s) = random_vehicle_state(tag, &mut rng);
            let t = Target::Waypoint {
                point: Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), 1.0),
                speed: 1.0,
            };
            let a = reference_input(&vehicle, &s, &t, &g);
            let b = reference_input(&vehicle, &s, &t, &g);
            repeat_ok &= match (a, b) {
                (Ok(a), Ok(b)) => a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()),
                (Err(a), Err(b)) => a == b,
                _ => false,
            };
        }
    }
    // heading representation: θ and θ ± 2π command the same turn away from the antipode
    for _ in 0..1000 {
        let heading = rng.random_range(-PI..PI);
        let psi = heading + PI + rng.random_range(0.1..2.0 * PI - 0.1);
        let t = Target::ConstantVelocity { speed: 1.0, heading, altitude: None };
        let at = |theta: f64| pd_unicycle(&UnicycleState { theta, v: 1.0, ..Default::default() }, &t, &g).alpha;
        let wrapped = wrap_angle(psi);
        seam_gap = seam_gap
            .max((at(wrapped) - at(wrapped + 2.0 * PI)).abs())
            .max((at(wrapped) - at(wrapped - 2.0 * PI)).abs());
    }
    Check::new(
        None,
        "reference controllers memoryless and seam continuous",
        repeat_ok && seam_gap <= 1e-9,
        format!("repeatable {repeat_ok}, seam gap {seam_gap:.1e}"),
    )
}

fn obstacle_kinematics() -> Check {
    let mut worst_bits = 0usize;
    let mut checked = 0usize;
    for (name, _) in corpus::SCENARIOS {
        let Ok(sc) = corpus::load(name) else { continue };
        let log = multi_agent_run(&sc).swap_remove(0);
        for rec in &log.records {
            for (o, logged) in sc.obstacles.iter().zip(&rec.obstacles) {
                checked += 1;
                if logged.center != o.state.center + o.state.velocity * rec.t {
                    worst_bits += 1;
                }
            }
        }
    }
    Check::new(
        None,
        "obstacle centers are initial + velocity·t",
        worst_bits == 0,
        format!("{worst_bits} of {checked} logged centers differ"),
    )
}

/// Refining `dt` tenfold must not enlarge the observed violations.
fn dt_refinement() -> Check {
    let mut details = Vec::new();
    let mut passed = true;
    for name in ["unicycle_static_turn", "bicycle_overtake", "quadrotor_static_cylinder"] {
        let Ok(sc) = corpus::load(name) else {
            return Check::new(None, "dt refinement", false, format!("cannot load {name}"));
        };
        let mut fine = sc.clone();
        fine.sim.dt = sc.sim.dt / 10.0;
        let coarse = collision_report(&multi_agent_run(&sc).swap_remove(0));
        let fine_log = multi_agent_run(&fine).swap_remove(0);
        let refined = collision_report(&fine_log);
        let viol = |x: f64| (-x).max(0.0);
        let ok = fine_log.status == RunStatus::Completed
            && viol(refined.min_h()) <= viol(coarse.min_h())
            && viol(refined.min_margin()) <= viol(coarse.min_margin());
        passed &= ok;
        details.push(format!(
            "{name}: min h {:.2e} -> {:.2e}, margin {:.2e} -> {:.2e}",
            coarse.min_h(),
            refined.min_h(),
            coarse.min_margin(),
            refined.min_margin()
        ));
    }
    Check::new(None, "dt refinement", passed, details.join("; "))
}

fn csv_round_trip() -> Check {
    let mut failures = Vec::new();
    for name in ["unicycle_multi_obstacle", "quadrotor_static_cylinder", "point_mass_head_on"] {
        let Ok(sc) = corpus::load(name) else {
            failures.push(name);
            continue;
        };
        let log = multi_agent_run(&sc).swap_remove(0);
        let text = to_csv_string(&log);
        let ok = parse_csv(&text).is_ok_and(|table| {
            table.rows.len() == log.records.len()
                && table.rows.iter().zip(&log.records).all(|(row, rec)| {
                    let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
                    row.t.to_bits() == rec.t.to_bits()
                        && same(&row.state, &rec.state)
                        && same(&row.u_ref, &rec.u_ref)
                        && same(&row.u_star, &rec.u_star)
                        && row.obstacles.iter().zip(&rec.obstacles).all(|((h, d), o)| {
                            h.to_bits() == o.h.to_bits() && d.to_bits() == o.distance.to_bits()
                        })
                })
        });
        if !ok {
            failures.push(name);
        }
    }
    Check::new(
        None,
        "csv round trip bit-exact",
        failures.is_empty(),
        if failures.is_empty() { "3 logs".to_string() } else { format!("failed: {failures:?}") },
    )
}

pub fn module_invariants(seed: u64) -> Vec<Check> {
    vec![
        input_affinity(seed),
        rotation_checks(seed),
        hover_check(),
        obstacle_checks(seed),
        cone_membership(seed),
        projection_contraction(seed),
        lipschitz_check(seed, LIPSCHITZ_LIMIT),
        reference_checks(seed),
        obstacle_kinematics(),
        dt_refinement(),
        csv_round_trip(),
    ]
}

/// Acceptance criteria followed by module invariants.
pub fn run_all(seed: u64) -> Vec<Check> {
    let mut out = acceptance(seed);
    out.extend(module_invariants(seed));
    out
}
