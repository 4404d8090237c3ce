//! Barrier candidates and their Lie derivatives.
//!
//! Every evaluator returns `h`, `L_f h` and `L_g h` so that
//! `ḣ = L_f h + L_g h · u` for the vehicle's input `u`, with obstacles moving
//! at constant velocity.
//!
//! The collision-cone barrier is
//!
//! ```text
//! h = ⟨p_rel, v_rel⟩ + ‖v_rel‖·√(‖p_rel‖² − r²)
//! ```
//!
//! i.e. `⟨p_rel, v_rel⟩ + ‖p_rel‖‖v_rel‖cos φ` where `φ` is the half angle of
//! the cone of relative-velocity directions that lead into the circle of
//! radius `r`. `h ≥ 0` exactly when `v_rel` points outside that cone.
//!
//! All models reduce to the same kinematic skeleton: a relative position `p`,
//! a relative velocity-like vector `v`, and their time derivatives split into
//! drift and input parts,
//!
//! ```text
//! ṗ = ṗ₀ + P·u,    v̇ = v̇₀ + V·u.
//! ```
//!
//! With `s = √(‖p‖² − r²)` and a speed term `k(v)` (`‖v‖` for the cone
//! barrier, a constant `γ` for the square-root HOCBF) we get
//!
//! ```text
//! ḣ = ⟨ṗ, v + k·p/s⟩ + ⟨v̇, p + s·∇k⟩
//! ```
//!
//! which is what [`cone_lie`] assembles.

use crate::obstacles::{effective_radius, Obstacle, ObstacleShape};
use crate::vehicle_models::{
    euler_rate_map, gyroscopic_accel, rotation_matrix, BicycleParams, BicycleState, ModelError,
    ModelTag, PointMassParams, PointMassState, QuadrotorParams, QuadrotorState, UnicycleParams,
    UnicycleState, Vec3, Vehicle, VehicleState,
};
use nalgebra::{Matrix3, SMatrix, SVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Below this `‖L_g h‖` the input has no authority over the barrier.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error("inside obstacle {id}: distance {distance} <= radius {radius}")]
    InsideObstacle {
        id: String,
        distance: f64,
        radius: f64,
    },
    #[error("obstacle {id} moves along its cylinder axis (component {along})")]
    AxisVelocity { id: String, along: f64 },
    #[error("{kind} barrier is not defined for model {model} with a {shape} obstacle")]
    Unsupported {
        kind: &'static str,
        model: ModelTag,
        shape: &'static str,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarrierKind {
    C3bf,
    Ellipse,
    /// `h = ⟨p_rel, v_rel⟩ + γ·√(‖p_rel‖² − r²)`; `gamma` is in m/s.
    Hocbf { gamma: f64 },
}

impl BarrierKind {
    pub fn name(&self) -> &'static str {
        match self {
            BarrierKind::C3bf => "c3bf",
            BarrierKind::Ellipse => "ellipse",
            BarrierKind::Hocbf { .. } => "hocbf",
        }
    }
}

/// Cone quantities for one vehicle–obstacle pair. Planar models store `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeGeometry {
    pub p_rel: Vec3,
    pub v_rel: Vec3,
    pub r: f64,
    pub cos_phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierEval {
    pub h: f64,
    pub lfh: f64,
    pub lgh: Vec<f64>,
    /// Absent for the ellipse diagnostic.
    pub geometry: Option<ConeGeometry>,
    pub kind: BarrierKind,
}

impl BarrierEval {
    pub fn hdot(&self, u: &[f64]) -> f64 {
        self.lfh + self.lgh.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn lgh_norm(&self) -> f64 {
        self.lgh.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

fn shape_name(shape: &ObstacleShape) -> &'static str {
    match shape {
        ObstacleShape::PlanarEllipse { .. } => "planar ellipse",
        ObstacleShape::Ellipsoid { .. } => "ellipsoid",
        ObstacleShape::Cylinder { .. } => "cylinder",
    }
}

fn embed<const D: usize>(x: &SVector<f64, D>) -> Vec3 {
    let mut out = Vec3::zeros();
    for i in 0..D.min(3) {
        out[i] = x[i];
    }
    out
}

fn inside(distance: f64, radius: f64) -> BarrierError {
    BarrierError::InsideObstacle {
        id: String::new(),
        distance,
        radius,
    }
}

/// `h` and `cos φ` of the collision-cone barrier. `h = 0` exactly when
/// `v_rel = 0`.
pub fn cone_terms<const D: usize>(
    p_rel: &SVector<f64, D>,
    v_rel: &SVector<f64, D>,
    r: f64,
) -> Result<(f64, f64), BarrierError> {
    let dist = p_rel.norm();
    if !(dist > r) {
        return Err(inside(dist, r));
    }
    let s = (dist * dist - r * r).sqrt();
    let h = p_rel.dot(v_rel) + v_rel.norm() * s;
    Ok((h, s / dist))
}

/// Relative kinematics of a vehicle–obstacle pair, split into drift and
/// input parts. Obstacle accelerations are zero.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RelativeMotion<const D: usize, const M: usize> {
    pub p: SVector<f64, D>,
    pub v: SVector<f64, D>,
    pub p_dot: SVector<f64, D>,
    pub p_dot_u: SMatrix<f64, D, M>,
    pub v_dot: SVector<f64, D>,
    pub v_dot_u: SMatrix<f64, D, M>,
}

#[derive(Debug, Clone, Copy)]
enum SpeedTerm {
    Relative,
    Constant(f64),
}

struct Lie<const M: usize> {
    h: f64,
    lfh: f64,
    lgh: SVector<f64, M>,
    cos_phi: f64,
}

fn cone_lie<const D: usize, const M: usize>(
    m: &RelativeMotion<D, M>,
    r: f64,
    term: SpeedTerm,
) -> Result<Lie<M>, BarrierError> {
    let dist = m.p.norm();
    if !(dist > r) {
        return Err(inside(dist, r));
    }
    let s = (dist * dist - r * r).sqrt();
    let speed = m.v.norm();
    let (k, grad_k) = match term {
        SpeedTerm::Relative if speed > 0.0 => (speed, m.v / speed),
        // ‖v‖ has no gradient at the origin; take the zero vector there.
        SpeedTerm::Relative => (0.0, SVector::<f64, D>::zeros()),
        SpeedTerm::Constant(gamma) => (gamma, SVector::<f64, D>::zeros()),
    };
    let h = m.p.dot(&m.v) + k * s;
    let w = m.v + m.p * (k / s);
    let q = m.p + grad_k * s;
    let lfh = m.p_dot.dot(&w) + m.v_dot.dot(&q);
    let lgh = m.p_dot_u.transpose() * w + m.v_dot_u.transpose() * q;
    Ok(Lie {
        h,
        lfh,
        lgh,
        cos_phi: s / dist,
    })
}

fn finish<const D: usize, const M: usize>(
    m: &RelativeMotion<D, M>,
    r: f64,
    term: SpeedTerm,
    kind: BarrierKind,
    o: &Obstacle,
) -> Result<BarrierEval, BarrierError> {
    let lie = cone_lie(m, r, term).map_err(|e| tag_obstacle(e, o))?;
    Ok(BarrierEval {
        h: lie.h,
        lfh: lie.lfh,
        lgh: lie.lgh.iter().copied().collect(),
        geometry: Some(ConeGeometry {
            p_rel: embed(&m.p),
            v_rel: embed(&m.v),
            r,
            cos_phi: lie.cos_phi,
        }),
        kind,
    })
}

fn tag_obstacle(e: BarrierError, o: &Obstacle) -> BarrierError {
    match e {
        BarrierError::InsideObstacle {
            distance, radius, ..
        } => BarrierError::InsideObstacle {
            id: o.id.clone(),
            distance,
            radius,
        },
        other => other,
    }
}

fn planar_obstacle(o: &Obstacle) -> (Vector2<f64>, Vector2<f64>) {
    let c = o.state.center;
    let cd = o.state.velocity;
    (Vector2::new(c.x, c.y), Vector2::new(cd.x, cd.y))
}

fn planar_radius(o: &Obstacle, width: f64, model: ModelTag, kind: &'static str) -> Result<f64, BarrierError> {
    match o.shape {
        ObstacleShape::Cylinder { .. } => Err(BarrierError::Unsupported {
            kind,
            model,
            shape: "cylinder",
        }),
        ref shape => Ok(effective_radius(shape, width)),
    }
}

pub(crate) fn unicycle_motion(
    s: &UnicycleState,
    p: &UnicycleParams,
    o: &Obstacle,
) -> RelativeMotion<2, 2> {
    let (c, cd) = planar_obstacle(o);
    let (sin, cos) = s.theta.sin_cos();
    let l = p.l;
    let pos = Vector2::new(
        c.x - (s.x + l * cos),
        c.y - (s.y + l * sin),
    );
    let vel = Vector2::new(
        cd.x - (s.v * cos - l * s.omega * sin),
        cd.y - (s.v * sin + l * s.omega * cos),
    );
    let w2 = s.omega * s.omega;
    RelativeMotion {
        p: pos,
        v: vel,
        p_dot: vel,
        p_dot_u: SMatrix::zeros(),
        v_dot: Vector2::new(
            s.v * s.omega * sin + l * w2 * cos,
            -s.v * s.omega * cos + l * w2 * sin,
        ),
        v_dot_u: SMatrix::<f64, 2, 2>::new(-cos, l * sin, -sin, -l * cos),
    }
}

/// Here `v_rel` uses the heading-aligned speed, not `ṗ_rel`; the slip term
/// enters through `ṗ_rel = v_rel + β(v sin θ, −v cos θ)`.
pub(crate) fn bicycle_motion(
    s: &BicycleState,
    p: &BicycleParams,
    o: &Obstacle,
) -> RelativeMotion<2, 2> {
    let (c, cd) = planar_obstacle(o);
    let (sin, cos) = s.theta.sin_cos();
    let v = s.v;
    let vel = Vector2::new(cd.x - v * cos, cd.y - v * sin);
    let turn = v * v / p.l_r;
    RelativeMotion {
        p: Vector2::new(c.x - s.x, c.y - s.y),
        v: vel,
        p_dot: vel,
        p_dot_u: SMatrix::<f64, 2, 2>::new(0.0, v * sin, 0.0, -v * cos),
        v_dot: Vector2::zeros(),
        v_dot_u: SMatrix::<f64, 2, 2>::new(-cos, turn * sin, -sin, -turn * cos),
    }
}

pub(crate) fn point_mass_motion(s: &PointMassState, o: &Obstacle) -> RelativeMotion<2, 2> {
    let (c, cd) = planar_obstacle(o);
    let vel = cd - s.vel;
    RelativeMotion {
        p: c - s.pos,
        v: vel,
        p_dot: vel,
        p_dot_u: SMatrix::zeros(),
        v_dot: Vector2::zeros(),
        v_dot_u: -SMatrix::<f64, 2, 2>::identity(),
    }
}

/// Input part of the body-center acceleration in body coordinates, before
/// rotation: rows `(0, Ll/Iyy, 0, −Ll/Iyy)`, `(−Ll/Ixx, 0, Ll/Ixx, 0)`,
/// `(1/m, 1/m, 1/m, 1/m)`.
pub fn quadrotor_input_matrix(p: &QuadrotorParams) -> SMatrix<f64, 3, 4> {
    let ll = p.arm_length * p.body_offset;
    let kx = ll / p.inertia.x;
    let ky = ll / p.inertia.y;
    let im = 1.0 / p.mass;
    SMatrix::<f64, 3, 4>::new(
        0.0, ky, 0.0, -ky, //
        -kx, 0.0, kx, 0.0, //
        im, im, im, im,
    )
}

pub(crate) fn quadrotor_motion(
    s: &QuadrotorState,
    p: &QuadrotorParams,
    o: &Obstacle,
) -> Result<RelativeMotion<3, 4>, BarrierError> {
    euler_rate_map(&s.euler, p.eps_gimbal)?;
    let r = rotation_matrix(&s.euler);
    let b = Vec3::new(0.0, 0.0, p.body_offset);
    let w = s.omega;
    let pos = o.state.center - (s.pos + r * b);
    let vel = o.state.velocity - (s.vel + r * w.cross(&b));
    let w_dot0 = gyroscopic_accel(&w, p);
    let drift = Vec3::new(0.0, 0.0, p.gravity) - r * (w.cross(&w.cross(&b)) + w_dot0.cross(&b));
    Ok(RelativeMotion {
        p: pos,
        v: vel,
        p_dot: vel,
        p_dot_u: SMatrix::zeros(),
        v_dot: drift,
        v_dot_u: -(r * quadrotor_input_matrix(p)),
    })
}

/// Orthogonal projector onto the plane normal to `n`.
pub fn projector(n: &Vec3) -> Matrix3<f64> {
    Matrix3::identity() - n * n.transpose()
}

fn projected_motion(
    m: &RelativeMotion<3, 4>,
    axis: &Vec3,
) -> RelativeMotion<3, 4> {
    let proj = projector(axis);
    let v = proj * m.v;
    // v̇ is left unprojected: the barrier only pairs it with in-plane vectors,
    // for which ⟨x, P·v̇⟩ = ⟨x, v̇⟩.
    RelativeMotion {
        p: proj * m.p,
        v,
        p_dot: v,
        p_dot_u: SMatrix::zeros(),
        v_dot: m.v_dot,
        v_dot_u: m.v_dot_u,
    }
}

fn check_axis_velocity(o: &Obstacle) -> Result<Vec3, BarrierError> {
    match o.shape {
        ObstacleShape::Cylinder { axis, .. } => {
            let along = o.state.velocity.dot(&axis);
            if along.abs() > 1e-9 {
                return Err(BarrierError::AxisVelocity {
                    id: o.id.clone(),
                    along,
                });
            }
            Ok(axis)
        }
        ref other => Err(BarrierError::Unsupported {
            kind: "projection c3bf",
            model: ModelTag::Quadrotor,
            shape: shape_name(other),
        }),
    }
}

pub fn c3bf_unicycle(
    s: &UnicycleState,
    p: &UnicycleParams,
    o: &Obstacle,
) -> Result<BarrierEval, BarrierError> {
    let r = planar_radius(o, p.width, ModelTag::Unicycle, "c3bf")?;
    finish(&unicycle_motion(s, p, o), r, SpeedTerm::Relative, BarrierKind::C3bf, o)
}

pub fn c3bf_bicycle(
    s: &BicycleState,
    p: &BicycleParams,
    o: &Obstacle,
) -> Result<BarrierEval, BarrierError> {
    let r = planar_radius(o, p.width, ModelTag::Bicycle, "c3bf")?;
    finish(&bicycle_motion(s, p, o), r, SpeedTerm::Relative, BarrierKind::C3bf, o)
}

pub fn c3bf_point_mass(
    s: &PointMassState,
    p: &PointMassParams,
    o: &Obstacle,
) -> Result<BarrierEval, BarrierError> {
    let r = planar_radius(o, p.width, ModelTag::PointMass, "c3bf")?;
    finish(&point_mass_motion(s, o), r, SpeedTerm::Relative, BarrierKind::C3bf, o)
}

fn sphere_radius(o: &Obstacle, p: &QuadrotorParams, kind: &'static str) -> Result<f64, BarrierError> {
    match o.shape {
        ObstacleShape::Ellipsoid { .. } => Ok(effective_radius(&o.shape, p.width)),
        ref other => Err(BarrierError::Unsupported {
            kind,
            model: ModelTag::Quadrotor,
            shape: shape_name(other),
        }),
    }
}

/// Cone barrier for a quadrotor and an ellipsoidal obstacle bounded by a sphere.
pub fn c3bf_quadrotor_sphere(
    s: &QuadrotorState,
    p: &QuadrotorParams,
    o: &Obstacle,
) -> Result<BarrierEval, BarrierError> {
    let r = sphere_radius(o, p, "c3bf")?;
    finish(&quadrotor_motion(s, p, o)?, r, SpeedTerm::Relative, BarrierKind::C3bf, o)
}

/// Cone barrier on the plane perpendicular to a cylinder's axis.
pub fn c3bf_quadrotor_projection(
    s: &QuadrotorState,
    p: &QuadrotorParams,
    o: &Obstacle,
) -> Result<BarrierEval, BarrierError> {
    let axis = check_axis_velocity(o)?;
    let r = effective_radius(&o.shape, p.width);
    let m = projected_motion(&quadrotor_motion(s, p, o)?, &axis);
    finish(&m, r, SpeedTerm::Relative, BarrierKind::C3bf, o)
}

/// Square-root HOCBF `h = ⟨p_rel, v_rel⟩ + γ√(‖p_rel‖² − r²)` for the point
/// mass, the unicycle and the quadrotor with a spherical obstacle.
pub fn hocbf_eval(
    vehicle: &Vehicle,
    state: &VehicleState,
    o: &Obstacle,
    gamma: f64,
) -> Result<BarrierEval, BarrierError> {
    let kind = BarrierKind::Hocbf { gamma };
    let term = SpeedTerm::Constant(gamma);
    match (vehicle, state) {
        (Vehicle::PointMass(p), VehicleState::PointMass(s)) => {
            let r = planar_radius(o, p.width, ModelTag::PointMass, "hocbf")?;
            finish(&point_mass_motion(s, o), r, term, kind, o)
        }
        (Vehicle::Unicycle(p), VehicleState::Unicycle(s)) => {
            let r = planar_radius(o, p.width, ModelTag::Unicycle, "hocbf")?;
            finish(&unicycle_motion(s, p, o), r, term, kind, o)
        }
        (Vehicle::Quadrotor(p), VehicleState::Quadrotor(s)) => {
            let r = sphere_radius(o, p, "hocbf")?;
            finish(&quadrotor_motion(s, p, o)?, r, term, kind, o)
        }
        (Vehicle::Bicycle(_), VehicleState::Bicycle(_)) => Err(BarrierError::Unsupported {
            kind: "hocbf",
            model: ModelTag::Bicycle,
            shape: shape_name(&o.shape),
        }),
        _ => Err(ModelError::ModelMismatch.into()),
    }
}

/// Outcome of [`hocbf_effective_angle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectiveCone {
    CosPhi(f64),
    /// `(γ/‖v_rel‖)·cos φ > 1`: no real half angle.
    NoCone(f64),
}

/// Half-angle cosine of the cone implied by the HOCBF, `(γ/‖v_rel‖)·cos φ`.
pub fn hocbf_effective_angle(gamma: f64, v_rel_norm: f64, cos_phi: f64) -> EffectiveCone {
    let c = gamma / v_rel_norm * cos_phi;
    if c <= 1.0 {
        EffectiveCone::CosPhi(c)
    } else {
        EffectiveCone::NoCone(c)
    }
}

fn ellipse_axes(o: &Obstacle, model: ModelTag) -> Result<[f64; 3], BarrierError> {
    match (o.shape, model.is_planar()) {
        (ObstacleShape::PlanarEllipse { c1, c2 }, true) => Ok([c1, c2, f64::INFINITY]),
        (ObstacleShape::Ellipsoid { c1, c2, .. }, true) => Ok([c1, c2, f64::INFINITY]),
        (ObstacleShape::Ellipsoid { c1, c2, c3 }, false) => Ok([c1, c2, c3]),
        (ref other, _) => Err(BarrierError::Unsupported {
            kind: "ellipse",
            model,
            shape: shape_name(other),
        }),
    }
}

/// Ellipse barrier `Σ((c_i − x_i)/c_i)² − 1` on the vehicle base position.
///
/// Its input row is identically zero for the unicycle and the quadrotor; for
/// the bicycle only the slip column can be nonzero.
pub fn ellipse_cbf(
    vehicle: &Vehicle,
    state: &VehicleState,
    o: &Obstacle,
) -> Result<BarrierEval, BarrierError> {
    let axes = ellipse_axes(o, vehicle.tag())?;
    let c = o.state.center;
    let cd = o.state.velocity;
    let (pos, vel_drift, lgh): (Vec3, Vec3, Vec<Vec3>) = match (vehicle, state) {
        (Vehicle::Unicycle(_), VehicleState::Unicycle(s)) => {
            let heading = Vec3::new(s.theta.cos(), s.theta.sin(), 0.0);
            (Vec3::new(s.x, s.y, 0.0), s.v * heading, vec![Vec3::zeros(); 2])
        }
        (Vehicle::Bicycle(_), VehicleState::Bicycle(s)) => {
            let (sin, cos) = s.theta.sin_cos();
            // ẋ gains −vβ sin θ and ẏ gains +vβ cos θ.
            let slip = Vec3::new(-s.v * sin, s.v * cos, 0.0);
            (
                Vec3::new(s.x, s.y, 0.0),
                Vec3::new(s.v * cos, s.v * sin, 0.0),
                vec![Vec3::zeros(), slip],
            )
        }
        (Vehicle::PointMass(_), VehicleState::PointMass(s)) => (
            Vec3::new(s.pos.x, s.pos.y, 0.0),
            Vec3::new(s.vel.x, s.vel.y, 0.0),
            vec![Vec3::zeros(); 2],
        ),
        (Vehicle::Quadrotor(_), VehicleState::Quadrotor(s)) => {
            (s.pos, s.vel, vec![Vec3::zeros(); 4])
        }
        _ => return Err(ModelError::ModelMismatch.into()),
    };
    let dims = if vehicle.tag().is_planar() { 2 } else { 3 };
    let mut h = -1.0;
    let mut lfh = 0.0;
    let mut grad = Vec3::zeros();
    for i in 0..dims {
        let d = c[i] - pos[i];
        let c2 = axes[i] * axes[i];
        h += d * d / c2;
        lfh += 2.0 * d * (cd[i] - vel_drift[i]) / c2;
        grad[i] = -2.0 * d / c2;
    }
    let lgh = lgh.iter().map(|col| grad.dot(col)).collect();
    Ok(BarrierEval {
        h,
        lfh,
        lgh,
        geometry: None,
        kind: BarrierKind::Ellipse,
    })
}

/// Evaluates `kind` for one vehicle–obstacle pair. Quadrotor cone barriers
/// pick the sphere or projection variant from the obstacle shape.
pub fn evaluate(
    vehicle: &Vehicle,
    state: &VehicleState,
    o: &Obstacle,
    kind: BarrierKind,
) -> Result<BarrierEval, BarrierError> {
    match kind {
        BarrierKind::Ellipse => ellipse_cbf(vehicle, state, o),
        BarrierKind::Hocbf { gamma } => hocbf_eval(vehicle, state, o, gamma),
        BarrierKind::C3bf => match (vehicle, state) {
            (Vehicle::Unicycle(p), VehicleState::Unicycle(s)) => c3bf_unicycle(s, p, o),
            (Vehicle::Bicycle(p), VehicleState::Bicycle(s)) => c3bf_bicycle(s, p, o),
            (Vehicle::PointMass(p), VehicleState::PointMass(s)) => c3bf_point_mass(s, p, o),
            (Vehicle::Quadrotor(p), VehicleState::Quadrotor(s)) => match o.shape {
                ObstacleShape::Cylinder { .. } => c3bf_quadrotor_projection(s, p, o),
                _ => c3bf_quadrotor_sphere(s, p, o),
            },
            _ => Err(ModelError::ModelMismatch.into()),
        },
    }
}

/// Clearance of the protected point from an obstacle, measured the way the
/// cone barrier measures it (projected for cylinders).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separation {
    pub distance: f64,
    pub radius: f64,
}

impl Separation {
    pub fn margin(&self) -> f64 {
        self.distance - self.radius
    }
}

pub fn separation(
    vehicle: &Vehicle,
    state: &VehicleState,
    o: &Obstacle,
) -> Result<Separation, BarrierError> {
    let point = vehicle.reference_point(state)?;
    let mut rel = o.state.center - point;
    if vehicle.tag().is_planar() {
        rel.z = 0.0;
    }
    if let Some(axis) = o.shape.axis() {
        rel = projector(&axis) * rel;
    }
    Ok(Separation {
        distance: rel.norm(),
        radius: effective_radius(&o.shape, vehicle.width()),
    })
}

/// Central difference of `h` along the joint flow of vehicle and obstacle
/// under a constant input. Test oracle for the analytic Lie derivatives.
pub fn numeric_hdot(
    vehicle: &Vehicle,
    kind: BarrierKind,
    state: &VehicleState,
    o: &Obstacle,
    input: &[f64],
    eps: f64,
) -> Result<f64, BarrierError> {
    let xdot = vehicle.derivative(state, input)?;
    let plus = state.axpy(eps, &xdot);
    let minus = state.axpy(-eps, &xdot);
    let h_plus = evaluate(vehicle, &plus, &o.advance(eps), kind)?.h;
    let h_minus = evaluate(vehicle, &minus, &o.advance(-eps), kind)?.h;
    Ok((h_plus - h_minus) / (2.0 * eps))
}

/// Which vehicle model and obstacle geometry a barrier is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pairing {
    Unicycle,
    Bicycle,
    PointMass,
    QuadrotorSphere,
    QuadrotorProjection,
}

impl Pairing {
    pub const ALL: [Pairing; 5] = [
        Pairing::Unicycle,
        Pairing::Bicycle,
        Pairing::PointMass,
        Pairing::QuadrotorSphere,
        Pairing::QuadrotorProjection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pairing::Unicycle => "unicycle",
            Pairing::Bicycle => "bicycle",
            Pairing::PointMass => "point_mass",
            Pairing::QuadrotorSphere => "quadrotor_sphere",
            Pairing::QuadrotorProjection => "quadrotor_projection",
        }
    }

    pub fn model(self) -> ModelTag {
        match self {
            Pairing::Unicycle => ModelTag::Unicycle,
            Pairing::Bicycle => ModelTag::Bicycle,
            Pairing::PointMass => ModelTag::PointMass,
            Pairing::QuadrotorSphere | Pairing::QuadrotorProjection => ModelTag::Quadrotor,
        }
    }

    /// Pairing of a vehicle model with an obstacle shape.
    pub fn of(model: ModelTag, shape: &ObstacleShape) -> Pairing {
        match (model, shape) {
            (ModelTag::Unicycle, _) => Pairing::Unicycle,
            (ModelTag::Bicycle, _) => Pairing::Bicycle,
            (ModelTag::PointMass, _) => Pairing::PointMass,
            (ModelTag::Quadrotor, ObstacleShape::Cylinder { .. }) => Pairing::QuadrotorProjection,
            (ModelTag::Quadrotor, _) => Pairing::QuadrotorSphere,
        }
    }

    /// Whether `kind` is defined for this pairing.
    pub fn supports(self, kind: BarrierKind) -> bool {
        match kind {
            BarrierKind::C3bf => true,
            BarrierKind::Hocbf { .. } => matches!(
                self,
                Pairing::Unicycle | Pairing::PointMass | Pairing::QuadrotorSphere
            ),
            BarrierKind::Ellipse => self != Pairing::QuadrotorProjection,
        }
    }
}

/// A randomly drawn vehicle, state, obstacle and input.
#[derive(Debug, Clone)]
pub struct SampleCase {
    pub vehicle: Vehicle,
    pub state: VehicleState,
    pub obstacle: Obstacle,
    pub input: Vec<f64>,
}

fn random_unit(rng: &mut impl Rng) -> Vec3 {
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

fn uniform3(rng: &mut impl Rng, lo: f64, hi: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(lo..hi),
        rng.random_range(lo..hi),
        rng.random_range(lo..hi),
    )
}

/// Draws a vehicle–obstacle configuration with the protected point at least
/// `0.3` m outside the conservative radius and `‖v_rel‖ ≥ 0.05`.
pub fn sample_case(pairing: Pairing, rng: &mut impl Rng) -> SampleCase {
    use crate::vehicle_models::*;
    use std::f64::consts::PI;
    loop {
        let (vehicle, state, input) = match pairing.model() {
            ModelTag::Unicycle => {
                let p = UnicycleParams {
                    l: rng.random_range(0.05..0.3),
                    width: rng.random_range(0.1..0.5),
                };
                let s = UnicycleState {
                    x: rng.random_range(-5.0..5.0),
                    y: rng.random_range(-5.0..5.0),
                    theta: rng.random_range(-PI..PI),
                    v: rng.random_range(-2.0..2.0),
                    omega: rng.random_range(-2.0..2.0),
                };
                let u = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
                (Vehicle::Unicycle(p), VehicleState::Unicycle(s), u)
            }
            ModelTag::Bicycle => {
                let p = BicycleParams {
                    l_f: rng.random_range(0.1..0.3),
                    l_r: rng.random_range(0.1..0.3),
                    ..Default::default()
                };
                let s = BicycleState {
                    x: rng.random_range(-5.0..5.0),
                    y: rng.random_range(-5.0..5.0),
                    theta: rng.random_range(-PI..PI),
                    v: rng.random_range(-2.0..2.0),
                };
                let u = vec![
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-p.beta_max..p.beta_max),
                ];
                (Vehicle::Bicycle(p), VehicleState::Bicycle(s), u)
            }
            ModelTag::PointMass => {
                let s = PointMassState {
                    pos: Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
                    vel: Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
                };
                let u = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
                let p = PointMassParams {
                    width: rng.random_range(0.0..0.5),
                };
                (Vehicle::PointMass(p), VehicleState::PointMass(s), u)
            }
            ModelTag::Quadrotor => {
                let p = QuadrotorParams::default();
                let s = QuadrotorState {
                    pos: uniform3(rng, -5.0, 5.0),
                    vel: uniform3(rng, -2.0, 2.0),
                    euler: Vec3::new(
                        rng.random_range(-0.8..0.8),
                        rng.random_range(-0.8..0.8),
                        rng.random_range(-PI..PI),
                    ),
                    omega: uniform3(rng, -2.0, 2.0),
                };
                let u = (0..4).map(|_| rng.random_range(0.0..3.0)).collect();
                (Vehicle::Quadrotor(p), VehicleState::Quadrotor(s), u)
            }
        };
        let point = vehicle
            .reference_point(&state)
            .expect("sampled state matches vehicle");
        let planar = pairing.model().is_planar();
        let (shape, offset_dir, velocity) = match pairing {
            Pairing::QuadrotorProjection => {
                let axis = random_unit(rng);
                let shape = ObstacleShape::Cylinder {
                    axis,
                    height: rng.random_range(2.0..6.0),
                    radii: (rng.random_range(0.2..1.0), rng.random_range(0.2..1.0)),
                };
                let raw = uniform3(rng, -2.0, 2.0);
                let velocity = raw - axis * raw.dot(&axis);
                let dir = projector(&axis) * random_unit(rng);
                (shape, dir.normalize(), velocity)
            }
            Pairing::QuadrotorSphere => (
                ObstacleShape::Ellipsoid {
                    c1: rng.random_range(0.2..1.0),
                    c2: rng.random_range(0.2..1.0),
                    c3: rng.random_range(0.2..1.0),
                },
                random_unit(rng),
                uniform3(rng, -2.0, 2.0),
            ),
            _ => {
                let angle = rng.random_range(-PI..PI);
                (
                    ObstacleShape::PlanarEllipse {
                        c1: rng.random_range(0.2..1.5),
                        c2: rng.random_range(0.2..1.5),
                    },
                    Vec3::new(angle.cos(), angle.sin(), 0.0),
                    Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), 0.0),
                )
            }
        };
        let r = effective_radius(&shape, vehicle.width());
        let range = r + rng.random_range(0.3..5.0);
        let mut center = point + offset_dir * range;
        if pairing == Pairing::QuadrotorProjection {
            // slide along the axis; the projected distance is unchanged
            center += shape.axis().unwrap() * rng.random_range(-2.0..2.0);
        }
        if planar {
            center.z = 0.0;
        }
        let obstacle = Obstacle {
            id: "sample".into(),
            shape,
            state: crate::obstacles::ObstacleState { center, velocity },
        };
        match evaluate(&vehicle, &state, &obstacle, BarrierKind::C3bf) {
            Ok(e) => {
                let g = e.geometry.expect("cone geometry");
                if g.v_rel.norm() >= 0.05 {
                    return SampleCase {
                        vehicle,
                        state,
                        obstacle,
                        input,
                    };
                }
            }
            Err(_) => continue,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// Every sample had `‖L_g h‖` below threshold: not a valid CBF.
    Degenerate,
    /// No sample did.
    Nondegenerate,
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyReport {
    pub pairing: Pairing,
    pub kind: BarrierKind,
    pub samples: usize,
    pub min_norm: f64,
    pub max_norm: f64,
    pub fraction_below: f64,
    pub classification: Degeneracy,
    /// Input columns of `L_g h` that were ever above threshold.
    pub active_columns: Vec<bool>,
}

/// Samples random safe configurations and classifies how often `L_g h`
/// vanishes.
pub fn lgh_degeneracy_report(
    pairing: Pairing,
    kind: BarrierKind,
    sample_count: usize,
    seed: u64,
) -> Result<DegeneracyReport, BarrierError> {
    assert!(sample_count > 0, "sample_count must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = pairing.model().input_dim();
    let mut min_norm = f64::INFINITY;
    let mut max_norm = 0.0f64;
    let mut below = 0usize;
    let mut active = vec![false; m];
    for _ in 0..sample_count {
        let case = sample_case(pairing, &mut rng);
        let e = evaluate(&case.vehicle, &case.state, &case.obstacle, kind)?;
        let n = e.lgh_norm();
        min_norm = min_norm.min(n);
        max_norm = max_norm.max(n);
        if n < DEGENERACY_THRESHOLD {
            below += 1;
        }
        for (flag, g) in active.iter_mut().zip(&e.lgh) {
            *flag |= g.abs() >= DEGENERACY_THRESHOLD;
        }
    }
    let classification = match below {
        0 => Degeneracy::Nondegenerate,
        n if n == sample_count => Degeneracy::Degenerate,
        _ => Degeneracy::Mixed,
    };
    Ok(DegeneracyReport {
        pairing,
        kind,
        samples: sample_count,
        min_norm,
        max_norm,
        fraction_below: below as f64 / sample_count as f64,
        classification,
        active_columns: active,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obstacles::ObstacleState;
    use crate::vehicle_models::Vec2;

    fn v2(x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(x, y)
    }

    fn sphere(id: &str, radius: f64, center: Vec3, velocity: Vec3) -> Obstacle {
        Obstacle {
            id: id.into(),
            shape: ObstacleShape::Ellipsoid {
                c1: radius,
                c2: radius,
                c3: radius,
            },
            state: ObstacleState { center, velocity },
        }
    }

    #[test]
    fn cone_terms_examples() {
        let (h, cos_phi) = cone_terms(&v2(5.0, 0.0), &v2(-1.0, 0.0), 3.0).unwrap();
        assert!((h + 1.0).abs() < 1e-12);
        assert!((cos_phi - 0.8).abs() < 1e-12);
        let (h, _) = cone_terms(&v2(5.0, 0.0), &v2(-0.8, 0.6), 3.0).unwrap();
        assert!(h.abs() < 1e-12);
        let (h, _) = cone_terms(&v2(5.0, 0.0), &v2(1.0, 0.0), 3.0).unwrap();
        assert!((h - 9.0).abs() < 1e-12);
        let (h, _) = cone_terms(&v2(5.0, 0.0), &v2(0.0, 0.0), 3.0).unwrap();
        assert_eq!(h, 0.0);
        assert!(matches!(
            cone_terms(&v2(3.0, 0.0), &v2(1.0, 0.0), 3.0),
            Err(BarrierError::InsideObstacle { .. })
        ));
    }

    #[test]
    fn unicycle_examples() {
        let o = Obstacle::circle("o", 3.0, 5.0, 0.0);
        let p0 = UnicycleParams { l: 0.0, width: 0.0 };
        let s = UnicycleState { v: 1.0, ..Default::default() };
        let e = c3bf_unicycle(&s, &p0, &o).unwrap();
        assert!((e.h + 1.0).abs() < 1e-12);
        assert!(e.lgh_norm() > 0.0);

        let p1 = UnicycleParams { l: 1.0, width: 0.0 };
        let s = UnicycleState { omega: 1.0, ..Default::default() };
        let e = c3bf_unicycle(&s, &p1, &o).unwrap();
        let g = e.geometry.unwrap();
        assert!((g.v_rel - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-12);
        // p_rel = (4, 0) with l = 1: h = 0 + 4·√(16 − 9)... evaluated directly
        let (h, _) = cone_terms(&v2(4.0, 0.0), &v2(0.0, -1.0), 3.0).unwrap();
        assert!((e.h - h).abs() < 1e-12);

        let still = UnicycleState { x: 1.0, y: -2.0, theta: 0.4, ..Default::default() };
        let e = c3bf_unicycle(&still, &p1, &o).unwrap();
        assert_eq!(e.h, 0.0);
        assert_eq!(e.hdot(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn bicycle_examples() {
        let o = Obstacle::circle("o", 3.0, 5.0, 0.0);
        let p = BicycleParams { width: 1e-300, ..Default::default() };
        let e = c3bf_bicycle(&BicycleState { v: 1.0, ..Default::default() }, &p, &o).unwrap();
        assert!((e.h + 1.0).abs() < 1e-12);
        let e = c3bf_bicycle(&BicycleState::default(), &p, &o).unwrap();
        assert_eq!(e.h, 0.0);
        assert_eq!(e.geometry.unwrap().v_rel, Vec3::zeros());
    }

    #[test]
    fn point_mass_examples() {
        let o = Obstacle::circle("o", 3.0, 5.0, 0.0);
        let p = PointMassParams { width: 0.0 };
        let s = PointMassState { pos: Vec2::zeros(), vel: Vec2::new(1.0, 0.0) };
        let e = c3bf_point_mass(&s, &p, &o).unwrap();
        assert!((e.h + 1.0).abs() < 1e-12);
        // lgh = −(p + v·s/‖v‖) = −((5,0) + (−1,0)·4) = (−1, 0)
        assert!((e.lgh[0] + 1.0).abs() < 1e-12 && e.lgh[1].abs() < 1e-12);

        let moving = o.clone().with_velocity(Vec3::new(1.0, 0.0, 0.0));
        let e = c3bf_point_mass(&s, &p, &moving).unwrap();
        assert_eq!(e.h, 0.0);
    }

    fn level_quad() -> (QuadrotorState, QuadrotorParams) {
        let p = QuadrotorParams {
            body_offset: 0.0,
            width: 0.0,
            ..Default::default()
        };
        (QuadrotorState::default(), p)
    }

    #[test]
    fn quadrotor_sphere_examples() {
        let (s, p) = level_quad();
        let o = sphere("s", 3.0, Vec3::new(5.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0));
        let e = c3bf_quadrotor_sphere(&s, &p, &o).unwrap();
        assert!((e.h + 1.0).abs() < 1e-12);
        let o = sphere("s", 3.0, Vec3::new(5.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0));
        let e = c3bf_quadrotor_sphere(&s, &p, &o).unwrap();
        assert!((e.h - 9.0).abs() < 1e-12);
    }

    #[test]
    fn quadrotor_projection_examples() {
        let (s, p) = level_quad();
        let cyl = ObstacleShape::Cylinder {
            axis: Vec3::z(),
            height: 4.0,
            radii: (3.0, 3.0),
        };
        let o = Obstacle {
            id: "c".into(),
            shape: cyl,
            state: ObstacleState {
                center: Vec3::new(5.0, 0.0, 2.0),
                velocity: Vec3::new(-1.0, 0.0, 0.0),
            },
        };
        let e = c3bf_quadrotor_projection(&s, &p, &o).unwrap();
        let g = e.geometry.unwrap();
        assert!((g.p_rel - Vec3::new(5.0, 0.0, 0.0)).norm() < 1e-12);
        assert!(g.p_rel.dot(&Vec3::z()).abs() < 1e-12);
        assert!((e.h + 1.0).abs() < 1e-12);

        let mut bad = o.clone();
        bad.state.velocity = Vec3::new(0.0, 0.0, 1.0);
        assert!(matches!(
            c3bf_quadrotor_projection(&s, &p, &bad),
            Err(BarrierError::AxisVelocity { .. })
        ));
    }

    #[test]
    fn projection_uses_in_plane_identities() {
        // lgh built from the unprojected v̇ must equal the one built from P·v̇.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let case = sample_case(Pairing::QuadrotorProjection, &mut rng);
            let (Vehicle::Quadrotor(p), VehicleState::Quadrotor(s)) = (&case.vehicle, &case.state)
            else {
                unreachable!()
            };
            let axis = case.obstacle.shape.axis().unwrap();
            let proj = projector(&axis);
            let raw = quadrotor_motion(s, p, &case.obstacle).unwrap();
            let lazy = projected_motion(&raw, &axis);
            let mut full = lazy;
            full.v_dot = proj * raw.v_dot;
            full.v_dot_u = proj * raw.v_dot_u;
            let r = effective_radius(&case.obstacle.shape, p.width);
            let a = cone_lie(&lazy, r, SpeedTerm::Relative).unwrap();
            let b = cone_lie(&full, r, SpeedTerm::Relative).unwrap();
            assert!((a.lfh - b.lfh).abs() <= 1e-9 * (1.0 + a.lfh.abs()));
            assert!((a.lgh - b.lgh).norm() <= 1e-9 * (1.0 + a.lgh.norm()));
        }
    }

    #[test]
    fn hocbf_examples() {
        let pm = Vehicle::PointMass(PointMassParams { width: 0.0 });
        let o = Obstacle::circle("o", 3.0, 5.0, 0.0);
        let s = VehicleState::PointMass(PointMassState { pos: Vec2::zeros(), vel: Vec2::new(1.0, 0.0) });
        let e = hocbf_eval(&pm, &s, &o, 1.0).unwrap();
        assert!((e.h + 1.0).abs() < 1e-12);
        let s = VehicleState::PointMass(PointMassState { pos: Vec2::zeros(), vel: Vec2::new(2.0, 0.0) });
        let ho = hocbf_eval(&pm, &s, &o, 1.0).unwrap();
        let c3 = evaluate(&pm, &s, &o, BarrierKind::C3bf).unwrap();
        assert!((ho.h + 6.0).abs() < 1e-12);
        assert!((c3.h + 2.0).abs() < 1e-12);

        let bike = Vehicle::Bicycle(BicycleParams::default());
        let bs = VehicleState::Bicycle(BicycleState::default());
        assert!(matches!(
            hocbf_eval(&bike, &bs, &o, 1.0),
            Err(BarrierError::Unsupported { .. })
        ));
    }

    #[test]
    fn effective_angle_examples() {
        assert_eq!(hocbf_effective_angle(1.0, 2.0, 0.8), EffectiveCone::CosPhi(0.4));
        assert_eq!(hocbf_effective_angle(1.5, 1.5, 0.8), EffectiveCone::CosPhi(0.8));
        assert!(matches!(hocbf_effective_angle(2.0, 1.0, 0.8), EffectiveCone::NoCone(c) if (c - 1.6).abs() < 1e-12));
    }

    #[test]
    fn ellipse_rows() {
        let o = Obstacle {
            id: "e".into(),
            shape: ObstacleShape::PlanarEllipse { c1: 2.0, c2: 1.0 },
            state: ObstacleState { center: Vec3::new(2.0, 0.0, 0.0), velocity: Vec3::new(0.3, 0.1, 0.0) },
        };
        let uni = Vehicle::Unicycle(UnicycleParams::default());
        let s = VehicleState::Unicycle(UnicycleState { x: 0.5, y: 0.2, theta: 0.3, v: 1.0, omega: 0.2 });
        let e = ellipse_cbf(&uni, &s, &o).unwrap();
        assert_eq!(e.lgh, vec![0.0, 0.0]);

        // on the boundary: (2 − 0)/2 = 1
        let s = VehicleState::Unicycle(UnicycleState::default());
        assert!(ellipse_cbf(&uni, &s, &o).unwrap().h.abs() < 1e-15);

        let quad = Vehicle::Quadrotor(QuadrotorParams::default());
        let ob = sphere("s", 1.0, Vec3::new(3.0, 0.0, 1.0), Vec3::zeros());
        let qs = VehicleState::Quadrotor(QuadrotorState {
            vel: Vec3::new(1.0, 0.0, 0.0),
            euler: Vec3::new(0.1, 0.2, 0.3),
            ..Default::default()
        });
        assert_eq!(ellipse_cbf(&quad, &qs, &ob).unwrap().lgh, vec![0.0; 4]);

        let bike = Vehicle::Bicycle(BicycleParams::default());
        let bs = VehicleState::Bicycle(BicycleState { x: 0.5, y: 0.5, theta: 0.3, v: 1.0 });
        let e = ellipse_cbf(&bike, &bs, &o).unwrap();
        assert_eq!(e.lgh[0], 0.0);
        assert!(e.lgh[1] != 0.0);
    }

    #[test]
    fn numeric_hdot_static_is_zero() {
        let pm = Vehicle::PointMass(PointMassParams::default());
        let s = VehicleState::PointMass(PointMassState { pos: Vec2::zeros(), vel: Vec2::zeros() });
        let o = Obstacle::circle("o", 1.0, 3.0, 1.0);
        for kind in [BarrierKind::C3bf, BarrierKind::Hocbf { gamma: 1.0 }, BarrierKind::Ellipse] {
            let d = numeric_hdot(&pm, kind, &s, &o, &[0.0, 0.0], 1e-6).unwrap();
            assert!(d.abs() < 1e-12, "{kind:?}: {d}");
        }
    }

    #[test]
    fn analytic_matches_numeric_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let kinds = [BarrierKind::C3bf, BarrierKind::Hocbf { gamma: 1.3 }, BarrierKind::Ellipse];
        for pairing in Pairing::ALL {
            for kind in kinds {
                if !pairing.supports(kind) {
                    continue;
                }
                for _ in 0..100 {
                    let c = sample_case(pairing, &mut rng);
                    let e = evaluate(&c.vehicle, &c.state, &c.obstacle, kind).unwrap();
                    let n = numeric_hdot(&c.vehicle, kind, &c.state, &c.obstacle, &c.input, 1e-6).unwrap();
                    let a = e.hdot(&c.input);
                    assert!(
                        (a - n).abs() <= 1e-4 * a.abs().max(1.0),
                        "{} {kind:?}: analytic {a} numeric {n}",
                        pairing.name()
                    );
                    let n0 = numeric_hdot(&c.vehicle, kind, &c.state, &c.obstacle, &vec![0.0; c.input.len()], 1e-6);
                    if let Ok(n0) = n0 {
                        // drift part alone; the bicycle rejects no input here since β = 0 is allowed
                        assert!((e.lfh - n0).abs() <= 1e-4 * e.lfh.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn table_one_classifications() {
        let r = lgh_degeneracy_report(Pairing::Unicycle, BarrierKind::Ellipse, 500, 1).unwrap();
        assert_eq!(r.classification, Degeneracy::Degenerate);
        let r = lgh_degeneracy_report(Pairing::Unicycle, BarrierKind::C3bf, 500, 1).unwrap();
        assert_eq!(r.classification, Degeneracy::Nondegenerate);
        let r = lgh_degeneracy_report(Pairing::QuadrotorSphere, BarrierKind::Ellipse, 200, 1).unwrap();
        assert_eq!(r.classification, Degeneracy::Degenerate);
        let r = lgh_degeneracy_report(Pairing::Bicycle, BarrierKind::Ellipse, 500, 1).unwrap();
        assert_eq!(r.active_columns, vec![false, true]);
    }
}
