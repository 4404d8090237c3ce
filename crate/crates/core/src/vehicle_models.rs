//! Control-affine vehicle dynamics `ẋ = f(x) + g(x)u`.
//!
//! Four models are provided: the acceleration-controlled unicycle, the
//! small-slip kinematic bicycle, a plus-configuration quadrotor rigid body and
//! the planar double integrator. Everything is in SI units. Quadrotor attitude
//! uses ZYX (yaw, pitch, roll) Euler angles with body-frame angular rates.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Default slip-angle bound for the bicycle (π/6).
pub const DEFAULT_BETA_MAX: f64 = std::f64::consts::FRAC_PI_6;
/// Default distance from ±π/2 pitch at which the Euler-rate map is refused.
pub const DEFAULT_EPS_GIMBAL: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{what} = {value} is outside its domain")]
    Domain { what: &'static str, value: f64 },
    #[error("pitch {pitch} rad is within {eps} rad of the gimbal singularity")]
    Gimbal { pitch: f64, eps: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("expected {expected} input components, got {got}")]
    InputDimension { expected: usize, got: usize },
    #[error("state belongs to a different vehicle model")]
    ModelMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Unicycle,
    Bicycle,
    Quadrotor,
    PointMass,
}

impl ModelTag {
    pub fn name(self) -> &'static str {
        match self {
            ModelTag::Unicycle => "unicycle",
            ModelTag::Bicycle => "bicycle",
            ModelTag::Quadrotor => "quadrotor",
            ModelTag::PointMass => "point_mass",
        }
    }

    pub fn state_names(self) -> &'static [&'static str] {
        match self {
            ModelTag::Unicycle => &["x", "y", "theta", "v", "omega"],
            ModelTag::Bicycle => &["x", "y", "theta", "v"],
            ModelTag::Quadrotor => &[
                "x", "y", "z", "vx", "vy", "vz", "roll", "pitch", "yaw", "wx", "wy", "wz",
            ],
            ModelTag::PointMass => &["x", "y", "vx", "vy"],
        }
    }

    pub fn input_names(self) -> &'static [&'static str] {
        match self {
            ModelTag::Unicycle => &["a", "alpha"],
            ModelTag::Bicycle => &["a", "beta"],
            ModelTag::Quadrotor => &["f1", "f2", "f3", "f4"],
            ModelTag::PointMass => &["ax", "ay"],
        }
    }

    pub fn state_dim(self) -> usize {
        self.state_names().len()
    }

    pub fn input_dim(self) -> usize {
        self.input_names().len()
    }

    /// Planar models only read the x and y components of obstacle data.
    pub fn is_planar(self) -> bool {
        !matches!(self, ModelTag::Quadrotor)
    }
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// Unicycle

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnicycleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnicycleInput {
    pub a: f64,
    pub alpha: f64,
}

/// `l` is the distance from the wheel axis to the body center used for
/// collision geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnicycleParams {
    pub l: f64,
    pub width: f64,
}

impl Default for UnicycleParams {
    fn default() -> Self {
        Self { l: 0.1, width: 0.2 }
    }
}

pub fn unicycle_dynamics(s: &UnicycleState, u: &UnicycleInput) -> UnicycleState {
    let (sin, cos) = s.theta.sin_cos();
    UnicycleState {
        x: s.v * cos,
        y: s.v * sin,
        theta: s.omega,
        v: u.a,
        omega: u.alpha,
    }
}

// ---------------------------------------------------------------------------
// Bicycle

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BicycleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BicycleInput {
    pub a: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BicycleParams {
    pub l_f: f64,
    pub l_r: f64,
    pub width: f64,
    pub beta_max: f64,
}

impl Default for BicycleParams {
    fn default() -> Self {
        Self {
            l_f: 0.15,
            l_r: 0.15,
            width: 0.2,
            beta_max: DEFAULT_BETA_MAX,
        }
    }
}

impl BicycleParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (what, value) in [("l_f", self.l_f), ("l_r", self.l_r), ("width", self.width)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::Domain { what, value });
            }
        }
        if !(self.beta_max > 0.0 && self.beta_max < std::f64::consts::FRAC_PI_2) {
            return Err(ModelError::Domain {
                what: "beta_max",
                value: self.beta_max,
            });
        }
        Ok(())
    }
}

/// Maps a front-wheel steering angle to the slip angle at the center of mass.
pub fn slip_from_steering(delta: f64, p: &BicycleParams) -> Result<f64, ModelError> {
    if !delta.is_finite() || delta.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(ModelError::Domain {
            what: "delta",
            value: delta,
        });
    }
    Ok((p.l_r / (p.l_f + p.l_r) * delta.tan()).atan())
}

/// Small-slip bicycle: `cos β ≈ 1`, `sin β ≈ β`.
pub fn bicycle_dynamics(
    s: &BicycleState,
    u: &BicycleInput,
    p: &BicycleParams,
) -> Result<BicycleState, ModelError> {
    if !(u.beta.abs() <= p.beta_max) {
        return Err(ModelError::Domain {
            what: "beta",
            value: u.beta,
        });
    }
    let (sin, cos) = s.theta.sin_cos();
    let vb = s.v * u.beta;
    Ok(BicycleState {
        x: s.v * cos - vb * sin,
        y: s.v * sin + vb * cos,
        theta: vb / p.l_r,
        v: u.a,
    })
}

// ---------------------------------------------------------------------------
// Quadrotor

/// Roll, pitch and yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadrotorState {
    pub pos: Vec3,
    pub vel: Vec3,
    pub euler: Vec3,
    pub omega: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadrotorInput {
    pub f: [f64; 4],
}

/// `body_offset` is the signed distance along the body z axis from the base
/// to the body center; positive points toward the rotor plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadrotorParams {
    pub mass: f64,
    pub inertia: Vec3,
    pub arm_length: f64,
    pub c_tau: f64,
    pub body_offset: f64,
    pub gravity: f64,
    pub width: f64,
    pub eps_gimbal: f64,
}

impl Default for QuadrotorParams {
    fn default() -> Self {
        Self {
            mass: 0.5,
            inertia: Vec3::new(4.0e-3, 4.0e-3, 8.0e-3),
            arm_length: 0.2,
            c_tau: 0.02,
            body_offset: 0.05,
            gravity: 9.81,
            width: 0.3,
            eps_gimbal: DEFAULT_EPS_GIMBAL,
        }
    }
}

impl QuadrotorParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("mass", self.mass),
            ("inertia.x", self.inertia.x),
            ("inertia.y", self.inertia.y),
            ("inertia.z", self.inertia.z),
            ("arm_length", self.arm_length),
            ("c_tau", self.c_tau),
            ("gravity", self.gravity),
            ("width", self.width),
            ("eps_gimbal", self.eps_gimbal),
        ];
        for (what, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::Domain { what, value });
            }
        }
        if !self.body_offset.is_finite() {
            return Err(ModelError::NonFinite("body_offset"));
        }
        Ok(())
    }

    /// Maps per-propeller forces to (total thrust, τx, τy, τz).
    pub fn mix(&self, f: &[f64; 4]) -> [f64; 4] {
        let l = self.arm_length;
        [
            f[0] + f[1] + f[2] + f[3],
            l * (f[0] - f[2]),
            l * (f[1] - f[3]),
            l * self.c_tau * (f[0] - f[1] + f[2] - f[3]),
        ]
    }

    /// Inverse of [`QuadrotorParams::mix`].
    pub fn unmix(&self, thrust: f64, torque: &Vec3) -> [f64; 4] {
        let l = self.arm_length;
        let yaw = torque.z / (l * self.c_tau);
        let sum13 = 0.5 * (thrust + yaw);
        let sum24 = 0.5 * (thrust - yaw);
        let diff13 = torque.x / l;
        let diff24 = torque.y / l;
        [
            0.5 * (sum13 + diff13),
            0.5 * (sum24 + diff24),
            0.5 * (sum13 - diff13),
            0.5 * (sum24 - diff24),
        ]
    }
}

/// Body-to-inertial rotation `R = Rz(ψ)·Ry(θ)·Rx(φ)` for `euler = (φ, θ, ψ)`.
pub fn rotation_matrix(euler: &Vec3) -> Matrix3<f64> {
    let (sr, cr) = euler.x.sin_cos();
    let (sp, cp) = euler.y.sin_cos();
    let (sy, cy) = euler.z.sin_cos();
    Matrix3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )
}

/// Returns `(W, W⁻¹)` where `ω_body = W·(φ̇, θ̇, ψ̇)`.
pub fn euler_rate_map(euler: &Vec3, eps_gimbal: f64) -> Result<(Matrix3<f64>, Matrix3<f64>), ModelError> {
    if !euler.iter().all(|a| a.is_finite()) {
        return Err(ModelError::NonFinite("euler"));
    }
    let pitch = euler.y;
    if pitch.abs() >= std::f64::consts::FRAC_PI_2 - eps_gimbal {
        return Err(ModelError::Gimbal {
            pitch,
            eps: eps_gimbal,
        });
    }
    let (sr, cr) = euler.x.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let tp = sp / cp;
    let w = Matrix3::new(1.0, 0.0, -sp, 0.0, cr, sr * cp, 0.0, -sr, cr * cp);
    let w_inv = Matrix3::new(1.0, sr * tp, cr * tp, 0.0, cr, -sr, 0.0, sr / cp, cr / cp);
    Ok((w, w_inv))
}

/// Body torque from propeller forces, as `L·(f1−f3, f2−f4, c_τ(f1−f2+f3−f4))`.
pub fn quadrotor_torque(u: &QuadrotorInput, p: &QuadrotorParams) -> Vec3 {
    let m = p.mix(&u.f);
    Vec3::new(m[1], m[2], m[3])
}

/// Drift part of the body angular acceleration, `−I⁻¹(ω × Iω)`.
pub(crate) fn gyroscopic_accel(omega: &Vec3, p: &QuadrotorParams) -> Vec3 {
    let i_omega = p.inertia.component_mul(omega);
    -omega.cross(&i_omega).component_div(&p.inertia)
}

pub fn quadrotor_dynamics(
    s: &QuadrotorState,
    u: &QuadrotorInput,
    p: &QuadrotorParams,
) -> Result<QuadrotorState, ModelError> {
    let (_, w_inv) = euler_rate_map(&s.euler, p.eps_gimbal)?;
    let r = rotation_matrix(&s.euler);
    let thrust: f64 = u.f.iter().sum();
    let accel = Vec3::new(0.0, 0.0, -p.gravity) + r * Vec3::new(0.0, 0.0, thrust / p.mass);
    let torque = quadrotor_torque(u, p);
    let omega_dot = gyroscopic_accel(&s.omega, p) + torque.component_div(&p.inertia);
    Ok(QuadrotorState {
        pos: s.vel,
        vel: accel,
        euler: w_inv * s.omega,
        omega: omega_dot,
    })
}

// ---------------------------------------------------------------------------
// Point mass

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMassState {
    pub pos: Vec2,
    pub vel: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PointMassParams {
    pub width: f64,
}

impl Default for PointMassParams {
    fn default() -> Self {
        Self { width: 0.2 }
    }
}

pub fn point_mass_dynamics(s: &PointMassState, u: &Vec2) -> PointMassState {
    PointMassState { pos: s.vel, vel: *u }
}

// ---------------------------------------------------------------------------
// Model-generic wrappers

/// A vehicle model together with its physical parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Vehicle {
    Unicycle(UnicycleParams),
    Bicycle(BicycleParams),
    Quadrotor(QuadrotorParams),
    PointMass(PointMassParams),
}

/// State of any of the supported models. Derivatives use the same layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VehicleState {
    Unicycle(UnicycleState),
    Bicycle(BicycleState),
    Quadrotor(QuadrotorState),
    PointMass(PointMassState),
}

impl Vehicle {
    pub fn tag(&self) -> ModelTag {
        match self {
            Vehicle::Unicycle(_) => ModelTag::Unicycle,
            Vehicle::Bicycle(_) => ModelTag::Bicycle,
            Vehicle::Quadrotor(_) => ModelTag::Quadrotor,
            Vehicle::PointMass(_) => ModelTag::PointMass,
        }
    }

    pub fn default_for(tag: ModelTag) -> Self {
        match tag {
            ModelTag::Unicycle => Vehicle::Unicycle(UnicycleParams::default()),
            ModelTag::Bicycle => Vehicle::Bicycle(BicycleParams::default()),
            ModelTag::Quadrotor => Vehicle::Quadrotor(QuadrotorParams::default()),
            ModelTag::PointMass => Vehicle::PointMass(PointMassParams::default()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.tag().input_dim()
    }

    pub fn width(&self) -> f64 {
        match self {
            Vehicle::Unicycle(p) => p.width,
            Vehicle::Bicycle(p) => p.width,
            Vehicle::Quadrotor(p) => p.width,
            Vehicle::PointMass(p) => p.width,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Vehicle::Unicycle(p) => {
                if !p.l.is_finite() {
                    return Err(ModelError::NonFinite("l"));
                }
                if !(p.width >= 0.0 && p.width.is_finite()) {
                    return Err(ModelError::Domain {
                        what: "width",
                        value: p.width,
                    });
                }
                Ok(())
            }
            Vehicle::Bicycle(p) => p.validate(),
            Vehicle::Quadrotor(p) => p.validate(),
            Vehicle::PointMass(p) => {
                if !(p.width >= 0.0 && p.width.is_finite()) {
                    return Err(ModelError::Domain {
                        what: "width",
                        value: p.width,
                    });
                }
                Ok(())
            }
        }
    }

    /// `ẋ = f(x) + g(x)u` with the input given as a flat slice.
    pub fn derivative(&self, s: &VehicleState, u: &[f64]) -> Result<VehicleState, ModelError> {
        let expected = self.input_dim();
        if u.len() != expected {
            return Err(ModelError::InputDimension {
                expected,
                got: u.len(),
            });
        }
        match (self, s) {
            (Vehicle::Unicycle(_), VehicleState::Unicycle(s)) => Ok(VehicleState::Unicycle(
                unicycle_dynamics(s, &UnicycleInput { a: u[0], alpha: u[1] }),
            )),
            (Vehicle::Bicycle(p), VehicleState::Bicycle(s)) => Ok(VehicleState::Bicycle(
                bicycle_dynamics(s, &BicycleInput { a: u[0], beta: u[1] }, p)?,
            )),
            (Vehicle::Quadrotor(p), VehicleState::Quadrotor(s)) => {
                let input = QuadrotorInput {
                    f: [u[0], u[1], u[2], u[3]],
                };
                Ok(VehicleState::Quadrotor(quadrotor_dynamics(s, &input, p)?))
            }
            (Vehicle::PointMass(_), VehicleState::PointMass(s)) => Ok(VehicleState::PointMass(
                point_mass_dynamics(s, &Vec2::new(u[0], u[1])),
            )),
            _ => Err(ModelError::ModelMismatch),
        }
    }

    /// The point whose clearance is protected: the unicycle body center, the
    /// bicycle center of mass, the quadrotor body center, or the point mass.
    /// Planar models report `z = 0`.
    pub fn reference_point(&self, s: &VehicleState) -> Result<Vec3, ModelError> {
        match (self, s) {
            (Vehicle::Unicycle(p), VehicleState::Unicycle(s)) => Ok(Vec3::new(
                s.x + p.l * s.theta.cos(),
                s.y + p.l * s.theta.sin(),
                0.0,
            )),
            (Vehicle::Bicycle(_), VehicleState::Bicycle(s)) => Ok(Vec3::new(s.x, s.y, 0.0)),
            (Vehicle::Quadrotor(p), VehicleState::Quadrotor(s)) => {
                Ok(s.pos + rotation_matrix(&s.euler) * Vec3::new(0.0, 0.0, p.body_offset))
            }
            (Vehicle::PointMass(_), VehicleState::PointMass(s)) => {
                Ok(Vec3::new(s.pos.x, s.pos.y, 0.0))
            }
            _ => Err(ModelError::ModelMismatch),
        }
    }

    /// Velocity of [`Vehicle::reference_point`]. For the bicycle this is the
    /// heading-aligned velocity `v(cos θ, sin θ)`.
    pub fn reference_velocity(&self, s: &VehicleState) -> Result<Vec3, ModelError> {
        match (self, s) {
            (Vehicle::Unicycle(p), VehicleState::Unicycle(s)) => {
                let (sin, cos) = s.theta.sin_cos();
                Ok(Vec3::new(
                    s.v * cos - p.l * s.omega * sin,
                    s.v * sin + p.l * s.omega * cos,
                    0.0,
                ))
            }
            (Vehicle::Bicycle(_), VehicleState::Bicycle(s)) => {
                Ok(Vec3::new(s.v * s.theta.cos(), s.v * s.theta.sin(), 0.0))
            }
            (Vehicle::Quadrotor(p), VehicleState::Quadrotor(s)) => {
                let r = rotation_matrix(&s.euler);
                Ok(s.vel + r * s.omega.cross(&Vec3::new(0.0, 0.0, p.body_offset)))
            }
            (Vehicle::PointMass(_), VehicleState::PointMass(s)) => {
                Ok(Vec3::new(s.vel.x, s.vel.y, 0.0))
            }
            _ => Err(ModelError::ModelMismatch),
        }
    }
}

impl VehicleState {
    pub fn tag(&self) -> ModelTag {
        match self {
            VehicleState::Unicycle(_) => ModelTag::Unicycle,
            VehicleState::Bicycle(_) => ModelTag::Bicycle,
            VehicleState::Quadrotor(_) => ModelTag::Quadrotor,
            VehicleState::PointMass(_) => ModelTag::PointMass,
        }
    }

    /// Flattens the state in the column order of [`ModelTag::state_names`].
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            VehicleState::Unicycle(s) => vec![s.x, s.y, s.theta, s.v, s.omega],
            VehicleState::Bicycle(s) => vec![s.x, s.y, s.theta, s.v],
            VehicleState::Quadrotor(s) => {
                let mut out = Vec::with_capacity(12);
                for v in [&s.pos, &s.vel, &s.euler, &s.omega] {
                    out.extend(v.iter().copied());
                }
                out
            }
            VehicleState::PointMass(s) => vec![s.pos.x, s.pos.y, s.vel.x, s.vel.y],
        }
    }

    /// Inverse of [`VehicleState::to_vec`]. Panics if `values` has the wrong length.
    pub fn from_slice(tag: ModelTag, values: &[f64]) -> Self {
        assert_eq!(values.len(), tag.state_dim(), "state length for {tag}");
        let v = values;
        match tag {
            ModelTag::Unicycle => VehicleState::Unicycle(UnicycleState {
                x: v[0],
                y: v[1],
                theta: v[2],
                v: v[3],
                omega: v[4],
            }),
            ModelTag::Bicycle => VehicleState::Bicycle(BicycleState {
                x: v[0],
                y: v[1],
                theta: v[2],
                v: v[3],
            }),
            ModelTag::Quadrotor => VehicleState::Quadrotor(QuadrotorState {
                pos: Vec3::new(v[0], v[1], v[2]),
                vel: Vec3::new(v[3], v[4], v[5]),
                euler: Vec3::new(v[6], v[7], v[8]),
                omega: Vec3::new(v[9], v[10], v[11]),
            }),
            ModelTag::PointMass => VehicleState::PointMass(PointMassState {
                pos: Vec2::new(v[0], v[1]),
                vel: Vec2::new(v[2], v[3]),
            }),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }

    /// `self + k·other`, component-wise.
    pub fn axpy(&self, k: f64, other: &VehicleState) -> VehicleState {
        let a = self.to_vec();
        let b = other.to_vec();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + k * y).collect();
        VehicleState::from_slice(self.tag(), &sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unicycle_examples() {
        let d = unicycle_dynamics(
            &UnicycleState { x: 0.0, y: 0.0, theta: 0.0, v: 1.0, omega: 0.0 },
            &UnicycleInput::default(),
        );
        assert_eq!((d.x, d.y, d.theta, d.v, d.omega), (1.0, 0.0, 0.0, 0.0, 0.0));

        let d = unicycle_dynamics(
            &UnicycleState { x: 0.0, y: 0.0, theta: FRAC_PI_2, v: 2.0, omega: 0.0 },
            &UnicycleInput { a: 1.0, alpha: 0.5 },
        );
        assert!(close(d.x, 0.0, 1e-15) && close(d.y, 2.0, 1e-15));
        assert_eq!((d.theta, d.v, d.omega), (0.0, 1.0, 0.5));

        let d = unicycle_dynamics(
            &UnicycleState { x: 3.0, y: -1.0, theta: PI, v: 0.0, omega: 1.0 },
            &UnicycleInput::default(),
        );
        assert!(close(d.x, 0.0, 1e-15) && close(d.y, 0.0, 1e-15));
        assert_eq!(d.theta, 1.0);
    }

    #[test]
    fn slip_angle() {
        let p = BicycleParams { l_f: 0.15, l_r: 0.15, ..Default::default() };
        assert_eq!(slip_from_steering(0.0, &p).unwrap(), 0.0);
        assert!(close(slip_from_steering(0.2, &p).unwrap(), 0.101011, 1e-6));
        let small = 1e-7;
        assert!(close(slip_from_steering(small, &p).unwrap() / small, 0.5, 1e-9));
        assert!(matches!(
            slip_from_steering(FRAC_PI_2, &p),
            Err(ModelError::Domain { .. })
        ));
    }

    #[test]
    fn bicycle_examples() {
        let p = BicycleParams::default();
        let d = bicycle_dynamics(
            &BicycleState { x: 0.0, y: 0.0, theta: 0.0, v: 1.0 },
            &BicycleInput::default(),
            &p,
        )
        .unwrap();
        assert_eq!((d.x, d.y, d.theta, d.v), (1.0, 0.0, 0.0, 0.0));

        let d = bicycle_dynamics(
            &BicycleState { x: 0.0, y: 0.0, theta: 0.0, v: 2.0 },
            &BicycleInput { a: 0.0, beta: 0.1 },
            &p,
        )
        .unwrap();
        assert!(close(d.x, 2.0, 1e-15) && close(d.y, 0.2, 1e-15));
        assert!(close(d.theta, 0.2 / 0.15, 1e-12) && d.v == 0.0);

        let d = bicycle_dynamics(
            &BicycleState::default(),
            &BicycleInput { a: 1.0, beta: 0.1 },
            &p,
        )
        .unwrap();
        assert_eq!((d.x, d.y, d.theta, d.v), (0.0, 0.0, 0.0, 1.0));

        let err = bicycle_dynamics(
            &BicycleState::default(),
            &BicycleInput { a: 0.0, beta: 0.6 },
            &p,
        );
        assert!(matches!(err, Err(ModelError::Domain { what: "beta", .. })));
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation_matrix(&Vec3::zeros()), Matrix3::identity());
        let r = rotation_matrix(&Vec3::new(0.0, 0.0, FRAC_PI_2));
        let e = r * Vec3::x();
        assert!((e - Vec3::y()).norm() < 1e-15);
    }

    #[test]
    fn rotation_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let e = Vec3::new(
                rng.random_range(-PI..PI),
                rng.random_range(-1.5..1.5),
                rng.random_range(-PI..PI),
            );
            let r = rotation_matrix(&e);
            let err = (r.transpose() * r - Matrix3::identity()).abs().max();
            assert!(err < 1e-12);
            assert!((r.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn euler_rate_map_examples() {
        let (w, w_inv) = euler_rate_map(&Vec3::zeros(), DEFAULT_EPS_GIMBAL).unwrap();
        assert_eq!(w, Matrix3::identity());
        assert_eq!(w_inv, Matrix3::identity());
        assert!(matches!(
            euler_rate_map(&Vec3::new(0.0, FRAC_PI_2, 0.0), DEFAULT_EPS_GIMBAL),
            Err(ModelError::Gimbal { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let e = Vec3::new(
                rng.random_range(-PI..PI),
                rng.random_range(-1.5..1.5),
                rng.random_range(-PI..PI),
            );
            let (w, w_inv) = euler_rate_map(&e, DEFAULT_EPS_GIMBAL).unwrap();
            assert!((w * w_inv - Matrix3::identity()).abs().max() < 1e-10);
        }
    }

    fn skew(v: &Vec3) -> Matrix3<f64> {
        Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
    }

    #[test]
    fn euler_rates_reproduce_body_rates() {
        // Ṙ from a central difference along the Euler-rate flow must equal R·[ω]×.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        for _ in 0..200 {
            let e = Vec3::new(
                rng.random_range(-PI..PI),
                rng.random_range(-1.4..1.4),
                rng.random_range(-PI..PI),
            );
            let w = Vec3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let (_, w_inv) = euler_rate_map(&e, DEFAULT_EPS_GIMBAL).unwrap();
            let rates = w_inv * w;
            let r_dot = (rotation_matrix(&(e + h * rates)) - rotation_matrix(&(e - h * rates)))
                / (2.0 * h);
            let expected = rotation_matrix(&e) * skew(&w);
            let rel = (r_dot - expected).abs().max() / expected.abs().max().max(1.0);
            assert!(rel < 1e-5, "relative error {rel}");
        }
    }

    #[test]
    fn hover_and_free_fall() {
        let p = QuadrotorParams::default();
        let s = QuadrotorState {
            pos: Vec3::new(1.0, 2.0, 3.0),
            vel: Vec3::new(0.5, 0.0, 0.0),
            ..Default::default()
        };
        let hover = [p.mass * p.gravity / 4.0; 4];
        let d = quadrotor_dynamics(&s, &QuadrotorInput { f: hover }, &p).unwrap();
        assert_eq!(d.pos, s.vel);
        assert!(d.vel.norm() < 1e-15);
        assert_eq!(d.euler, Vec3::zeros());
        assert_eq!(d.omega, Vec3::zeros());

        let rest = QuadrotorState::default();
        let d = quadrotor_dynamics(&rest, &QuadrotorInput::default(), &p).unwrap();
        assert_eq!(d.vel, Vec3::new(0.0, 0.0, -p.gravity));
    }

    #[test]
    fn differential_thrust_torques() {
        let p = QuadrotorParams::default();
        let f = [2.0, 1.0, 1.0, 1.0];
        let d = quadrotor_dynamics(&QuadrotorState::default(), &QuadrotorInput { f }, &p).unwrap();
        assert!(close(d.omega.x, p.arm_length * 1.0 / p.inertia.x, 1e-12));
        assert_eq!(d.omega.y, 0.0);
        assert!(close(d.omega.z, p.arm_length * p.c_tau * 1.0 / p.inertia.z, 1e-12));
    }

    #[test]
    fn mixer_round_trip() {
        let p = QuadrotorParams::default();
        let f = [1.3, 0.7, 2.1, 0.4];
        let m = p.mix(&f);
        let back = p.unmix(m[0], &Vec3::new(m[1], m[2], m[3]));
        for (a, b) in f.iter().zip(back) {
            assert!(close(*a, b, 1e-12));
        }
    }

    #[test]
    fn point_mass_examples() {
        let d = point_mass_dynamics(
            &PointMassState { pos: Vec2::zeros(), vel: Vec2::new(1.0, 2.0) },
            &Vec2::zeros(),
        );
        assert_eq!((d.pos, d.vel), (Vec2::new(1.0, 2.0), Vec2::zeros()));
        let d = point_mass_dynamics(
            &PointMassState { pos: Vec2::new(5.0, 5.0), vel: Vec2::zeros() },
            &Vec2::new(1.0, -1.0),
        );
        assert_eq!((d.pos, d.vel), (Vec2::zeros(), Vec2::new(1.0, -1.0)));
    }

    #[test]
    fn input_dimension_and_mismatch_errors() {
        let v = Vehicle::default_for(ModelTag::PointMass);
        let s = VehicleState::PointMass(PointMassState::default());
        assert!(matches!(
            v.derivative(&s, &[1.0]),
            Err(ModelError::InputDimension { expected: 2, got: 1 })
        ));
        let other = VehicleState::Bicycle(BicycleState::default());
        assert_eq!(v.derivative(&other, &[0.0, 0.0]), Err(ModelError::ModelMismatch));
    }
}
