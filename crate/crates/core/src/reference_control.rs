//! Reference controllers that the safety filter modifies.
//!
//! Ground vehicles track a speed and heading with PD laws. The quadrotor uses
//! a cascade: position PD with gravity feedforward, small-angle attitude
//! targets at zero yaw, attitude PD to body torques, then the inverse mixer.

use crate::vehicle_models::{
    euler_rate_map, rotation_matrix, BicycleInput, BicycleParams, BicycleState, ModelError,
    PointMassState, QuadrotorInput, QuadrotorParams, QuadrotorState, UnicycleInput, UnicycleState,
    Vec2, Vec3, Vehicle, VehicleState,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Cruise at `speed` along `heading`. The quadrotor also holds
    /// `altitude` when given, else zero vertical speed.
    ConstantVelocity {
        speed: f64,
        heading: f64,
        altitude: Option<f64>,
    },
    /// Go to `point` (z ignored by planar models) no faster than `speed`.
    Waypoint { point: Vec3, speed: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Gains {
    pub kp_v: f64,
    pub kp_theta: f64,
    pub kd_theta: f64,
    pub kp_pos: f64,
    pub kd_pos: f64,
    pub kp_att: f64,
    pub kd_att: f64,
    /// Largest commanded roll or pitch, rad.
    pub max_tilt: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            kp_v: 1.0,
            kp_theta: 2.0,
            kd_theta: 0.5,
            kp_pos: 2.0,
            kd_pos: 1.5,
            kp_att: 20.0,
            kd_att: 4.0,
            max_tilt: 0.5,
        }
    }
}

impl Gains {
    pub fn is_valid(&self) -> bool {
        [
            self.kp_v,
            self.kp_theta,
            self.kd_theta,
            self.kp_pos,
            self.kd_pos,
            self.kp_att,
            self.kd_att,
            self.max_tilt,
        ]
        .iter()
        .all(|g| *g >= 0.0 && g.is_finite())
    }
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Desired planar speed and heading for a ground vehicle at `pos`.
fn planar_goal(pos: Vec2, t: &Target) -> (f64, f64) {
    match *t {
        Target::ConstantVelocity { speed, heading, .. } => (speed, heading),
        Target::Waypoint { point, speed } => {
            let d = Vec2::new(point.x - pos.x, point.y - pos.y);
            let dist = d.norm();
            if dist == 0.0 {
                (0.0, 0.0)
            } else {
                (speed.min(dist), d.y.atan2(d.x))
            }
        }
    }
}

pub fn pd_unicycle(s: &UnicycleState, t: &Target, g: &Gains) -> UnicycleInput {
    let (v_des, heading) = planar_goal(Vec2::new(s.x, s.y), t);
    UnicycleInput {
        a: g.kp_v * (v_des - s.v),
        alpha: g.kp_theta * wrap_angle(heading - s.theta) - g.kd_theta * s.omega,
    }
}

pub fn pd_bicycle(s: &BicycleState, t: &Target, g: &Gains, p: &BicycleParams) -> BicycleInput {
    let (v_des, heading) = planar_goal(Vec2::new(s.x, s.y), t);
    let beta = (g.kp_theta * wrap_angle(heading - s.theta)).clamp(-p.beta_max, p.beta_max);
    BicycleInput {
        a: g.kp_v * (v_des - s.v),
        beta,
    }
}

pub fn pd_point_mass(s: &PointMassState, t: &Target, g: &Gains) -> Vec2 {
    let (v_des, heading) = planar_goal(s.pos, t);
    let want = Vec2::new(heading.cos(), heading.sin()) * v_des;
    (want - s.vel) * g.kp_v
}

/// Desired inertial acceleration of the quadrotor base.
fn quad_accel(s: &QuadrotorState, t: &Target, g: &Gains) -> Vec3 {
    match *t {
        Target::ConstantVelocity {
            speed,
            heading,
            altitude,
        } => {
            let want = Vec3::new(heading.cos() * speed, heading.sin() * speed, 0.0);
            let mut acc = (want - s.vel) * g.kd_pos;
            if let Some(z) = altitude {
                acc.z += g.kp_pos * (z - s.pos.z);
            }
            acc
        }
        Target::Waypoint { point, speed } => {
            // position loop as a velocity command, capped at `speed`
            let mut want = (point - s.pos) * (g.kp_pos / g.kd_pos.max(f64::MIN_POSITIVE));
            let n = want.norm();
            if n > speed {
                want *= speed / n;
            }
            (want - s.vel) * g.kd_pos
        }
    }
}

pub fn pd_quadrotor(
    s: &QuadrotorState,
    t: &Target,
    g: &Gains,
    p: &QuadrotorParams,
) -> Result<QuadrotorInput, ModelError> {
    euler_rate_map(&s.euler, p.eps_gimbal)?;
    let acc = quad_accel(s, t, g);
    let r = rotation_matrix(&s.euler);
    let body_z = r * Vec3::z();
    let thrust = (p.mass * (acc + Vec3::new(0.0, 0.0, p.gravity)).dot(&body_z)).max(0.0);

    let (sy, cy) = s.euler.z.sin_cos();
    let pitch_des = ((acc.x * cy + acc.y * sy) / p.gravity).clamp(-g.max_tilt, g.max_tilt);
    let roll_des = ((acc.x * sy - acc.y * cy) / p.gravity).clamp(-g.max_tilt, g.max_tilt);
    let err = Vec3::new(
        roll_des - s.euler.x,
        pitch_des - s.euler.y,
        wrap_angle(-s.euler.z),
    );
    let torque = p
        .inertia
        .component_mul(&(err * g.kp_att - s.omega * g.kd_att));
    Ok(QuadrotorInput {
        f: p.unmix(thrust, &torque),
    })
}

/// Model-generic reference input as a flat vector.
pub fn reference_input(
    vehicle: &Vehicle,
    state: &VehicleState,
    t: &Target,
    g: &Gains,
) -> Result<Vec<f64>, ModelError> {
    match (vehicle, state) {
        (Vehicle::Unicycle(_), VehicleState::Unicycle(s)) => {
            let u = pd_unicycle(s, t, g);
            Ok(vec![u.a, u.alpha])
        }
        (Vehicle::Bicycle(p), VehicleState::Bicycle(s)) => {
            let u = pd_bicycle(s, t, g, p);
            Ok(vec![u.a, u.beta])
        }
        (Vehicle::PointMass(_), VehicleState::PointMass(s)) => {
            let u = pd_point_mass(s, t, g);
            Ok(vec![u.x, u.y])
        }
        (Vehicle::Quadrotor(p), VehicleState::Quadrotor(s)) => {
            Ok(pd_quadrotor(s, t, g, p)?.f.to_vec())
        }
        _ => Err(ModelError::ModelMismatch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cruise(speed: f64, heading: f64) -> Target {
        Target::ConstantVelocity {
            speed,
            heading,
            altitude: None,
        }
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn unicycle_examples() {
        let g = Gains::default();
        let s = UnicycleState { v: 1.0, theta: 0.3, ..Default::default() };
        let u = pd_unicycle(&s, &cruise(1.0, 0.3), &g);
        assert_eq!((u.a, u.alpha), (0.0, 0.0));
        assert!(pd_unicycle(&s, &cruise(2.0, 0.3), &g).a > 0.0);
        let s = UnicycleState::default();
        assert!(pd_unicycle(&s, &cruise(0.0, PI / 2.0), &g).alpha > 0.0);
    }

    #[test]
    fn bicycle_examples() {
        let g = Gains::default();
        let p = BicycleParams::default();
        let s = BicycleState { v: 1.0, ..Default::default() };
        let u = pd_bicycle(&s, &cruise(1.0, 0.0), &g, &p);
        assert_eq!((u.a, u.beta), (0.0, 0.0));
        assert_eq!(pd_bicycle(&s, &cruise(1.0, 2.0), &g, &p).beta, p.beta_max);
        assert!(pd_bicycle(&s, &cruise(0.5, 0.0), &g, &p).a < 0.0);
    }

    #[test]
    fn quadrotor_hover_and_climb() {
        let g = Gains::default();
        let p = QuadrotorParams::default();
        let s = QuadrotorState {
            pos: Vec3::new(1.0, 2.0, 3.0),
            ..Default::default()
        };
        let hover = Target::Waypoint { point: s.pos, speed: 1.0 };
        let u = pd_quadrotor(&s, &hover, &g, &p).unwrap();
        for f in u.f {
            assert!((f - p.mass * p.gravity / 4.0).abs() < 1e-12);
        }
        let above = Target::Waypoint { point: s.pos + Vec3::z(), speed: 1.0 };
        let u = pd_quadrotor(&s, &above, &g, &p).unwrap();
        let m = p.mix(&u.f);
        assert!(m[0] > p.mass * p.gravity);
        assert!(m[1].abs() < 1e-12 && m[2].abs() < 1e-12 && m[3].abs() < 1e-12);
    }

    #[test]
    fn quadrotor_tilts_toward_target() {
        let g = Gains::default();
        let p = QuadrotorParams::default();
        let s = QuadrotorState::default();
        let ahead = Target::Waypoint { point: Vec3::new(5.0, 0.0, 0.0), speed: 1.0 };
        let u = pd_quadrotor(&s, &ahead, &g, &p).unwrap();
        // positive pitch tilts thrust toward +x
        assert!(p.mix(&u.f)[2] > 0.0);
    }

    #[test]
    fn controllers_are_memoryless() {
        let g = Gains::default();
        let s = UnicycleState { x: 0.3, y: -1.0, theta: 2.0, v: 0.4, omega: -0.2 };
        let t = Target::Waypoint { point: Vec3::new(4.0, 4.0, 0.0), speed: 1.0 };
        assert_eq!(pd_unicycle(&s, &t, &g), pd_unicycle(&s, &t, &g));
    }
}
