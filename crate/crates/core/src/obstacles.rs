//! Obstacle shapes, the conservative encompassing radius used by the cone,
//! and constant-velocity obstacle kinematics.

use crate::vehicle_models::Vec3;
use thiserror::Error;

/// Default ratio `max / max₂` above which an ellipsoid is treated as a cylinder.
pub const DEFAULT_CYLINDER_RATIO: f64 = 3.0;

const AXIS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObstacleError {
    #[error("semi-axis {name} = {value} must be positive and finite")]
    NonPositiveAxis { name: &'static str, value: f64 },
    #[error("cylinder axis must have unit norm (got {0})")]
    AxisNotUnit(f64),
    #[error("obstacle velocity has component {0} along the cylinder axis")]
    AxisVelocity(f64),
    #[error("non-finite obstacle {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObstacleShape {
    PlanarEllipse { c1: f64, c2: f64 },
    Ellipsoid { c1: f64, c2: f64, c3: f64 },
    /// Infinite-extent cylinder for the purpose of the barrier; `height` is
    /// kept for reporting.
    Cylinder { axis: Vec3, height: f64, radii: (f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeClass {
    SphereLike,
    CylinderLike,
}

fn sorted_desc(c: [f64; 3]) -> [f64; 3] {
    let mut c = c;
    c.sort_by(|a, b| b.total_cmp(a));
    c
}

/// `CylinderLike` iff the largest semi-axis is at least `ratio_threshold`
/// times the second largest.
pub fn classify_shape(c1: f64, c2: f64, c3: f64, ratio_threshold: f64) -> ShapeClass {
    let [max, max2, _] = sorted_desc([c1, c2, c3]);
    if max / max2 >= ratio_threshold {
        ShapeClass::CylinderLike
    } else {
        ShapeClass::SphereLike
    }
}

impl ObstacleShape {
    /// Builds an ellipsoid, or an axis-aligned cylinder along its longest
    /// semi-axis when [`classify_shape`] says so.
    pub fn from_semi_axes(c1: f64, c2: f64, c3: f64, ratio_threshold: f64) -> Self {
        match classify_shape(c1, c2, c3, ratio_threshold) {
            ShapeClass::SphereLike => ObstacleShape::Ellipsoid { c1, c2, c3 },
            ShapeClass::CylinderLike => {
                let c = [c1, c2, c3];
                let long = (0..3).max_by(|&a, &b| c[a].total_cmp(&c[b])).unwrap_or(2);
                let mut axis = Vec3::zeros();
                axis[long] = 1.0;
                let others: Vec<f64> = (0..3).filter(|&i| i != long).map(|i| c[i]).collect();
                ObstacleShape::Cylinder {
                    axis,
                    height: c[long],
                    radii: (others[0], others[1]),
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), ObstacleError> {
        let check = |name, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ObstacleError::NonPositiveAxis { name, value })
            }
        };
        match *self {
            ObstacleShape::PlanarEllipse { c1, c2 } => {
                check("c1", c1)?;
                check("c2", c2)
            }
            ObstacleShape::Ellipsoid { c1, c2, c3 } => {
                check("c1", c1)?;
                check("c2", c2)?;
                check("c3", c3)
            }
            ObstacleShape::Cylinder { axis, height, radii } => {
                check("height", height)?;
                check("radius", radii.0)?;
                check("radius", radii.1)?;
                let n = axis.norm();
                if !((n - 1.0).abs() <= AXIS_TOL) {
                    return Err(ObstacleError::AxisNotUnit(n));
                }
                Ok(())
            }
        }
    }

    pub fn axis(&self) -> Option<Vec3> {
        match self {
            ObstacleShape::Cylinder { axis, .. } => Some(*axis),
            _ => None,
        }
    }
}

/// Radius of the conservative circle (or sphere, or cylinder cross-section)
/// inflated by half the vehicle width.
pub fn effective_radius(shape: &ObstacleShape, vehicle_width: f64) -> f64 {
    let half = 0.5 * vehicle_width;
    match *shape {
        ObstacleShape::PlanarEllipse { c1, c2 } => c1.max(c2) + half,
        ObstacleShape::Ellipsoid { c1, c2, c3 } => c1.max(c2).max(c3) + half,
        ObstacleShape::Cylinder { radii, .. } => radii.0.max(radii.1) + half,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObstacleState {
    pub center: Vec3,
    pub velocity: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub id: String,
    pub shape: ObstacleShape,
    pub state: ObstacleState,
}

impl Obstacle {
    pub fn new(
        id: impl Into<String>,
        shape: ObstacleShape,
        center: Vec3,
        velocity: Vec3,
    ) -> Result<Self, ObstacleError> {
        let o = Self {
            id: id.into(),
            shape,
            state: ObstacleState { center, velocity },
        };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<(), ObstacleError> {
        self.shape.validate()?;
        if !self.state.center.iter().all(|v| v.is_finite()) {
            return Err(ObstacleError::NonFinite("center"));
        }
        if !self.state.velocity.iter().all(|v| v.is_finite()) {
            return Err(ObstacleError::NonFinite("velocity"));
        }
        if let Some(axis) = self.shape.axis() {
            let along = self.state.velocity.dot(&axis);
            if along.abs() > AXIS_TOL {
                return Err(ObstacleError::AxisVelocity(along));
            }
        }
        Ok(())
    }

    /// Static circular obstacle in the plane.
    pub fn circle(id: impl Into<String>, radius: f64, x: f64, y: f64) -> Self {
        Self {
            id: id.into(),
            shape: ObstacleShape::PlanarEllipse { c1: radius, c2: radius },
            state: ObstacleState {
                center: Vec3::new(x, y, 0.0),
                velocity: Vec3::zeros(),
            },
        }
    }

    pub fn with_velocity(mut self, velocity: Vec3) -> Self {
        self.state.velocity = velocity;
        self
    }

    pub fn effective_radius(&self, vehicle_width: f64) -> f64 {
        effective_radius(&self.shape, vehicle_width)
    }

    pub fn advance(&self, dt: f64) -> Obstacle {
        advance(self, dt)
    }
}

/// Moves the obstacle along its constant velocity; shape and velocity are
/// untouched.
pub fn advance(o: &Obstacle, dt: f64) -> Obstacle {
    let mut next = o.clone();
    next.state.center = o.state.center + o.state.velocity * dt;
    next
}
