//! Kinematic model of the three-servo homeostatic wheel.
//!
//! Frame conventions (body frame): `x` points in the travel direction, `y`
//! laterally toward the engaged wheel axle, `z` up.
//!
//! * Servo 2 swings the gantry about body `x`. At `s2 = 0` the gantry stands
//!   over the wheel; at `s2 = ±90` it lies on one side of it.
//! * Servo 1 turns the center shaft about the gantry-fixed axis `-z`. That
//!   axis maps to `+y` at `s2 = +90` and to `-y` at `s2 = -90`.
//! * The elbow carries no rotation of its own; the secondary shaft stays
//!   coaxial with the center shaft.
//! * Servo 3 pivots the wheel assembly about the wrist axis, elbow-frame `x`.
//!
//! With these conventions the two driving configurations `(s2, s3) = (+90, -90)`
//! and `(-90, +90)` leave the wheel upright with its axle along `y`, and a
//! Servo 1 increment turns the wheel about its axle by `sign(s2)` times that
//! increment. At `s2 = s3 = 0` the shaft is perpendicular to the axle and the
//! wheel cannot be driven (gimbal lock).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rotations::{UnitQuaternion, Vec3};

/// Default tolerance for the engagement predicate, degrees.
pub const ENGAGE_TOLERANCE: f64 = 1e-9;
/// Default tolerance for the gimbal-lock predicate, degrees.
pub const GIMBAL_TOLERANCE: f64 = 1e-6;

const GANTRY_AXIS: Vec3 = [1.0, 0.0, 0.0];
const SHAFT_AXIS: Vec3 = [0.0, 0.0, -1.0];
const WRIST_AXIS: Vec3 = [1.0, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Servo {
    /// Center-shaft twist.
    One,
    /// Gantry swing.
    Two,
    /// Wrist pivot.
    Three,
}

impl Servo {
    pub const ALL: [Servo; 3] = [Servo::One, Servo::Two, Servo::Three];

    pub fn index(self) -> usize {
        match self {
            Servo::One => 0,
            Servo::Two => 1,
            Servo::Three => 2,
        }
    }
}

impl fmt::Display for Servo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "servo{}", self.index() + 1)
    }
}

/// Joint angles of the three servos, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ServoState {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl ServoState {
    pub const REST: ServoState = ServoState {
        s1: 0.0,
        s2: 0.0,
        s3: 0.0,
    };

    pub const fn new(s1: f64, s2: f64, s3: f64) -> Self {
        Self { s1, s2, s3 }
    }

    pub fn get(&self, servo: Servo) -> f64 {
        match servo {
            Servo::One => self.s1,
            Servo::Two => self.s2,
            Servo::Three => self.s3,
        }
    }

    pub fn with(mut self, servo: Servo, angle: f64) -> Self {
        match servo {
            Servo::One => self.s1 = angle,
            Servo::Two => self.s2 = angle,
            Servo::Three => self.s3 = angle,
        }
        self
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }

    /// Linear interpolation, `frac` in `[0, 1]`. Endpoints are reproduced
    /// exactly.
    pub fn lerp(&self, other: &Self, frac: f64) -> Self {
        let mix = |a: f64, b: f64| {
            if frac == 1.0 {
                b
            } else {
                a + (b - a) * frac
            }
        };
        Self {
            s1: mix(self.s1, other.s1),
            s2: mix(self.s2, other.s2),
            s3: mix(self.s3, other.s3),
        }
    }
}

impl fmt::Display for ServoState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.s1, self.s2, self.s3)
    }
}

/// Closed range and rate limit of a single servo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServoLimit {
    #[serde(rename = "min_deg")]
    pub min: f64,
    #[serde(rename = "max_deg")]
    pub max: f64,
    #[serde(rename = "max_rate_deg_s")]
    pub max_rate: f64,
}

impl ServoLimit {
    pub const fn new(min: f64, max: f64, max_rate: f64) -> Self {
        Self { min, max, max_rate }
    }

    /// Exact closed-interval membership; NaN is never contained.
    pub fn contains(&self, angle: f64) -> bool {
        angle >= self.min && angle <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServoLimits {
    pub servo1: ServoLimit,
    pub servo2: ServoLimit,
    pub servo3: ServoLimit,
}

impl ServoLimits {
    pub fn get(&self, servo: Servo) -> &ServoLimit {
        match servo {
            Servo::One => &self.servo1,
            Servo::Two => &self.servo2,
            Servo::Three => &self.servo3,
        }
    }

    pub fn check(&self) -> Result<(), MechanismError> {
        for servo in Servo::ALL {
            let l = self.get(servo);
            let ordered = l.min.is_finite() && l.max.is_finite() && l.min < l.max;
            if !ordered || l.max_rate <= 0.0 || !l.max_rate.is_finite() {
                return Err(MechanismError::InvalidLimits { servo, limit: *l });
            }
        }
        Ok(())
    }
}

impl Default for ServoLimits {
    fn default() -> Self {
        Self {
            servo1: ServoLimit::new(0.0, 360.0, 360.0),
            servo2: ServoLimit::new(-90.0, 90.0, 360.0),
            servo3: ServoLimit::new(-90.0, 90.0, 360.0),
        }
    }
}

/// Link dimensions in meters. Only the wheel radius affects odometry; the
/// link lengths only place frames in [`forward_kinematics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanismGeometry {
    #[serde(rename = "wheel_radius_m")]
    pub wheel_radius: f64,
    #[serde(rename = "gantry_offset_m")]
    pub gantry_offset: f64,
    #[serde(rename = "upper_link_length_m")]
    pub upper_link_length: f64,
    #[serde(rename = "lower_link_length_m")]
    pub lower_link_length: f64,
}

impl MechanismGeometry {
    pub fn with_radius(radius: f64) -> Self {
        Self {
            wheel_radius: radius,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), MechanismError> {
        let lengths = [
            self.gantry_offset,
            self.upper_link_length,
            self.lower_link_length,
        ];
        if !(self.wheel_radius > 0.0 && self.wheel_radius.is_finite())
            || lengths.iter().any(|l| !(*l >= 0.0 && l.is_finite()))
        {
            return Err(MechanismError::InvalidGeometry(*self));
        }
        Ok(())
    }
}

impl Default for MechanismGeometry {
    fn default() -> Self {
        Self {
            wheel_radius: 0.10,
            gantry_offset: 0.10,
            upper_link_length: 0.20,
            lower_link_length: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeViolation {
    pub servo: Servo,
    pub value: f64,
    pub min: f64,
    pub max: f64,
}

impl fmt::Display for RangeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RangeViolation {} value={} range=[{}, {}]",
            self.servo, self.value, self.min, self.max
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanismError {
    #[error("state out of range: {}", join(.0))]
    Range(Vec<RangeViolation>),
    #[error("invalid limits for {servo}: {limit:?}")]
    InvalidLimits { servo: Servo, limit: ServoLimit },
    #[error("invalid geometry: {0:?}")]
    InvalidGeometry(MechanismGeometry),
}

fn join(violations: &[RangeViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Every angle outside its closed range. Comparison is exact.
pub fn validate_state(state: &ServoState, limits: &ServoLimits) -> Vec<RangeViolation> {
    Servo::ALL
        .into_iter()
        .filter_map(|servo| {
            let limit = limits.get(servo);
            let value = state.get(servo);
            (!limit.contains(value)).then_some(RangeViolation {
                servo,
                value,
                min: limit.min,
                max: limit.max,
            })
        })
        .collect()
}

/// True in the two driving configurations `(s2, s3) = (+90, -90)` and
/// `(-90, +90)`.
pub fn engaged(state: &ServoState, tol: f64) -> bool {
    let near = |a: f64, b: f64| (a - b).abs() <= tol;
    (near(state.s2, 90.0) && near(state.s3, -90.0)) || (near(state.s2, -90.0) && near(state.s3, 90.0))
}

/// Factor mapping a Servo 1 increment to wheel rotation: `sign(s2)` when
/// engaged, 0 otherwise.
pub fn drive_sign(state: &ServoState, tol: f64) -> i8 {
    if !engaged(state, tol) {
        0
    } else if state.s2 > 0.0 {
        1
    } else {
        -1
    }
}

/// Servo 1 is moving while Servos 2 and 3 sit at zero.
pub fn gimbal_lock_risk(state: &ServoState, s1_rate: f64, tol: f64) -> bool {
    state.s2.abs() <= tol && state.s3.abs() <= tol && s1_rate.abs() > 0.0
}

/// A rigid frame: orientation plus translation in meters, both in the body
/// frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion,
    pub translation: Vec3,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        rotation: UnitQuaternion::IDENTITY,
        translation: [0.0; 3],
    };

    /// `self ∘ (rotation, translation)`, the child expressed in `self`'s frame.
    fn then(&self, rotation: UnitQuaternion, translation: Vec3) -> Pose {
        let offset = self.rotation.rotate(translation);
        Pose {
            rotation: self.rotation * rotation,
            translation: [
                self.translation[0] + offset[0],
                self.translation[1] + offset[1],
                self.translation[2] + offset[2],
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePoses {
    pub body: Pose,
    pub gantry: Pose,
    pub shaft_tip: Pose,
    pub elbow: Pose,
    pub wrist: Pose,
    pub wheel_hub: Pose,
}

impl FramePoses {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &Pose)> {
        [
            ("body", &self.body),
            ("gantry", &self.gantry),
            ("shaft_tip", &self.shaft_tip),
            ("elbow", &self.elbow),
            ("wrist", &self.wrist),
            ("wheel_hub", &self.wheel_hub),
        ]
        .into_iter()
    }
}

/// Evaluates the chain body → gantry → center shaft → elbow → wrist → hub.
///
/// The state is checked against the default servo ranges.
pub fn forward_kinematics(
    geometry: &MechanismGeometry,
    state: &ServoState,
) -> Result<FramePoses, MechanismError> {
    let violations = validate_state(state, &ServoLimits::default());
    if !violations.is_empty() {
        return Err(MechanismError::Range(violations));
    }
    let rot = |axis, angle| {
        UnitQuaternion::from_axis_angle(axis, angle).expect("axes are unit and angles in range")
    };

    let body = Pose::IDENTITY;
    let gantry = body.then(rot(GANTRY_AXIS, state.s2), [0.0; 3]);
    // The center shaft starts at the top of the gantry and runs down its axis.
    let shaft_root = gantry.then(rot(SHAFT_AXIS, state.s1), [0.0, 0.0, geometry.gantry_offset]);
    let shaft_tip = shaft_root.then(UnitQuaternion::IDENTITY, [0.0, 0.0, -geometry.upper_link_length]);
    let elbow = shaft_tip;
    let wrist = elbow.then(UnitQuaternion::IDENTITY, [0.0, 0.0, -geometry.lower_link_length]);
    let wheel_hub = wrist.then(rot(WRIST_AXIS, state.s3), [0.0; 3]);

    Ok(FramePoses {
        body,
        gantry,
        shaft_tip,
        elbow,
        wrist,
        wheel_hub,
    })
}
