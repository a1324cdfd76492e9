use std::fmt;

use serde::Serialize;

use super::simulate::segment_drive_sign;
use super::Trajectory;
use crate::mechanism::{validate_state, RangeViolation, Servo};

/// Relative slack on rate limits, absorbing rounding in durations computed
/// as `Δangle / max_rate`.
pub const RATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationPolicy {
    /// Servo 1 motion outside a driving configuration is a violation.
    #[default]
    Strict,
    /// Servo 1 motion outside a driving configuration is only a warning
    /// event in the simulation trace.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    EmptyTrajectory,
    InvalidConfiguration(String),
    TimeOrder {
        index: usize,
        previous: f64,
        t: f64,
    },
    Range {
        index: usize,
        t: f64,
        violation: RangeViolation,
    },
    Rate {
        segment: usize,
        servo: Servo,
        rate: f64,
        max_rate: f64,
    },
    Lift {
        index: usize,
        lift: f64,
        min: f64,
        max: f64,
    },
    DisengagedShaftMotion {
        segment: usize,
        delta_s1: f64,
    },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::EmptyTrajectory => "EmptyTrajectory",
            Violation::InvalidConfiguration(_) => "InvalidConfiguration",
            Violation::TimeOrder { .. } => "TimeOrderViolation",
            Violation::Range { .. } => "RangeViolation",
            Violation::Rate { .. } => "RateViolation",
            Violation::Lift { .. } => "LiftViolation",
            Violation::DisengagedShaftMotion { .. } => "DisengagedShaftMotion",
        }
    }

    /// Violations that leave nothing to simulate.
    pub(crate) fn is_structural(&self) -> bool {
        matches!(
            self,
            Violation::EmptyTrajectory | Violation::InvalidConfiguration(_) | Violation::TimeOrder { .. }
        )
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyTrajectory => write!(f, "EmptyTrajectory: no waypoints"),
            Violation::InvalidConfiguration(msg) => write!(f, "InvalidConfiguration: {msg}"),
            Violation::TimeOrder { index, previous, t } => write!(
                f,
                "TimeOrderViolation waypoint {index}: t={t} does not follow t={previous}"
            ),
            Violation::Range {
                index,
                t,
                violation,
            } => write!(
                f,
                "RangeViolation {} waypoint {index} t={t}: value={} range=[{}, {}]",
                violation.servo, violation.value, violation.min, violation.max
            ),
            Violation::Rate {
                segment,
                servo,
                rate,
                max_rate,
            } => write!(
                f,
                "RateViolation {servo} segment {segment}: {rate} deg/s exceeds {max_rate} deg/s"
            ),
            Violation::Lift {
                index,
                lift,
                min,
                max,
            } => write!(
                f,
                "LiftViolation servo1 waypoint {index}: lift={lift} range=[{min}, {max}]"
            ),
            Violation::DisengagedShaftMotion { segment, delta_s1 } => write!(
                f,
                "DisengagedShaftMotion segment {segment}: servo1 moves {delta_s1} deg outside a driving configuration"
            ),
        }
    }
}

/// Checks a trajectory against every constraint and reports all violations.
///
/// Covered: configuration sanity, strictly increasing finite times, exact
/// per-waypoint ranges, per-segment rate limits, the Servo 1 lift accumulated
/// along segments and, under [`ValidationPolicy::Strict`], Servo 1 motion on
/// segments that are not driving.
///
/// Segments are straight lines between the stored angles. A Servo 1 step
/// from 350 to 10 is a -340° sweep, never a +20° wraparound.
pub fn validate_trajectory(traj: &Trajectory, policy: ValidationPolicy) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Err(e) = traj.geometry.check() {
        out.push(Violation::InvalidConfiguration(e.to_string()));
    }
    if let Err(e) = traj.limits.check() {
        out.push(Violation::InvalidConfiguration(e.to_string()));
    }
    let Some(first) = traj.waypoints.first() else {
        out.push(Violation::EmptyTrajectory);
        return out;
    };

    let s1_limit = traj.limits.servo1;
    let mut lift = first.state.s1;
    for (index, wp) in traj.waypoints.iter().enumerate() {
        let range = validate_state(&wp.state, &traj.limits);
        let s1_in_range = !range.iter().any(|v| v.servo == Servo::One);
        out.extend(range.into_iter().map(|violation| Violation::Range {
            index,
            t: wp.t,
            violation,
        }));

        if index == 0 {
            if !wp.t.is_finite() {
                out.push(Violation::TimeOrder {
                    index,
                    previous: f64::NEG_INFINITY,
                    t: wp.t,
                });
            }
        } else {
            let prev = &traj.waypoints[index - 1];
            let segment = index - 1;
            let dt = wp.t - prev.t;
            if dt.is_nan() || dt <= 0.0 || !wp.t.is_finite() {
                out.push(Violation::TimeOrder {
                    index,
                    previous: prev.t,
                    t: wp.t,
                });
            } else {
                for servo in Servo::ALL {
                    let rate = (wp.state.get(servo) - prev.state.get(servo)).abs() / dt;
                    let max_rate = traj.limits.get(servo).max_rate;
                    if rate > max_rate * (1.0 + RATE_TOLERANCE) {
                        out.push(Violation::Rate {
                            segment,
                            servo,
                            rate,
                            max_rate,
                        });
                    }
                }
            }

            let delta_s1 = wp.state.s1 - prev.state.s1;
            lift += delta_s1;
            if s1_in_range && !s1_limit.contains(lift) {
                out.push(Violation::Lift {
                    index,
                    lift,
                    min: s1_limit.min,
                    max: s1_limit.max,
                });
            }
            if policy == ValidationPolicy::Strict
                && delta_s1 != 0.0
                && segment_drive_sign(&prev.state, &wp.state) == 0
            {
                out.push(Violation::DisengagedShaftMotion { segment, delta_s1 });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::{build_rotate_wheel_2n, Waypoint};
    use crate::mechanism::{MechanismGeometry, ServoLimits, ServoState};

    fn traj(points: &[(f64, [f64; 3])]) -> Trajectory {
        Trajectory::new(
            MechanismGeometry::default(),
            ServoLimits::default(),
            points
                .iter()
                .map(|(t, s)| Waypoint::new(*t, ServoState::new(s[0], s[1], s[2])))
                .collect(),
        )
    }

    #[test]
    fn routine_is_clean() {
        for n in [1, 4] {
            let t = build_rotate_wheel_2n(n, 1.0).unwrap();
            assert!(validate_trajectory(&t, ValidationPolicy::Strict).is_empty());
        }
    }

    #[test]
    fn wraparound_step_is_a_long_sweep() {
        // 350 -> 10 in 0.1 s can only be the -340° path: far over the rate limit.
        let t = traj(&[(0.0, [350.0, 90.0, -90.0]), (0.1, [10.0, 90.0, -90.0])]);
        let v = validate_trajectory(&t, ValidationPolicy::Strict);
        assert_eq!(v.len(), 1);
        match &v[0] {
            Violation::Rate { servo, rate, .. } => {
                assert_eq!(*servo, Servo::One);
                assert!((rate - 3400.0).abs() < 1e-9);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_timestamps() {
        let t = traj(&[(0.0, [0.0; 3]), (0.0, [0.0; 3])]);
        let v = validate_trajectory(&t, ValidationPolicy::Strict);
        assert_eq!(v, vec![Violation::TimeOrder { index: 1, previous: 0.0, t: 0.0 }]);
        assert!(v[0].to_string().starts_with("TimeOrderViolation"));
    }

    #[test]
    fn range_violation_is_reported_with_location() {
        let t = traj(&[(0.0, [0.0; 3]), (1.0, [0.0, 0.0, -90.0]), (2.0, [0.0, 90.0, -90.0]), (3.0, [400.0, 90.0, -90.0])]);
        let v = validate_trajectory(&t, ValidationPolicy::Strict);
        let range: Vec<_> = v.iter().filter(|v| v.kind() == "RangeViolation").collect();
        assert_eq!(range.len(), 1);
        assert!(range[0].to_string().starts_with("RangeViolation servo1 waypoint 3"));
        // 400 deg in 1 s also breaks the rate limit.
        assert!(v.iter().any(|v| v.kind() == "RateViolation"));
    }

    #[test]
    fn disengaged_shaft_motion_depends_on_policy() {
        let t = traj(&[(0.0, [0.0; 3]), (1.0, [90.0, 0.0, 0.0])]);
        let strict = validate_trajectory(&t, ValidationPolicy::Strict);
        assert_eq!(strict, vec![Violation::DisengagedShaftMotion { segment: 0, delta_s1: 90.0 }]);
        assert!(validate_trajectory(&t, ValidationPolicy::Lenient).is_empty());
    }

    #[test]
    fn switching_configuration_while_driving_is_disengaged() {
        let t = traj(&[(0.0, [0.0, 90.0, -90.0]), (1.0, [90.0, -90.0, 90.0])]);
        let v = validate_trajectory(&t, ValidationPolicy::Strict);
        assert!(v.iter().any(|v| v.kind() == "DisengagedShaftMotion"));
    }

    #[test]
    fn empty_and_bad_configuration() {
        let mut t = traj(&[]);
        assert_eq!(validate_trajectory(&t, ValidationPolicy::Strict), vec![Violation::EmptyTrajectory]);
        t.geometry.wheel_radius = -1.0;
        t.waypoints.push(Waypoint::new(0.0, ServoState::REST));
        let v = validate_trajectory(&t, ValidationPolicy::Strict);
        assert!(matches!(v[0], Violation::InvalidConfiguration(_)));
    }

    #[test]
    fn rate_limit_is_inclusive() {
        let t = traj(&[(0.0, [0.0, 90.0, -90.0]), (1.0, [360.0, 90.0, -90.0])]);
        assert!(validate_trajectory(&t, ValidationPolicy::Strict).is_empty());
        let t = traj(&[(0.0, [0.0, 90.0, -90.0]), (0.999, [360.0, 90.0, -90.0])]);
        assert_eq!(validate_trajectory(&t, ValidationPolicy::Strict).len(), 1);
    }
}
