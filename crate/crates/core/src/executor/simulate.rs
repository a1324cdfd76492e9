use std::fmt;

use super::validate::{validate_trajectory, ValidationPolicy, Violation};
use super::{ExecError, Trajectory};
use crate::mechanism::{
    drive_sign, engaged, gimbal_lock_risk, validate_state, ServoState, ENGAGE_TOLERANCE,
    GIMBAL_TOLERANCE,
};
use crate::tegument::{ledger_history, LedgerSample};

/// Largest servo step between two trace samples, degrees. Keeps every sample
/// step inside the unwrap contract of the twist ledger.
const MAX_SAMPLE_STEP: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    GimbalLockRisk,
    DisengagedShaftMotion,
    RangeViolation,
}

impl EventKind {
    /// Bit used in the trace export's `event_flags` column.
    pub fn flag(self) -> u8 {
        match self {
            EventKind::GimbalLockRisk => 1,
            EventKind::DisengagedShaftMotion => 2,
            EventKind::RangeViolation => 4,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            EventKind::GimbalLockRisk => "GimbalLockRisk",
            EventKind::DisengagedShaftMotion => "DisengagedShaftMotion",
            EventKind::RangeViolation => "RangeViolation",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub state: ServoState,
    /// Net wheel rotation, degrees, continuous.
    pub theta_wheel: f64,
    /// Rolled distance, meters.
    pub x: f64,
    pub engaged: bool,
    /// Union of [`EventKind::flag`] bits holding at this sample.
    pub flags: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub wheel_radius: f64,
    pub samples: Vec<TraceSample>,
    pub events: Vec<SimEvent>,
}

impl SimTrace {
    pub fn final_sample(&self) -> &TraceSample {
        self.samples.last().expect("a trace always holds at least one sample")
    }

    pub fn final_theta(&self) -> f64 {
        self.final_sample().theta_wheel
    }

    pub fn final_state(&self) -> ServoState {
        self.final_sample().state
    }

    /// Signed distance between the first and last sample, meters.
    pub fn distance(&self) -> f64 {
        self.final_sample().x - self.samples[0].x
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &SimEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Twist ledger replayed over every sample.
    pub fn ledger_history(&self) -> Vec<LedgerSample> {
        ledger_history(self.samples.iter().map(|s| (s.t, s.state)))
    }
}

/// Wheel drive factor of the segment `a → b`: the common drive sign when both
/// ends sit in the same driving configuration, 0 (wheel held) otherwise.
pub fn segment_drive_sign(a: &ServoState, b: &ServoState) -> i8 {
    let sa = drive_sign(a, ENGAGE_TOLERANCE);
    if sa == drive_sign(b, ENGAGE_TOLERANCE) {
        sa
    } else {
        0
    }
}

/// Simulates a trajectory that passes validation under the lenient policy.
///
/// Wheel increments are computed per segment as `drive_sign * Δs1`, so the
/// net rotation is exact; samples at `sample_rate` (plus every waypoint) only
/// carry the interpolated values for the trace. Servo 1 motion outside a
/// driving configuration and gimbal-lock exposure are recorded as events.
pub fn simulate(traj: &Trajectory, sample_rate: f64) -> Result<SimTrace, ExecError> {
    run(traj, sample_rate, true)
}

/// Like [`simulate`], but range and rate violations are tolerated and
/// out-of-range waypoints are recorded as [`EventKind::RangeViolation`]
/// events. Structural problems (no waypoints, bad time order, invalid
/// geometry or limits) still fail.
pub fn simulate_permissive(traj: &Trajectory, sample_rate: f64) -> Result<SimTrace, ExecError> {
    run(traj, sample_rate, false)
}

fn run(traj: &Trajectory, sample_rate: f64, strict: bool) -> Result<SimTrace, ExecError> {
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(ExecError::InvalidParameter(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    let violations: Vec<Violation> = validate_trajectory(traj, ValidationPolicy::Lenient)
        .into_iter()
        .filter(|v| strict || v.is_structural())
        .collect();
    if !violations.is_empty() {
        return Err(ExecError::ValidationFailure(violations));
    }

    let radius = traj.geometry.wheel_radius;
    let limits = &traj.limits;
    let mut samples = Vec::new();
    let mut events = Vec::new();
    let mut theta = 0.0_f64;

    let sample = |t: f64, state: ServoState, theta: f64, s1_rate: f64, shaft_slip: bool| {
        let mut flags = 0;
        if gimbal_lock_risk(&state, s1_rate, GIMBAL_TOLERANCE) {
            flags |= EventKind::GimbalLockRisk.flag();
        }
        if shaft_slip {
            flags |= EventKind::DisengagedShaftMotion.flag();
        }
        if !validate_state(&state, limits).is_empty() {
            flags |= EventKind::RangeViolation.flag();
        }
        TraceSample {
            t,
            state,
            theta_wheel: theta,
            x: radius * theta.to_radians(),
            engaged: engaged(&state, ENGAGE_TOLERANCE),
            flags,
        }
    };
    let range_events = |events: &mut Vec<SimEvent>, t: f64, state: &ServoState| {
        for v in validate_state(state, limits) {
            events.push(SimEvent {
                t,
                kind: EventKind::RangeViolation,
                detail: v.to_string(),
            });
        }
    };

    for (index, pair) in traj.waypoints.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.t - a.t;
        let delta_s1 = b.state.s1 - a.state.s1;
        let s1_rate = delta_s1 / dt;
        let sign = segment_drive_sign(&a.state, &b.state);
        let shaft_slip = delta_s1 != 0.0 && sign == 0;

        range_events(&mut events, a.t, &a.state);
        if shaft_slip {
            events.push(SimEvent {
                t: a.t,
                kind: EventKind::DisengagedShaftMotion,
                detail: format!("segment {index}: servo1 moves {delta_s1} deg while disengaged"),
            });
        }

        let max_step = a
            .state
            .as_array()
            .iter()
            .zip(b.state.as_array())
            .map(|(p, q)| (q - p).abs())
            .fold(0.0, f64::max);
        let steps = ((dt * sample_rate).ceil())
            .max((max_step / MAX_SAMPLE_STEP).ceil())
            .max(1.0) as usize;

        let mut gimbal_reported = false;
        for j in 0..steps {
            let frac = j as f64 / steps as f64;
            let t = if j == 0 { a.t } else { a.t + dt * frac };
            let state = a.state.lerp(&b.state, frac);
            let th = theta + f64::from(sign) * (state.s1 - a.state.s1);
            let s = sample(t, state, th, s1_rate, shaft_slip);
            if !gimbal_reported && s.flags & EventKind::GimbalLockRisk.flag() != 0 {
                gimbal_reported = true;
                events.push(SimEvent {
                    t,
                    kind: EventKind::GimbalLockRisk,
                    detail: format!("segment {index}: servo1 at {s1_rate} deg/s with servo2 = servo3 = 0"),
                });
            }
            samples.push(s);
        }
        theta += f64::from(sign) * delta_s1;
    }

    let last = traj.waypoints.last().expect("validated trajectories are non-empty");
    range_events(&mut events, last.t, &last.state);
    let (final_rate, final_slip) = match traj.waypoints.len() {
        0 | 1 => (0.0, false),
        n => {
            let (a, b) = (&traj.waypoints[n - 2], &traj.waypoints[n - 1]);
            let d = b.state.s1 - a.state.s1;
            (d / (b.t - a.t), d != 0.0 && segment_drive_sign(&a.state, &b.state) == 0)
        }
    };
    samples.push(sample(last.t, last.state, theta, final_rate, final_slip));

    Ok(SimTrace {
        wheel_radius: radius,
        samples,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::{build_rotate_wheel_2n, Waypoint};
    use crate::mechanism::{MechanismGeometry, ServoLimits};

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
    fn routine_turns_wheel_twice_per_iteration() {
        let mut t = build_rotate_wheel_2n(1, 1.0).unwrap();
        t.geometry.wheel_radius = 0.5;
        let trace = simulate(&t, 10.0).unwrap();
        assert_eq!(trace.final_theta(), 720.0);
        // two circumferences of a 0.5 m wheel
        assert!((trace.distance() - 2.0 * 2.0 * std::f64::consts::PI * 0.5).abs() < 1e-12);
        assert_eq!(trace.final_state(), ServoState::REST);
        assert!(trace.events.is_empty());
    }

    #[test]
    fn constant_trajectory_is_quiet() {
        let trace = simulate(&traj(&[(0.0, [0.0; 3]), (2.0, [0.0; 3])]), 10.0).unwrap();
        assert_eq!(trace.final_theta(), 0.0);
        assert!(trace.events.is_empty());
        assert_eq!(trace.samples.len(), 21);
    }

    #[test]
    fn single_waypoint_gives_single_sample() {
        let trace = simulate(&traj(&[(0.0, [10.0, 0.0, 0.0])]), 10.0).unwrap();
        assert_eq!(trace.samples.len(), 1);
        assert_eq!(trace.distance(), 0.0);
    }

    #[test]
    fn disengaged_shaft_motion_holds_wheel() {
        let trace = simulate(&traj(&[(0.0, [0.0; 3]), (1.0, [90.0, 0.0, 0.0])]), 10.0).unwrap();
        assert!(trace.samples.iter().all(|s| s.theta_wheel == 0.0));
        assert_eq!(trace.events_of(EventKind::DisengagedShaftMotion).count(), 1);
        assert_eq!(trace.events_of(EventKind::GimbalLockRisk).count(), 1);
        assert!(trace.samples.iter().all(|s| s.flags & 2 != 0));
    }

    #[test]
    fn negative_drive_configuration() {
        let trace = simulate(
            &traj(&[(0.0, [360.0, -90.0, 90.0]), (1.0, [0.0, -90.0, 90.0])]),
            10.0,
        )
        .unwrap();
        assert_eq!(trace.final_theta(), 360.0);
        let thetas: Vec<_> = trace.samples.iter().map(|s| s.theta_wheel).collect();
        assert!(thetas.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn wraparound_step_moves_the_long_way() {
        let trace = simulate(
            &traj(&[(0.0, [350.0, 90.0, -90.0]), (1.0, [10.0, 90.0, -90.0])]),
            10.0,
        )
        .unwrap();
        assert_eq!(trace.final_theta(), -340.0);
    }

    #[test]
    fn strict_simulation_rejects_range_errors() {
        let t = traj(&[(0.0, [0.0; 3]), (2.0, [400.0, 0.0, 0.0])]);
        assert!(matches!(simulate(&t, 10.0), Err(ExecError::ValidationFailure(_))));
        let trace = simulate_permissive(&t, 10.0).unwrap();
        assert_eq!(trace.events_of(EventKind::RangeViolation).count(), 1);
        assert_ne!(trace.final_sample().flags & 4, 0);
    }

    #[test]
    fn permissive_still_rejects_bad_time() {
        let t = traj(&[(0.0, [0.0; 3]), (0.0, [1.0, 0.0, 0.0])]);
        assert!(simulate_permissive(&t, 10.0).is_err());
        assert!(simulate(&traj(&[(0.0, [0.0; 3])]), 0.0).is_err());
    }

    #[test]
    fn sampling_never_steps_more_than_ninety_degrees() {
        let t = traj(&[(0.0, [0.0; 3]), (0.1, [300.0, 0.0, 0.0])]);
        let trace = simulate_permissive(&t, 1.0).unwrap();
        assert!(trace
            .samples
            .windows(2)
            .all(|w| (w[1].state.s1 - w[0].state.s1).abs() <= 90.0));
    }
}
