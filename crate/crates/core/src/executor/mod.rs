//! Trajectories, their validation and their simulation through the clutch
//! model.
//!
//! A trajectory is a list of timed servo waypoints joined by straight lines
//! in joint space. While both ends of a segment sit in the same driving
//! configuration the wheel turns by `drive_sign * Δs1`; otherwise it is held.

mod format;
mod simulate;
mod validate;

use thiserror::Error;

use crate::mechanism::{MechanismGeometry, Servo, ServoLimits, ServoState};

pub use format::{
    format_sig9, parse_trajectory, read_trajectory, trace_to_csv, trajectory_to_json, write_trace_csv,
    write_trajectory, FileError, FORMAT_VERSION, TRACE_HEADER,
};
pub use simulate::{
    segment_drive_sign, simulate, simulate_permissive, EventKind, SimEvent, SimTrace, TraceSample,
};
pub use validate::{validate_trajectory, ValidationPolicy, Violation, RATE_TOLERANCE};

/// Default duration of one motion segment, seconds.
pub const DEFAULT_SEGMENT_DURATION: f64 = 1.0;
/// Default trace sampling rate, Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("trajectory failed validation: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    ValidationFailure(Vec<Violation>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    /// Seconds.
    pub t: f64,
    pub state: ServoState,
}

impl Waypoint {
    pub const fn new(t: f64, state: ServoState) -> Self {
        Self { t, state }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub geometry: MechanismGeometry,
    pub limits: ServoLimits,
    pub waypoints: Vec<Waypoint>,
}

impl Trajectory {
    pub fn new(geometry: MechanismGeometry, limits: ServoLimits, waypoints: Vec<Waypoint>) -> Self {
        Self {
            geometry,
            limits,
            waypoints,
        }
    }

    /// Number of motion segments (consecutive waypoint pairs).
    pub fn segment_count(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    pub fn duration(&self) -> f64 {
        match (self.waypoints.first(), self.waypoints.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn final_state(&self) -> Option<ServoState> {
        self.waypoints.last().map(|w| w.state)
    }

    /// Appends a waypoint `dt` seconds after the last one with one servo moved.
    pub(crate) fn push_move(&mut self, dt: f64, servo: Servo, angle: f64) {
        let last = *self.waypoints.last().expect("trajectory has a start waypoint");
        self.waypoints
            .push(Waypoint::new(last.t + dt, last.state.with(servo, angle)));
    }
}

/// The continuous-rotation routine: `2n` forward wheel turns starting and
/// ending at the rest configuration.
///
/// Each servo command becomes one segment of `segment_duration` seconds, in
/// order: Servo 3 to -90, Servo 2 to +90, then `n` times (Servo 1 to 360,
/// Servo 3 to +90, Servo 2 to -90, Servo 1 to 0, Servo 3 to -90, Servo 2 to
/// +90), then Servo 3 to 0 and Servo 2 to 0.
pub fn build_rotate_wheel_2n(n: usize, segment_duration: f64) -> Result<Trajectory, ExecError> {
    if n < 1 {
        return Err(ExecError::InvalidParameter(format!("n must be at least 1, got {n}")));
    }
    if !(segment_duration > 0.0 && segment_duration.is_finite()) {
        return Err(ExecError::InvalidParameter(format!(
            "segment duration must be positive, got {segment_duration}"
        )));
    }
    let mut traj = Trajectory::new(
        MechanismGeometry::default(),
        ServoLimits::default(),
        vec![Waypoint::new(0.0, ServoState::REST)],
    );
    let dt = segment_duration;
    traj.push_move(dt, Servo::Three, -90.0);
    traj.push_move(dt, Servo::Two, 90.0);
    for _ in 0..n {
        traj.push_move(dt, Servo::One, 360.0);
        traj.push_move(dt, Servo::Three, 90.0);
        traj.push_move(dt, Servo::Two, -90.0);
        traj.push_move(dt, Servo::One, 0.0);
        traj.push_move(dt, Servo::Three, -90.0);
        traj.push_move(dt, Servo::Two, 90.0);
    }
    traj.push_move(dt, Servo::Three, 0.0);
    traj.push_move(dt, Servo::Two, 0.0);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_iteration_has_ten_segments_and_ends_at_rest() {
        let traj = build_rotate_wheel_2n(1, 1.0).unwrap();
        assert_eq!(traj.segment_count(), 10);
        assert_eq!(traj.final_state(), Some(ServoState::REST));
        assert_eq!(traj.duration(), 10.0);
    }

    #[test]
    fn command_sequence_follows_routine() {
        let traj = build_rotate_wheel_2n(1, 0.5).unwrap();
        let states: Vec<_> = traj.waypoints.iter().map(|w| w.state.as_array()).collect();
        let expected = [
            [0.0, 0.0, 0.0],
            [0.0, 0.0, -90.0],
            [0.0, 90.0, -90.0],
            [360.0, 90.0, -90.0],
            [360.0, 90.0, 90.0],
            [360.0, -90.0, 90.0],
            [0.0, -90.0, 90.0],
            [0.0, -90.0, -90.0],
            [0.0, 90.0, -90.0],
            [0.0, 90.0, 0.0],
            [0.0, 0.0, 0.0],
        ];
        assert_eq!(states, expected);
        assert_eq!(traj.waypoints[4].t, 2.0);
    }

    #[test]
    fn segment_count_grows_by_six_per_iteration() {
        for n in 1..=5 {
            let traj = build_rotate_wheel_2n(n, 1.0).unwrap();
            assert_eq!(traj.segment_count(), 4 + 6 * n);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(build_rotate_wheel_2n(0, 1.0), Err(ExecError::InvalidParameter(_))));
        assert!(build_rotate_wheel_2n(1, 0.0).is_err());
        assert!(build_rotate_wheel_2n(1, f64::INFINITY).is_err());
    }
}
