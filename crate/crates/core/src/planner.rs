//! Trajectory synthesis: signed wheel rotations, rolled distances, and
//! periodic gaits that turn bounded servo oscillations into unbounded wheel
//! rotation.
//!
//! Rotations are planned greedily. Each sweep engages whichever driving
//! configuration offers the longer Servo 1 travel in the needed wheel
//! direction, sweeps as far as the target or the Servo 1 range allows, and
//! the loop repeats after reconfiguring. Servos 2 and 3 are moved one at a
//! time (Servo 3 first), and Servo 1 never moves outside a driving
//! configuration, so plans pass strict validation.

use thiserror::Error;

use crate::executor::{Trajectory, Waypoint, DEFAULT_SEGMENT_DURATION};
use crate::mechanism::{
    engaged, validate_state, MechanismError, MechanismGeometry, RangeViolation, Servo,
    ServoLimits, ServoState, ENGAGE_TOLERANCE,
};

/// Residual rotation below which a plan counts as complete, degrees.
pub const PLAN_TOLERANCE: f64 = 1e-10;

/// Servo 2/3 swing between the two driving configurations, degrees.
const SWAP_ANGLE: f64 = 180.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("start state out of range: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidStart(Vec<RangeViolation>),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error("servo limits exclude the driving configurations (servo2/servo3 must reach ±90)")]
    NoDrivingConfiguration,
    #[error("RateInfeasible: period {period} s is below the minimum {min_period} s")]
    RateInfeasible { period: f64, min_period: f64 },
}

/// The two configurations in which Servo 1 drives the wheel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveConfig {
    /// `(s2, s3) = (+90, -90)`: increasing Servo 1 rolls forward.
    Forward,
    /// `(s2, s3) = (-90, +90)`: increasing Servo 1 rolls backward.
    Reverse,
}

impl DriveConfig {
    pub fn s2(self) -> f64 {
        match self {
            DriveConfig::Forward => 90.0,
            DriveConfig::Reverse => -90.0,
        }
    }

    pub fn s3(self) -> f64 {
        -self.s2()
    }

    pub fn drive_sign(self) -> f64 {
        match self {
            DriveConfig::Forward => 1.0,
            DriveConfig::Reverse => -1.0,
        }
    }

    fn holds(self, state: &ServoState) -> bool {
        engaged(state, ENGAGE_TOLERANCE) && (state.s2 > 0.0) == (self == DriveConfig::Forward)
    }
}

struct PlanBuilder {
    traj: Trajectory,
    segment_duration: f64,
}

impl PlanBuilder {
    fn new(geometry: MechanismGeometry, limits: ServoLimits, start: ServoState, segment_duration: f64) -> Self {
        Self {
            traj: Trajectory::new(geometry, limits, vec![Waypoint::new(0.0, start)]),
            segment_duration,
        }
    }

    fn current(&self) -> ServoState {
        self.traj.waypoints.last().expect("builder starts with a waypoint").state
    }

    /// One segment moving a single servo; stretched when the nominal
    /// duration would break its rate limit.
    fn move_servo(&mut self, servo: Servo, angle: f64) {
        let delta = (angle - self.current().get(servo)).abs();
        if delta == 0.0 {
            return;
        }
        let dt = self
            .segment_duration
            .max(delta / self.traj.limits.get(servo).max_rate);
        self.traj.push_move(dt, servo, angle);
    }

    fn engage(&mut self, config: DriveConfig) {
        if config.holds(&self.current()) {
            return;
        }
        self.move_servo(Servo::Three, config.s3());
        self.move_servo(Servo::Two, config.s2());
    }
}

fn check_driving_reachable(limits: &ServoLimits) -> Result<(), PlanError> {
    let reach = |servo| {
        let l = limits.get(servo);
        l.contains(90.0) && l.contains(-90.0)
    };
    if reach(Servo::Two) && reach(Servo::Three) {
        Ok(())
    } else {
        Err(PlanError::NoDrivingConfiguration)
    }
}

fn plan_on(
    geometry: MechanismGeometry,
    target: f64,
    start: ServoState,
    limits: &ServoLimits,
    segment_duration: f64,
) -> Result<Trajectory, PlanError> {
    if !target.is_finite() {
        return Err(PlanError::InvalidParameter(format!("target must be finite, got {target}")));
    }
    if !(segment_duration > 0.0 && segment_duration.is_finite()) {
        return Err(PlanError::InvalidParameter(format!(
            "segment duration must be positive, got {segment_duration}"
        )));
    }
    limits.check()?;
    geometry.check()?;
    let violations = validate_state(&start, limits);
    if !violations.is_empty() {
        return Err(PlanError::InvalidStart(violations));
    }

    let mut plan = PlanBuilder::new(geometry, *limits, start, segment_duration);
    if target.abs() <= PLAN_TOLERANCE {
        return Ok(plan.traj);
    }
    check_driving_reachable(limits)?;

    let (s1_min, s1_max) = (limits.servo1.min, limits.servo1.max);
    let mut remaining = target;
    while remaining.abs() > PLAN_TOLERANCE {
        let here = plan.current();
        // For each configuration: the Servo 1 direction that rolls the
        // wheel toward the target and the travel left in that direction.
        let option = |config: DriveConfig| {
            let s1_dir = remaining.signum() * config.drive_sign();
            let travel = if s1_dir > 0.0 { s1_max - here.s1 } else { here.s1 - s1_min };
            (config, s1_dir, travel)
        };
        let (fwd, rev) = (option(DriveConfig::Forward), option(DriveConfig::Reverse));
        let (config, s1_dir, travel) = if rev.2 > fwd.2 || (rev.2 == fwd.2 && DriveConfig::Reverse.holds(&here)) {
            rev
        } else {
            fwd
        };

        let sweep = remaining.abs().min(travel);
        let s1_target = match (sweep == travel, s1_dir > 0.0) {
            (true, true) => s1_max,
            (true, false) => s1_min,
            (false, true) => here.s1 + sweep,
            (false, false) => here.s1 - sweep,
        };
        plan.engage(config);
        plan.move_servo(Servo::One, s1_target);
        remaining -= config.drive_sign() * (s1_target - here.s1);
    }

    let rest = |servo: Servo| {
        let l = limits.get(servo);
        0.0_f64.clamp(l.min, l.max)
    };
    plan.move_servo(Servo::Three, rest(Servo::Three));
    plan.move_servo(Servo::Two, rest(Servo::Two));
    Ok(plan.traj)
}

/// Plans a net wheel rotation of `target` degrees (positive rolls forward).
///
/// Servos 2 and 3 are brought back to rest at the end; Servo 1 stays where
/// the last sweep left it, since moving it while disengaged is not allowed.
/// A zero target yields the start waypoint alone.
pub fn plan_rotation(
    target: f64,
    start: ServoState,
    limits: &ServoLimits,
    segment_duration: f64,
) -> Result<Trajectory, PlanError> {
    plan_on(MechanismGeometry::default(), target, start, limits, segment_duration)
}

/// Plans a rolled distance in meters through the no-slip relation
/// `Δθ = distance / radius`.
pub fn plan_distance(
    distance: f64,
    geometry: &MechanismGeometry,
    start: ServoState,
    limits: &ServoLimits,
) -> Result<Trajectory, PlanError> {
    geometry.check()?;
    if !distance.is_finite() {
        return Err(PlanError::InvalidParameter(format!("distance must be finite, got {distance}")));
    }
    let target = (distance / geometry.wheel_radius).to_degrees();
    plan_on(*geometry, target, start, limits, DEFAULT_SEGMENT_DURATION)
}

/// Number of times a plan enters a driving configuration from outside it.
pub fn reconfiguration_count(traj: &Trajectory) -> usize {
    traj.waypoints
        .windows(2)
        .filter(|w| {
            engaged(&w[1].state, ENGAGE_TOLERANCE) && !engaged(&w[0].state, ENGAGE_TOLERANCE)
        })
        .count()
}

/// Shortest gait period the limits allow, seconds.
pub fn min_gait_period(limits: &ServoLimits) -> f64 {
    let (sweep, dwell) = gait_phase_minima(limits);
    2.0 * (sweep + dwell.0 + dwell.1)
}

fn gait_phase_minima(limits: &ServoLimits) -> (f64, (f64, f64)) {
    let span = limits.servo1.max - limits.servo1.min;
    (
        span / limits.servo1.max_rate,
        (SWAP_ANGLE / limits.servo3.max_rate, SWAP_ANGLE / limits.servo2.max_rate),
    )
}

/// A periodic rectifying gait.
///
/// Every half period Servo 1 sweeps across its whole range at constant
/// speed, then dwells while Servos 3 and 2 swap the driving configuration.
/// Starting from `(s1_min, +90, -90)`, the wheel advances by twice the Servo 1
/// span per period (720° with default limits) and all servos are back at
/// their start values at every multiple of `period`. Slack beyond the rate
/// limits is spread proportionally over the sweep and the dwell moves.
pub fn generate_gait(period: f64, cycles: usize, limits: &ServoLimits) -> Result<Trajectory, PlanError> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(PlanError::InvalidParameter(format!("period must be positive, got {period}")));
    }
    if cycles < 1 {
        return Err(PlanError::InvalidParameter("cycles must be at least 1".into()));
    }
    limits.check()?;
    check_driving_reachable(limits)?;

    let min_period = min_gait_period(limits);
    if period < min_period {
        return Err(PlanError::RateInfeasible { period, min_period });
    }
    let (sweep_min, (swap3_min, _)) = gait_phase_minima(limits);
    let half = period / 2.0;
    let stretch = period / min_period;
    let sweep = sweep_min * stretch;
    let swap3 = swap3_min * stretch;

    let (lo, hi) = (limits.servo1.min, limits.servo1.max);
    let (fwd, rev) = (DriveConfig::Forward, DriveConfig::Reverse);
    let phases = [
        (0.0, ServoState::new(lo, fwd.s2(), fwd.s3())),
        (sweep, ServoState::new(hi, fwd.s2(), fwd.s3())),
        (sweep + swap3, ServoState::new(hi, fwd.s2(), rev.s3())),
        (half, ServoState::new(hi, rev.s2(), rev.s3())),
        (half + sweep, ServoState::new(lo, rev.s2(), rev.s3())),
        (half + sweep + swap3, ServoState::new(lo, rev.s2(), fwd.s3())),
    ];
    let mut waypoints = Vec::with_capacity(cycles * phases.len() + 1);
    for k in 0..cycles {
        let base = k as f64 * period;
        waypoints.extend(phases.iter().map(|(offset, state)| Waypoint::new(base + offset, *state)));
    }
    waypoints.push(Waypoint::new(cycles as f64 * period, phases[0].1));
    Ok(Trajectory::new(MechanismGeometry::default(), *limits, waypoints))
}
