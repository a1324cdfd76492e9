//! Twist bookkeeping for the membrane that wraps body, shafts and wheel.
//!
//! The tegument is anchored to every skeletal link, so each joint's relative
//! rotation is exactly the twist absorbed by the membrane segment spanning
//! it. The wheel rim rotates rigidly with the hub and adds no twist term.
//! Each segment angle is tracked as a continuous lift; the membrane stays
//! intact as long as every lift stays inside the corresponding servo range.

use std::fmt;

use serde::Serialize;

use crate::mechanism::{Servo, ServoLimits, ServoState};
use crate::rotations::{wrap_degrees, UnwrappedAngle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Segment {
    /// Between body and gantry (Servo 2).
    BodyGantry,
    /// Along the center shaft (Servo 1).
    ShaftAxial,
    /// Across the wrist (Servo 3).
    Wrist,
}

impl Segment {
    pub const ALL: [Segment; 3] = [Segment::BodyGantry, Segment::ShaftAxial, Segment::Wrist];

    pub fn servo(self) -> Servo {
        match self {
            Segment::BodyGantry => Servo::Two,
            Segment::ShaftAxial => Servo::One,
            Segment::Wrist => Servo::Three,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Segment::BodyGantry => "body_gantry",
            Segment::ShaftAxial => "shaft_axial",
            Segment::Wrist => "wrist",
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Accumulated twist per tegument segment, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwistLedger {
    pub body_gantry: UnwrappedAngle,
    pub shaft_axial: UnwrappedAngle,
    pub wrist: UnwrappedAngle,
}

impl TwistLedger {
    /// Ledger of a membrane installed with the mechanism at `state`.
    pub fn at(state: &ServoState) -> TwistLedger {
        TwistLedger {
            body_gantry: UnwrappedAngle::new(state.s2),
            shaft_axial: UnwrappedAngle::new(state.s1),
            wrist: UnwrappedAngle::new(state.s3),
        }
    }

    pub fn get(&self, segment: Segment) -> f64 {
        match segment {
            Segment::BodyGantry => self.body_gantry.degrees(),
            Segment::ShaftAxial => self.shaft_axial.degrees(),
            Segment::Wrist => self.wrist.degrees(),
        }
    }

    /// Advances every segment to `state`.
    ///
    /// Each servo must have moved by less than 180° since the previous update;
    /// larger steps are lifted onto the wrong branch. For in-range states
    /// reached in such steps the lift equals the raw joint angle exactly.
    pub fn update(&self, state: &ServoState) -> TwistLedger {
        TwistLedger {
            body_gantry: self.body_gantry.unwrap_next(wrap_degrees(state.s2)),
            shaft_axial: self.shaft_axial.unwrap_next(wrap_degrees(state.s1)),
            wrist: self.wrist.unwrap_next(wrap_degrees(state.s3)),
        }
    }

    pub fn is_zero(&self) -> bool {
        Segment::ALL.iter().all(|s| self.get(*s) == 0.0)
    }
}

/// A ledger value stamped with its sample time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerSample {
    pub t: f64,
    pub ledger: TwistLedger,
}

/// Replays a sequence of timed states. The first state seeds the ledger with
/// its joint angles as they stand; later states are lifted continuously.
pub fn ledger_history<I>(states: I) -> Vec<LedgerSample>
where
    I: IntoIterator<Item = (f64, ServoState)>,
{
    let mut ledger: Option<TwistLedger> = None;
    states
        .into_iter()
        .map(|(t, state)| {
            let next = match ledger {
                Some(l) => l.update(&state),
                None => TwistLedger::at(&state),
            };
            ledger = Some(next);
            LedgerSample { t, ledger: next }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwistViolation {
    pub t: f64,
    pub segment: Segment,
    pub value: f64,
}

impl fmt::Display for TwistViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TwistViolation {} t={} twist={}",
            self.segment, self.t, self.value
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SegmentMaxima {
    pub body_gantry: f64,
    pub shaft_axial: f64,
    pub wrist: f64,
}

impl SegmentMaxima {
    pub fn get(&self, segment: Segment) -> f64 {
        match segment {
            Segment::BodyGantry => self.body_gantry,
            Segment::ShaftAxial => self.shaft_axial,
            Segment::Wrist => self.wrist,
        }
    }

    fn raise(&mut self, segment: Segment, value: f64) {
        let slot = match segment {
            Segment::BodyGantry => &mut self.body_gantry,
            Segment::ShaftAxial => &mut self.shaft_axial,
            Segment::Wrist => &mut self.wrist,
        };
        *slot = slot.max(value);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrityReport {
    pub max_abs_twist: SegmentMaxima,
    pub violations: Vec<TwistViolation>,
    pub ok: bool,
}

/// Flags every sample whose lifted twist leaves its segment's servo range.
pub fn check_integrity(history: &[LedgerSample], limits: &ServoLimits) -> IntegrityReport {
    let mut max_abs_twist = SegmentMaxima::default();
    let mut violations = Vec::new();
    for sample in history {
        for segment in Segment::ALL {
            let value = sample.ledger.get(segment);
            max_abs_twist.raise(segment, value.abs());
            if !limits.get(segment.servo()).contains(value) {
                violations.push(TwistViolation {
                    t: sample.t,
                    segment,
                    value,
                });
            }
        }
    }
    IntegrityReport {
        max_abs_twist,
        ok: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense linear path through the given states, 10 steps per leg.
    fn path(states: &[ServoState]) -> Vec<(f64, ServoState)> {
        let mut out = vec![(0.0, states[0])];
        for (i, pair) in states.windows(2).enumerate() {
            for k in 1..=10 {
                let t = i as f64 + k as f64 / 10.0;
                out.push((t, pair[0].lerp(&pair[1], k as f64 / 10.0)));
            }
        }
        out
    }

    fn routine_states(n: usize) -> Vec<ServoState> {
        let mut s = vec![ServoState::REST, ServoState::new(0.0, 0.0, -90.0), ServoState::new(0.0, 90.0, -90.0)];
        for _ in 0..n {
            s.extend([
                ServoState::new(360.0, 90.0, -90.0),
                ServoState::new(360.0, 90.0, 90.0),
                ServoState::new(360.0, -90.0, 90.0),
                ServoState::new(0.0, -90.0, 90.0),
                ServoState::new(0.0, -90.0, -90.0),
                ServoState::new(0.0, 90.0, -90.0),
            ]);
        }
        s.extend([ServoState::new(0.0, 90.0, 0.0), ServoState::REST]);
        s
    }

    #[test]
    fn rest_state_keeps_ledger_at_zero() {
        let l = TwistLedger::default().update(&ServoState::REST);
        assert!(l.is_zero());
    }

    #[test]
    fn extreme_legal_configuration() {
        let hist = ledger_history(path(&[ServoState::REST, ServoState::new(360.0, 90.0, -90.0)]));
        let last = hist.last().unwrap().ledger;
        assert_eq!(last.get(Segment::ShaftAxial), 360.0);
        assert_eq!(last.get(Segment::BodyGantry), 90.0);
        assert_eq!(last.get(Segment::Wrist), -90.0);
    }

    #[test]
    fn routine_returns_ledger_to_zero() {
        let hist = ledger_history(path(&routine_states(1)));
        assert!(hist.last().unwrap().ledger.is_zero());
    }

    #[test]
    fn routine_history_is_intact() {
        let hist = ledger_history(path(&routine_states(5)));
        let report = check_integrity(&hist, &ServoLimits::default());
        assert!(report.ok);
        assert_eq!(report.max_abs_twist.shaft_axial, 360.0);
        assert_eq!(report.max_abs_twist.body_gantry, 90.0);
        assert_eq!(report.max_abs_twist.wrist, 90.0);
    }

    #[test]
    fn over_twisted_shaft_is_flagged() {
        let hist = ledger_history(path(&[ServoState::REST, ServoState::new(450.0, 0.0, 0.0)]));
        let report = check_integrity(&hist, &ServoLimits::default());
        assert!(!report.ok);
        let last = report.violations.last().unwrap();
        assert_eq!(last.segment, Segment::ShaftAxial);
        assert_eq!(last.value, 450.0);
        assert_eq!(last.t, 1.0);
        assert!(report.violations.iter().all(|v| v.value > 360.0));
    }

    #[test]
    fn history_seeds_from_first_state() {
        let start = ServoState::new(300.0, 90.0, -90.0);
        let hist = ledger_history(path(&[start, ServoState::new(120.0, 90.0, -90.0)]));
        assert_eq!(hist[0].ledger.get(Segment::ShaftAxial), 300.0);
        assert_eq!(hist.last().unwrap().ledger.get(Segment::ShaftAxial), 120.0);
        assert!(check_integrity(&hist, &ServoLimits::default()).ok);
    }

    #[test]
    fn empty_history_is_vacuously_ok() {
        let report = check_integrity(&[], &ServoLimits::default());
        assert!(report.ok);
        assert_eq!(report.max_abs_twist, SegmentMaxima::default());
    }
}
