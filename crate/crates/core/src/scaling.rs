//! Size scaling of the wheel and a quasi-static cost-of-transport proxy.
//!
//! For a wheel of characteristic size `L`, mass grows like `L³` while
//! actuator force grows with cross section, `L²`, so the attainable
//! acceleration goes like `1/L`.

use serde::Serialize;
use thiserror::Error;

use crate::executor::SimTrace;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalingError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cost of transport is undefined for zero travelled distance")]
    ZeroDistance,
}

/// Reference point of the power laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingModel {
    /// Reference size, meters.
    pub length_ref: f64,
    /// Mass at the reference size, kg.
    pub mass_ref: f64,
    /// Actuator force at the reference size, N.
    pub force_ref: f64,
}

impl Default for ScalingModel {
    fn default() -> Self {
        Self {
            length_ref: 0.1,
            mass_ref: 1.0,
            force_ref: 10.0,
        }
    }
}

impl ScalingModel {
    pub fn new(length_ref: f64, mass_ref: f64, force_ref: f64) -> Result<Self, ScalingError> {
        for (name, v) in [("length_ref", length_ref), ("mass_ref", mass_ref), ("force_ref", force_ref)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ScalingError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            length_ref,
            mass_ref,
            force_ref,
        })
    }

    pub fn scale(&self, length: f64) -> Result<Scaled, ScalingError> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(ScalingError::InvalidParameter(format!(
                "length must be positive, got {length}"
            )));
        }
        let k = length / self.length_ref;
        let mass = self.mass_ref * k * k * k;
        let force = self.force_ref * k * k;
        Ok(Scaled {
            length,
            mass,
            force,
            accel: force / mass,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scaled {
    /// m
    pub length: f64,
    /// kg
    pub mass: f64,
    /// N
    pub force: f64,
    /// m/s²
    pub accel: f64,
}

/// `E / (m g |Δx|)` with `E = Σ |τᵢ Δθᵢ|` summed over consecutive trace
/// samples and all three servos (angles in radians).
///
/// Torques are constant per servo and no energy is recovered, which makes the
/// value a quasi-static proxy that depends on the joint path only, not on its
/// timing.
pub fn cost_of_transport(
    trace: &SimTrace,
    torques: [f64; 3],
    mass: f64,
    gravity: f64,
) -> Result<f64, ScalingError> {
    if torques.iter().any(|t| !t.is_finite()) {
        return Err(ScalingError::InvalidParameter("torques must be finite".into()));
    }
    if !(mass > 0.0 && mass.is_finite()) || !(gravity > 0.0 && gravity.is_finite()) {
        return Err(ScalingError::InvalidParameter(format!(
            "mass and gravity must be positive, got {mass} and {gravity}"
        )));
    }
    let distance = trace.distance().abs();
    if distance == 0.0 {
        return Err(ScalingError::ZeroDistance);
    }
    let energy: f64 = trace
        .samples
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].state.as_array(), w[1].state.as_array());
            (0..3)
                .map(|i| (torques[i] * (b[i] - a[i]).to_radians()).abs())
                .sum::<f64>()
        })
        .sum();
    Ok(energy / (mass * gravity * distance))
}
