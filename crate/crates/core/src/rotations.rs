//! Rotation algebra: unit quaternions, rotation matrices and continuous
//! angle lifting.
//!
//! Angles cross this API in degrees. Multiples of 90° are evaluated with
//! exact sines and cosines, so configurations such as ±90° or 360° produce
//! exact matrix entries and bit-reproducible results.
//!
//! Quaternion signs are never canonicalized: `q` and `-q` describe the same
//! rotation but are different elements of the double cover, and a 360° turn
//! about any axis yields `(-1, 0, 0, 0)` rather than the identity.

use std::fmt;
use std::ops::Mul;

use thiserror::Error;

pub type Vec3 = [f64; 3];

/// Allowed deviation of an axis from unit length.
pub const AXIS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RotationError {
    #[error("rotation axis must have unit length (|axis| = {norm})")]
    InvalidAxis { norm: f64 },
    #[error("quaternion components have zero or non-finite norm")]
    DegenerateQuaternion,
    #[error("rotation angle must be finite, got {0}")]
    NonFiniteAngle(f64),
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90°.
pub fn sin_cos_deg(angle: f64) -> (f64, f64) {
    // fmod is exact, so the reduced angle carries no rounding error.
    let reduced = angle % 360.0;
    if reduced == 0.0 {
        (0.0, 1.0)
    } else if reduced == 90.0 || reduced == -270.0 {
        (1.0, 0.0)
    } else if reduced == 180.0 || reduced == -180.0 {
        (0.0, -1.0)
    } else if reduced == 270.0 || reduced == -90.0 {
        (-1.0, 0.0)
    } else {
        reduced.to_radians().sin_cos()
    }
}

/// Wraps an angle in degrees into `[-180, 180)` without rounding error.
pub fn wrap_degrees(angle: f64) -> f64 {
    let r = angle % 360.0;
    if r >= 180.0 {
        r - 360.0
    } else if r < -180.0 {
        r + 360.0
    } else {
        r
    }
}

/// A rotation stored as a unit quaternion `w + xi + yj + zk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a quaternion from raw components, normalizing them.
    pub fn from_components(w: f64, x: f64, y: f64, z: f64) -> Result<Self, RotationError> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(RotationError::DegenerateQuaternion);
        }
        Ok(Self { w, x, y, z }.scaled(1.0 / norm))
    }

    /// Rotation by `angle` degrees about `axis` (right-hand rule).
    ///
    /// Returns `(cos(angle/2), sin(angle/2) * axis)`, so a full turn maps to
    /// the negated identity.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self, RotationError> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if norm.is_nan() || (norm - 1.0).abs() > AXIS_TOLERANCE {
            return Err(RotationError::InvalidAxis { norm });
        }
        if !angle.is_finite() {
            return Err(RotationError::NonFiniteAngle(angle));
        }
        let (s, c) = sin_cos_deg(angle / 2.0);
        let q = Self {
            w: c,
            x: s * axis[0],
            y: s * axis[1],
            z: s * axis[2],
        };
        Ok(q.renormalized())
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// Components in `[w, x, y, z]` order.
    pub fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn conjugate(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// The other preimage of the same rotation in the double cover.
    pub fn negated(&self) -> Self {
        Self {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Hamilton product `self * other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        let (a, b) = (self, other);
        Self {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        }
        .renormalized()
    }

    pub fn to_matrix(&self) -> RotationMatrix {
        let Self { w, x, y, z } = *self;
        // Every entry is a sum of pairwise products, so q and -q give
        // bit-identical matrices.
        let (xx, yy, zz) = (x * x, y * y, z * z);
        let (xy, xz, yz) = (x * y, x * z, y * z);
        let (wx, wy, wz) = (w * x, w * y, w * z);
        RotationMatrix([
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ])
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        self.to_matrix().apply(v)
    }

    fn scaled(self, k: f64) -> Self {
        Self {
            w: self.w * k,
            x: self.x * k,
            y: self.y * k,
            z: self.z * k,
        }
    }

    fn renormalized(self) -> Self {
        let norm = self.norm();
        if norm == 1.0 {
            self
        } else {
            self.scaled(1.0 / norm)
        }
    }
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, rhs: Self) -> Self::Output {
        self.compose(&rhs)
    }
}

impl fmt::Display for UnitQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.w, self.x, self.y, self.z)
    }
}

/// Row-major 3×3 rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(pub [[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix =
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[j][i];
            }
        }
        RotationMatrix(t)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entry of `|MᵀM - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.transpose() * *self;
        gram.0
            .iter()
            .flatten()
            .zip(Self::IDENTITY.0.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Orthonormal with determinant +1, both within `tol`.
    pub fn is_rotation(&self, tol: f64) -> bool {
        self.orthonormality_error() <= tol && (self.determinant() - 1.0).abs() <= tol
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: Self) -> Self::Output {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        RotationMatrix(out)
    }
}

/// A continuously lifted angle in degrees with no modular jumps.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct UnwrappedAngle(f64);

impl UnwrappedAngle {
    pub fn new(degrees: f64) -> Self {
        Self(degrees)
    }

    pub fn degrees(&self) -> f64 {
        self.0
    }

    /// Lifts `wrapped` (in `[-180, 180)`) to the representative nearest to
    /// `self`.
    ///
    /// The caller guarantees that the true rotation since the previous sample
    /// is smaller than 180° in magnitude; otherwise the lift picks the wrong
    /// branch and no error is reported.
    pub fn unwrap_next(self, wrapped: f64) -> Self {
        let turns = ((self.0 - wrapped) / 360.0).round();
        Self(wrapped + 360.0 * turns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: Vec3 = [1.0, 0.0, 0.0];
    const Z: Vec3 = [0.0, 0.0, 1.0];

    #[test]
    fn zero_angle_is_identity() {
        let q = UnitQuaternion::from_axis_angle(Z, 0.0).unwrap();
        assert_eq!(q.components(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn full_turn_is_negated_identity() {
        let q = UnitQuaternion::from_axis_angle(Z, 360.0).unwrap();
        assert_eq!(q.components(), [-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(q.to_matrix(), RotationMatrix::IDENTITY);
    }

    #[test]
    fn half_turn_about_x() {
        let q = UnitQuaternion::from_axis_angle(X, 180.0).unwrap();
        assert_eq!(q.components(), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_non_unit_axis() {
        let err = UnitQuaternion::from_axis_angle([1.0, 1.0, 0.0], 30.0).unwrap_err();
        assert!(matches!(err, RotationError::InvalidAxis { .. }));
        assert!(UnitQuaternion::from_axis_angle([0.0; 3], 30.0).is_err());
        assert!(UnitQuaternion::from_axis_angle(X, f64::NAN).is_err());
    }

    #[test]
    fn compose_identity_and_inverse() {
        let q = UnitQuaternion::from_axis_angle([0.6, 0.0, 0.8], 73.0).unwrap();
        let p = UnitQuaternion::IDENTITY * q;
        for (a, b) in p.components().iter().zip(q.components()) {
            assert!((a - b).abs() < 1e-15);
        }
        let r = q * q.conjugate();
        for (a, b) in r.components().iter().zip([1.0, 0.0, 0.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_half_turns_about_x() {
        // (0,1,0,0)·(0,1,0,0) = (0·0 − 1·1, 0, 0, 0)
        let half = UnitQuaternion::from_axis_angle(X, 180.0).unwrap();
        let full = half * half;
        assert_eq!(full.components(), [-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(full.to_matrix(), RotationMatrix::IDENTITY);
    }

    #[test]
    fn matrix_of_half_turn_about_z() {
        let q = UnitQuaternion::from_components(0.0, 0.0, 0.0, 1.0).unwrap();
        let expected = RotationMatrix([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_eq!(q.to_matrix(), expected);
    }

    #[test]
    fn sign_flip_gives_same_matrix() {
        let q = UnitQuaternion::from_axis_angle([0.0, 0.6, 0.8], 47.3).unwrap();
        let a = q.to_matrix();
        let b = q.negated().to_matrix();
        assert!(a.frobenius_distance(&b) <= 1e-15);
        assert_eq!(a, b);
    }

    #[test]
    fn exact_quadrant_trig() {
        assert_eq!(sin_cos_deg(90.0), (1.0, 0.0));
        assert_eq!(sin_cos_deg(-90.0), (-1.0, 0.0));
        assert_eq!(sin_cos_deg(180.0), (0.0, -1.0));
        assert_eq!(sin_cos_deg(-540.0), (0.0, -1.0));
        assert_eq!(sin_cos_deg(720.0), (0.0, 1.0));
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_degrees(180.0), -180.0);
        assert_eq!(wrap_degrees(-180.0), -180.0);
        assert_eq!(wrap_degrees(355.0), -5.0);
        assert_eq!(wrap_degrees(-190.0), 170.0);
        assert_eq!(wrap_degrees(720.0), 0.0);
    }

    #[test]
    fn unwrap_examples() {
        assert_eq!(UnwrappedAngle::new(350.0).unwrap_next(-5.0).degrees(), 355.0);
        assert_eq!(UnwrappedAngle::new(0.0).unwrap_next(0.0).degrees(), 0.0);
        assert_eq!(UnwrappedAngle::new(719.0).unwrap_next(0.0).degrees(), 720.0);
        assert_eq!(UnwrappedAngle::new(-170.0).unwrap_next(175.0).degrees(), -185.0);
    }

    #[test]
    fn unwrap_recovers_raw_angle_exactly() {
        let mut lift = UnwrappedAngle::default();
        let mut raw = 0.0_f64;
        for _ in 0..1000 {
            raw += 7.3;
            lift = lift.unwrap_next(wrap_degrees(raw));
            assert_eq!(lift.degrees(), raw);
        }
    }
}
