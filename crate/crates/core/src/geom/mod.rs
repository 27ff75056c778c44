//! Rotation-representation algebra.
//!
//! Conversions among Euler angles, rotation matrices, unit quaternions and
//! axis-angle vectors, plus the minimal rotation taking one unit vector onto
//! another. All operations are pure functions of immutable inputs.

mod rotation;
mod vector;

pub use rotation::{
    rotation_between_vectors, AxisAngle, EulerAngles, EulerConvention, RotationMatrix,
    UnitQuaternion,
};
pub use vector::Vector3;

use thiserror::Error;

/// Dot-product margin below which two unit vectors are treated as antipodal
/// and the minimal rotation between them is undefined.
pub const EPS_ANTIPODAL: f64 = 1e-8;

/// Trace margin above `-1` below which the quaternion extraction switches to
/// the largest-diagonal pivot (the direct formula divides by a vanishing
/// scalar part near half-turns).
pub const EPS_TRACE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeomError {
    /// The two input vectors point in opposite directions; the rotation axis
    /// between them is undefined and the caller must handle the case.
    #[error("vectors are antipodal; minimal rotation axis is undefined")]
    AntipodalVectors,
}
