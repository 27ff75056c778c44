//! The rotation and relative-velocity descriptor.
//!
//! A 6-DOF trajectory is reduced, per time step, to a 7-D invariant vector:
//! a reparameterized unit quaternion describing the rotation and the
//! square-root velocity of the translation expressed in the instantaneous
//! local frame. Viewpoint rotation is cancelled by pre-rotating the matrix
//! of per-sample rotation axes with the transpose of its left singular
//! basis; translation falls out of the first differences and scale is
//! handled by arc-length normalization upstream.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{RotationMatrix, UnitQuaternion, Vector3};
use crate::linalg::sym_eigen3;
use crate::preprocess::Trajectory6D;
use crate::{scalar, Real};

/// Speeds below this are treated as zero when forming square-root
/// velocities; the pure-rotation pattern maps to an exactly zero vector.
pub const EPS_SPEED: f64 = 1e-8;

/// Relative singular-value gap under which the normalized axis matrix is
/// not unique and the result is flagged.
pub const EPS_SPECTRUM_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RrvError {
    #[error("trajectory too short for descriptor computation: {len} samples, need at least 3")]
    TooShort { len: usize },
}

/// One time step of the descriptor: 4-D rotational part plus 3-D
/// translational part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrvDescriptor<T> {
    /// Reparameterized unit quaternion `(q_w, q_x, q_y, q_z)`.
    pub rotation: UnitQuaternion<T>,
    /// Square-root velocity of the translation in the local frame; exactly
    /// zero below the speed guard.
    pub velocity: Vector3<T>,
}

impl<T: Real> RrvDescriptor<T> {
    pub fn to_array(&self) -> [T; 7] {
        [
            self.rotation.w,
            self.rotation.x,
            self.rotation.y,
            self.rotation.z,
            self.velocity.x,
            self.velocity.y,
            self.velocity.z,
        ]
    }

    pub fn from_array(a: [T; 7]) -> Self {
        Self {
            rotation: UnitQuaternion::new(a[0], a[1], a[2], a[3]),
            velocity: Vector3::new(a[4], a[5], a[6]),
        }
    }
}

/// Descriptor time series; one entry per velocity sample, so a trajectory
/// of N samples yields N−1 descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrvSequence<T> {
    pub descriptors: Vec<RrvDescriptor<T>>,
    /// Set when the axis-matrix spectrum had (near-)equal singular values;
    /// the normalized result is still deterministic but cross-view
    /// invariance is only guaranteed for distinct spectra.
    pub degenerate_spectrum: bool,
}

impl<T: Real> RrvSequence<T> {
    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }
}

/// Per-sample rotation axes and angles.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSamples<T> {
    /// Unit rotation axes, one column per sample.
    pub axes: Vec<Vector3<T>>,
    /// Rotation angles in `[0, π]`, one per sample.
    pub angles: Vec<T>,
}

/// Convert per-sample orientations to the axis matrix plus angle vector.
pub fn axis_matrix<T: Real>(orientations: &[UnitQuaternion<T>]) -> AxisSamples<T> {
    let mut axes = Vec::with_capacity(orientations.len());
    let mut angles = Vec::with_capacity(orientations.len());
    for q in orientations {
        let aa = q.to_axis_angle();
        axes.push(aa.axis);
        angles.push(aa.angle);
    }
    AxisSamples { axes, angles }
}

/// Left singular basis used to cancel viewpoint rotation, plus diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdNormalization<T> {
    /// The basis `U` with columns sign-canonicalized and `det = +1`; the
    /// normalization applies `Uᵀ`.
    pub basis: RotationMatrix<T>,
    /// Singular values of the axis matrix, descending.
    pub singular_values: [T; 3],
    /// Near-equal singular values: normalized output not unique.
    pub degenerate: bool,
}

/// Decompose the 3×N axis matrix `A` and return the normalization basis
/// together with `Ã = Uᵀ·A`.
///
/// Each singular direction carries a sign ambiguity. Signs are fixed from
/// the rows of `Ã` (flip so the largest-magnitude entry of the row is
/// positive), which depend only on rotation-invariant factors, so the
/// normalized output is identical for `A` and `Γ·A`. A residual reflection
/// is pushed onto the smallest singular direction to keep `det(U) = +1`.
pub fn svd_normalize<T: Real>(axes: &[Vector3<T>]) -> (SvdNormalization<T>, Vec<Vector3<T>>) {
    let mut gram = [[T::zero(); 3]; 3];
    for a in axes {
        let v = a.to_array();
        for i in 0..3 {
            for j in 0..3 {
                gram[i][j] += v[i] * v[j];
            }
        }
    }
    let eig = sym_eigen3(&gram);
    let singular_values = [
        eig.values[0].max(T::zero()).sqrt(),
        eig.values[1].max(T::zero()).sqrt(),
        eig.values[2].max(T::zero()).sqrt(),
    ];

    let mut basis = eig.vectors;
    let sigma_max = singular_values[0];
    let zero_row_tol = sigma_max * scalar::<T>(1e-12) + scalar::<T>(1e-300);
    for (k, column) in basis.iter_mut().enumerate() {
        let mut best = T::zero();
        let mut best_val = T::zero();
        for a in axes {
            let r = column.dot(a);
            if r.abs() > best {
                best = r.abs();
                best_val = r;
            }
        }
        let _ = k;
        if best > zero_row_tol && best_val < T::zero() {
            *column = -*column;
        }
    }

    // Orthonormal columns: determinant is ±1. A reflection is folded into
    // the least significant direction, where it perturbs Ã the least and
    // pins the sign of null-space columns deterministically.
    let det = basis[0].dot(&basis[1].cross(&basis[2]));
    if det < T::zero() {
        basis[2] = -basis[2];
    }

    let degenerate = {
        let gap = sigma_max * scalar::<T>(EPS_SPECTRUM_GAP);
        (singular_values[0] - singular_values[1]).abs() < gap
            || (singular_values[1] - singular_values[2]).abs() < gap
    };

    let u = RotationMatrix::from_columns(basis[0], basis[1], basis[2]);
    let normalized = axes.iter().map(|a| u.apply_transpose(a)).collect();
    (
        SvdNormalization {
            basis: u,
            singular_values,
            degenerate,
        },
        normalized,
    )
}

/// Per-sample quaternions `(cos β/2, w̃ sin β/2)` from normalized axes and
/// angles.
pub fn rotational_invariants<T: Real>(
    axes: &[Vector3<T>],
    angles: &[T],
) -> Vec<UnitQuaternion<T>> {
    axes.iter()
        .zip(angles)
        .map(|(axis, &angle)| {
            let half = angle * scalar(0.5);
            let (s, c) = half.sin_cos();
            UnitQuaternion::new(c, axis.x * s, axis.y * s, axis.z * s)
        })
        .collect()
}

/// Square-root velocity: `v/√‖v‖`, or exactly zero below the speed guard.
pub fn srvf<T: Real>(v: &Vector3<T>) -> Vector3<T> {
    let speed = v.norm();
    if speed < scalar(EPS_SPEED) {
        Vector3::zero()
    } else {
        *v / speed.sqrt()
    }
}

/// Velocity expressed in the local frame: `Rᵀ·v`.
pub fn local_velocity<T: Real>(v: &Vector3<T>, frame: &RotationMatrix<T>) -> Vector3<T> {
    frame.apply_transpose(v)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RrvOptions {
    /// Skip the SVD rotational normalization; appropriate when the input is
    /// already expressed in a view-independent frame.
    pub skip_svd_normalization: bool,
}

/// Compute the descriptor sequence of a preprocessed 6-DOF trajectory.
///
/// Steps: axis matrix → rotational normalization (unless skipped, or unless
/// every sample rotation is the identity, in which case the local frame is
/// the identity) → per-step quaternions → positions pre-rotated by `Uᵀ` →
/// forward-difference velocities → projection onto the per-step local frame
/// → square-root velocity. The output has N−1 entries: rotation sample `t`
/// pairs with the velocity over `[t, t+1]`.
pub fn compute_rrv<T: Real>(
    traj: &Trajectory6D<T>,
    opts: &RrvOptions,
) -> Result<RrvSequence<T>, RrvError> {
    let n = traj.len();
    if n < 3 {
        return Err(RrvError::TooShort { len: n });
    }

    let samples = axis_matrix(traj.orientations());
    let all_identity = samples
        .angles
        .iter()
        .all(|&b| b <= scalar::<T>(1e-12));
    let skip = opts.skip_svd_normalization || all_identity;

    let (axes, positions, degenerate) = if skip {
        (samples.axes, traj.positions().to_vec(), false)
    } else {
        let (norm, axes) = svd_normalize(&samples.axes);
        let positions = traj
            .positions()
            .iter()
            .map(|p| norm.basis.apply_transpose(p))
            .collect();
        (axes, positions, norm.degenerate)
    };

    let quats = rotational_invariants(&axes[..n - 1], &samples.angles[..n - 1]);
    let mut descriptors = Vec::with_capacity(n - 1);
    for (t, rotation) in quats.into_iter().enumerate() {
        let v = positions[t + 1] - positions[t];
        let frame = rotation.to_matrix();
        let velocity = srvf(&local_velocity(&v, &frame));
        descriptors.push(RrvDescriptor { rotation, velocity });
    }

    Ok(RrvSequence {
        descriptors,
        degenerate_spectrum: degenerate,
    })
}

/// Descriptor metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Quaternion sign-invariant distance plus translational distance.
    #[default]
    Rrv,
    /// Plain Euclidean distance over the concatenated 7-vector.
    L2,
}

impl Metric {
    pub fn distance<T: Real>(&self, p: &RrvDescriptor<T>, q: &RrvDescriptor<T>) -> T {
        match self {
            Metric::Rrv => rrv_distance(p, q),
            Metric::L2 => rrv_distance_l2(p, q),
        }
    }
}

/// `min{‖S_rᵖ − S_rᵠ‖, ‖S_rᵖ + S_rᵠ‖} + ‖S_tᵖ − S_tᵠ‖`: antipodal
/// quaternions are the same rotation and compare at zero distance.
pub fn rrv_distance<T: Real>(p: &RrvDescriptor<T>, q: &RrvDescriptor<T>) -> T {
    let diff = quat_norm(
        p.rotation.w - q.rotation.w,
        p.rotation.x - q.rotation.x,
        p.rotation.y - q.rotation.y,
        p.rotation.z - q.rotation.z,
    );
    let sum = quat_norm(
        p.rotation.w + q.rotation.w,
        p.rotation.x + q.rotation.x,
        p.rotation.y + q.rotation.y,
        p.rotation.z + q.rotation.z,
    );
    diff.min(sum) + (p.velocity - q.velocity).norm()
}

/// Baseline Euclidean distance over the raw 7-vector; blind to the
/// quaternion sign ambiguity.
pub fn rrv_distance_l2<T: Real>(p: &RrvDescriptor<T>, q: &RrvDescriptor<T>) -> T {
    let dq = quat_norm(
        p.rotation.w - q.rotation.w,
        p.rotation.x - q.rotation.x,
        p.rotation.y - q.rotation.y,
        p.rotation.z - q.rotation.z,
    );
    let dv = (p.velocity - q.velocity).norm();
    (dq * dq + dv * dv).sqrt()
}

fn quat_norm<T: Real>(w: T, x: T, y: T, z: T) -> T {
    (w * w + x * x + y * y + z * z).sqrt()
}
