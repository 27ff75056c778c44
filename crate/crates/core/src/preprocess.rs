//! Trajectory conditioning ahead of descriptor computation.
//!
//! Raw capture data is noisy, may idle at the start or end of a recording,
//! and carries arbitrary scale. The conditioning steps here are a
//! constant-velocity Kalman filter with an RTS backward pass, boundary
//! trimming of stationary runs, and arc-length normalization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{UnitQuaternion, Vector3};
use crate::{scalar, Real};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreprocessError {
    #[error("smoother noise variances must be positive")]
    InvalidParams,
    #[error("no samples remain after trimming stationary segments")]
    EmptyAfterTrim,
    #[error("trajectory has zero arc length")]
    DegenerateTrajectory,
    #[error("positions and orientations have different lengths ({positions} vs {orientations})")]
    LengthMismatch { positions: usize, orientations: usize },
}

/// A 6-DOF trajectory: per-sample positions plus per-sample orientations,
/// equal in length. Orientations are stored as unit quaternions regardless
/// of the source representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory6D<T> {
    positions: Vec<Vector3<T>>,
    orientations: Vec<UnitQuaternion<T>>,
}

impl<T: Real> Trajectory6D<T> {
    pub fn new(
        positions: Vec<Vector3<T>>,
        orientations: Vec<UnitQuaternion<T>>,
    ) -> Result<Self, PreprocessError> {
        if positions.len() != orientations.len() {
            return Err(PreprocessError::LengthMismatch {
                positions: positions.len(),
                orientations: orientations.len(),
            });
        }
        Ok(Self {
            positions,
            orientations,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vector3<T>] {
        &self.positions
    }

    pub fn orientations(&self) -> &[UnitQuaternion<T>] {
        &self.orientations
    }

    pub fn set_positions(&mut self, positions: Vec<Vector3<T>>) -> Result<(), PreprocessError> {
        if positions.len() != self.orientations.len() {
            return Err(PreprocessError::LengthMismatch {
                positions: positions.len(),
                orientations: self.orientations.len(),
            });
        }
        self.positions = positions;
        Ok(())
    }
}

/// Noise variances of the constant-velocity smoothing model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherParams<T> {
    /// White-noise acceleration intensity of the process model.
    pub process_noise: T,
    /// Variance of the position measurements.
    pub measurement_noise: T,
}

impl<T: Real> Default for SmootherParams<T> {
    fn default() -> Self {
        Self {
            process_noise: scalar(1e-3),
            measurement_noise: scalar(1e-2),
        }
    }
}

type Mat2<T> = [[T; 2]; 2];

fn mat2_mul<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mat2_add<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

fn mat2_sub<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

fn mat2_transpose<T: Real>(a: &Mat2<T>) -> Mat2<T> {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn mat2_inv<T: Real>(a: &Mat2<T>) -> Mat2<T> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

/// Smooth a point trajectory with a per-axis constant-velocity Kalman filter
/// followed by a Rauch–Tung–Striebel backward pass. The sample count is
/// preserved; the constant trajectory is a fixed point.
pub fn kalman_smooth<T: Real>(
    samples: &[Vector3<T>],
    params: &SmootherParams<T>,
) -> Result<Vec<Vector3<T>>, PreprocessError> {
    if params.process_noise <= T::zero() || params.measurement_noise <= T::zero() {
        return Err(PreprocessError::InvalidParams);
    }
    let n = samples.len();
    if n < 2 {
        return Ok(samples.to_vec());
    }

    let mut out = samples.to_vec();
    for axis in 0..3 {
        let zs: Vec<T> = samples.iter().map(|p| p[axis]).collect();
        let smoothed = smooth_axis(&zs, params);
        for (p, s) in out.iter_mut().zip(smoothed) {
            match axis {
                0 => p.x = s,
                1 => p.y = s,
                _ => p.z = s,
            }
        }
    }
    Ok(out)
}

fn smooth_axis<T: Real>(zs: &[T], params: &SmootherParams<T>) -> Vec<T> {
    let n = zs.len();
    let q = params.process_noise;
    let r = params.measurement_noise;
    // dt = 1 throughout: uniform sample spacing.
    let f: Mat2<T> = [[T::one(), T::one()], [T::zero(), T::one()]];
    let qm: Mat2<T> = [
        [q * scalar(1.0 / 3.0), q * scalar(0.5)],
        [q * scalar(0.5), q],
    ];

    let mut x_pred = vec![[T::zero(); 2]; n];
    let mut p_pred = vec![[[T::zero(); 2]; 2]; n];
    let mut x_upd = vec![[T::zero(); 2]; n];
    let mut p_upd = vec![[[T::zero(); 2]; 2]; n];

    x_upd[0] = [zs[0], T::zero()];
    p_upd[0] = [[r, T::zero()], [T::zero(), T::one()]];

    for t in 1..n {
        let prev = x_upd[t - 1];
        x_pred[t] = [prev[0] + prev[1], prev[1]];
        p_pred[t] = mat2_add(&mat2_mul(&mat2_mul(&f, &p_upd[t - 1]), &mat2_transpose(&f)), &qm);

        // Position-only measurement: the innovation covariance is scalar.
        let innovation = zs[t] - x_pred[t][0];
        let s = p_pred[t][0][0] + r;
        let k = [p_pred[t][0][0] / s, p_pred[t][1][0] / s];
        x_upd[t] = [x_pred[t][0] + k[0] * innovation, x_pred[t][1] + k[1] * innovation];
        let kh = [[k[0], T::zero()], [k[1], T::zero()]];
        let ikh = mat2_sub(&[[T::one(), T::zero()], [T::zero(), T::one()]], &kh);
        p_upd[t] = mat2_mul(&ikh, &p_pred[t]);
    }

    let mut x_smooth = x_upd.clone();
    for t in (0..n - 1).rev() {
        let g = mat2_mul(
            &mat2_mul(&p_upd[t], &mat2_transpose(&f)),
            &mat2_inv(&p_pred[t + 1]),
        );
        let dx = [
            x_smooth[t + 1][0] - x_pred[t + 1][0],
            x_smooth[t + 1][1] - x_pred[t + 1][1],
        ];
        x_smooth[t] = [
            x_upd[t][0] + g[0][0] * dx[0] + g[0][1] * dx[1],
            x_upd[t][1] + g[1][0] * dx[0] + g[1][1] * dx[1],
        ];
    }

    x_smooth.into_iter().map(|x| x[0]).collect()
}

/// Frame range that survives boundary trimming, given per-step stationary
/// flags (`stationary[t]` covers frames `t` and `t+1`). A run of k
/// stationary steps spans k+1 resting frames, all of which are dropped.
/// Trimming repeats until the boundary is in motion, so it is idempotent.
pub fn stationary_trim_range(
    stationary: &[bool],
) -> Result<std::ops::Range<usize>, PreprocessError> {
    let mut lo = 0usize;
    let mut hi = stationary.len() + 1; // frame count
    loop {
        if hi - lo <= 1 {
            break;
        }
        let steps = &stationary[lo..hi - 1];
        let lead = steps.iter().take_while(|&&s| s).count();
        if lead == steps.len() {
            return Err(PreprocessError::EmptyAfterTrim);
        }
        let trail = steps.iter().rev().take_while(|&&s| s).count();
        let drop_front = if lead > 0 { lead + 1 } else { 0 };
        let drop_back = if trail > 0 { trail + 1 } else { 0 };
        if drop_front == 0 && drop_back == 0 {
            break;
        }
        if drop_front + drop_back >= hi - lo {
            return Err(PreprocessError::EmptyAfterTrim);
        }
        lo += drop_front;
        hi -= drop_back;
    }
    Ok(lo..hi)
}

/// Per-step stationary flag of a 6-DOF trajectory: both the displacement
/// and the rotation angle of the step stay below `speed_eps`.
pub fn stationary_steps<T: Real>(traj: &Trajectory6D<T>, speed_eps: T) -> Vec<bool> {
    let pos = traj.positions();
    let ori = traj.orientations();
    (0..traj.len().saturating_sub(1))
        .map(|t| {
            let disp = (pos[t + 1] - pos[t]).norm();
            let rel = ori[t].conjugate() * ori[t + 1];
            let angle = rel.normalized().to_axis_angle().angle;
            disp < speed_eps && angle < speed_eps
        })
        .collect()
}

/// Drop the leading and trailing frame runs where both the per-step
/// displacement and the per-step rotation angle stay below `speed_eps`.
/// Interior pauses are never touched.
pub fn remove_stationary<T: Real>(
    traj: &Trajectory6D<T>,
    speed_eps: T,
) -> Result<Trajectory6D<T>, PreprocessError> {
    if traj.is_empty() {
        return Err(PreprocessError::EmptyAfterTrim);
    }
    let range = stationary_trim_range(&stationary_steps(traj, speed_eps))?;
    Trajectory6D::new(
        traj.positions()[range.clone()].to_vec(),
        traj.orientations()[range].to_vec(),
    )
}

/// Total length of the polyline through the samples.
pub fn arc_length<T: Real>(samples: &[Vector3<T>]) -> T {
    samples
        .windows(2)
        .map(|w| (w[1] - w[0]).norm())
        .sum()
}

/// Rescale so the arc length becomes one. Translation is left untouched;
/// the descriptor differentiates it away downstream.
pub fn normalize_scale<T: Real>(samples: &[Vector3<T>]) -> Result<Vec<Vector3<T>>, PreprocessError> {
    let len = arc_length(samples);
    if len <= T::zero() {
        return Err(PreprocessError::DegenerateTrajectory);
    }
    let inv = T::one() / len;
    Ok(samples.iter().map(|p| p.scale(inv)).collect())
}
