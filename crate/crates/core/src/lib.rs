//! Rotation and relative-velocity (RRV) descriptors for rigid-body motion
//! trajectories, with an extension to articulated skeletons and two
//! recognition back-ends (DTW + 1-NN, bag-of-words + chi-square SVM).
//!
//! The crate is organised around the descriptor pipeline:
//!
//! - [`geom`] — rotation-representation algebra (Euler angles, matrices,
//!   unit quaternions, axis-angle) and the two-vector rotation construction.
//! - [`preprocess`] — Kalman/RTS smoothing, stationary trimming, scale
//!   normalization.
//! - [`rrv`] — the descriptor itself: SVD rotational normalization,
//!   rotational invariants, local-frame square-root velocities, and the
//!   flexible metric.
//! - [`skeleton`] — body coordinate frame, virtual rigid bodies, five-part
//!   decomposition, multi-part metric.
//! - [`recognize`] — DTW warping, 1-NN, k-means dictionaries, bag-of-words
//!   encoding, chi-square-kernel SVM.
//! - [`data`] — dataset loaders, split protocols, synthetic generators,
//!   rigid transforms and noise injection.
//! - [`io`] — descriptor/model/results serialization.
//! - [`eval`] — the end-to-end evaluation harness driven by the CLI.
//!
//! Core math is generic over the scalar type through the [`Real`] trait;
//! concrete `f64` aliases are exported at the crate root.

pub mod data;
pub mod eval;
pub mod geom;
pub mod io;
pub mod linalg;
pub mod preprocess;
pub mod recognize;
pub mod rrv;
pub mod skeleton;

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar trait for all core math: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Copy + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Copy
        + Send
        + Sync
        + 'static
{
}

/// Shorthand for pulling an `f64` literal into a generic scalar.
#[inline]
pub(crate) fn scalar<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Concrete `f64` aliases for the common case.
pub type Vec3 = geom::Vector3<f64>;
pub type Mat3 = geom::RotationMatrix<f64>;
pub type Quat = geom::UnitQuaternion<f64>;
pub type Traj6 = preprocess::Trajectory6D<f64>;
pub type Descriptor = rrv::RrvDescriptor<f64>;
pub type DescriptorSeq = rrv::RrvSequence<f64>;
