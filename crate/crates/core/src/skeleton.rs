//! Articulated-skeleton extension of the descriptor.
//!
//! A 20-joint skeleton is decomposed into five parts: left arm, right arm,
//! torso, left leg, right leg. Limb parts are represented by virtual rigid
//! bodies — a root joint and an end joint whose connecting direction gives
//! the observable rotation axis and whose end joint gives the reference
//! point. The torso is represented by the 6-DOF motion of the body
//! coordinate frame itself. Joint indices are 1-based throughout and fully
//! remappable: dataset distributions disagree on joint ordering.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{
    rotation_between_vectors, GeomError, RotationMatrix, UnitQuaternion, Vector3,
};
use crate::preprocess::Trajectory6D;
use crate::rrv::{compute_rrv, Metric, RrvDescriptor, RrvError, RrvOptions, RrvSequence};
use crate::{scalar, Real};

/// Bone directions shorter than this are degenerate.
pub const EPS_BONE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkeletonError {
    #[error("frame {frame}: frame-defining joints are collinear or missing")]
    DegenerateFrame { frame: usize },
    #[error("frame {frame}: virtual rigid body has zero length")]
    ZeroBone { frame: usize },
    #[error("joint index {index} out of range for {joints}-joint skeleton")]
    MissingJoint { index: usize, joints: usize },
    #[error("frame {frame} has {got} joints, expected {expected}")]
    FrameShape {
        frame: usize,
        expected: usize,
        got: usize,
    },
    #[error("descriptors have mismatched part structure")]
    StructureMismatch,
    #[error(transparent)]
    Descriptor(#[from] RrvError),
}

/// One skeleton frame: joint positions, indexed 1-based through
/// [`SkeletonFrame::joint`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFrame<T> {
    pub joints: Vec<Vector3<T>>,
}

impl<T: Real> SkeletonFrame<T> {
    pub fn new(joints: Vec<Vector3<T>>) -> Self {
        Self { joints }
    }

    pub fn joint(&self, index: usize) -> Result<Vector3<T>, SkeletonError> {
        if index == 0 || index > self.joints.len() {
            return Err(SkeletonError::MissingJoint {
                index,
                joints: self.joints.len(),
            });
        }
        Ok(self.joints[index - 1])
    }
}

/// Time-ordered skeleton frames with a constant joint count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonSequence<T> {
    pub frames: Vec<SkeletonFrame<T>>,
}

impl<T: Real> SkeletonSequence<T> {
    pub fn new(frames: Vec<SkeletonFrame<T>>) -> Result<Self, SkeletonError> {
        if let Some(first) = frames.first() {
            let expected = first.joints.len();
            for (i, f) in frames.iter().enumerate() {
                if f.joints.len() != expected {
                    return Err(SkeletonError::FrameShape {
                        frame: i,
                        expected,
                        got: f.joints.len(),
                    });
                }
            }
        }
        Ok(Self { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn joint_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.joints.len())
    }

    /// Per-joint trajectory across frames, 1-based index.
    pub fn joint_trajectory(&self, index: usize) -> Result<Vec<Vector3<T>>, SkeletonError> {
        self.frames.iter().map(|f| f.joint(index)).collect()
    }
}

/// Named roles of the frame-defining joints (1-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct JointMap {
    pub shoulder_center: usize,
    pub right_hip: usize,
    pub left_hip: usize,
    pub hip_center: usize,
}

impl Default for JointMap {
    fn default() -> Self {
        Self {
            shoulder_center: 3,
            right_hip: 5,
            left_hip: 6,
            hip_center: 7,
        }
    }
}

/// Root/end joint pairs of the virtual rigid bodies, per part.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VrbConfig {
    pub left_arm: Vec<(usize, usize)>,
    pub right_arm: Vec<(usize, usize)>,
    pub left_leg: Vec<(usize, usize)>,
    pub right_leg: Vec<(usize, usize)>,
}

impl Default for VrbConfig {
    fn default() -> Self {
        Self {
            left_arm: vec![(3, 11), (3, 13)],
            right_arm: vec![(3, 10), (3, 12)],
            left_leg: vec![(7, 19), (7, 17)],
            right_leg: vec![(7, 18), (7, 16)],
        }
    }
}

impl VrbConfig {
    pub fn pairs_for(&self, part: PartId) -> &[(usize, usize)] {
        match part {
            PartId::LeftArm => &self.left_arm,
            PartId::RightArm => &self.right_arm,
            PartId::LeftLeg => &self.left_leg,
            PartId::RightLeg => &self.right_leg,
            PartId::Torso => &[],
        }
    }
}

/// Adjacent-joint bone chains per limb, for the concatenated per-bone
/// baseline representation. Defaults follow the repo-native 20-joint layout
/// (four bones per limb).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoneChains {
    pub left_arm: Vec<(usize, usize)>,
    pub right_arm: Vec<(usize, usize)>,
    pub left_leg: Vec<(usize, usize)>,
    pub right_leg: Vec<(usize, usize)>,
}

impl Default for BoneChains {
    fn default() -> Self {
        Self {
            left_arm: vec![(3, 4), (4, 8), (8, 11), (11, 13)],
            right_arm: vec![(3, 9), (9, 14), (14, 10), (10, 12)],
            left_leg: vec![(7, 6), (6, 15), (15, 17), (17, 19)],
            right_leg: vec![(7, 5), (5, 20), (20, 18), (18, 16)],
        }
    }
}

impl BoneChains {
    pub fn pairs_for(&self, part: PartId) -> &[(usize, usize)] {
        match part {
            PartId::LeftArm => &self.left_arm,
            PartId::RightArm => &self.right_arm,
            PartId::LeftLeg => &self.left_leg,
            PartId::RightLeg => &self.right_leg,
            PartId::Torso => &[],
        }
    }
}

/// Left/right joint pairing of the repo-native 20-joint layout; used to
/// mirror synthetic skeletons.
pub fn default_mirror_pairs() -> Vec<(usize, usize)> {
    vec![
        (4, 9),
        (8, 14),
        (11, 10),
        (13, 12),
        (5, 6),
        (15, 20),
        (17, 18),
        (19, 16),
    ]
}

/// Body-intrinsic coordinate frame: origin at the hip center, y up the
/// spine, z in the facing direction, x lateral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyFrame<T> {
    pub origin: Vector3<T>,
    /// Columns are the unit basis vectors `[ĥ_x ĥ_y ĥ_z]` in world
    /// coordinates.
    pub axes: RotationMatrix<T>,
}

/// Construct the body frame from the shoulder-center and hip joints:
/// `h_y = v₁ + v₂`, `h_z = v₁ × v₂`, `h_x = h_y × h_z`, each normalized,
/// with `v₁` from right hip to shoulder center and `v₂` from left hip to
/// shoulder center.
pub fn body_frame<T: Real>(
    frame: &SkeletonFrame<T>,
    map: &JointMap,
    frame_index: usize,
) -> Result<BodyFrame<T>, SkeletonError> {
    let shoulder = frame.joint(map.shoulder_center)?;
    let right_hip = frame.joint(map.right_hip)?;
    let left_hip = frame.joint(map.left_hip)?;
    let origin = frame.joint(map.hip_center)?;

    let v1 = shoulder - right_hip;
    let v2 = shoulder - left_hip;
    let eps = scalar::<T>(EPS_BONE);
    let h_y = v1 + v2;
    let h_z = v1.cross(&v2);
    if h_z.norm() < eps || h_y.norm() < eps {
        return Err(SkeletonError::DegenerateFrame { frame: frame_index });
    }
    let y = h_y.normalized();
    let z = h_z.normalized();
    let x = y.cross(&z).normalized();
    Ok(BodyFrame {
        origin,
        axes: RotationMatrix::from_columns(x, y, z),
    })
}

/// Which body frame governs the coordinate change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyCoordMode {
    /// Each frame is expressed in its own body frame.
    #[default]
    PerFrame,
    /// Every frame is expressed in the first frame's body frame.
    FirstFrame,
}

/// Express all joints in body coordinates: `J ↦ axesᵀ·(J − origin)`.
pub fn to_body_coords<T: Real>(
    seq: &SkeletonSequence<T>,
    map: &JointMap,
    mode: BodyCoordMode,
) -> Result<SkeletonSequence<T>, SkeletonError> {
    let mut frames = Vec::with_capacity(seq.len());
    let first = match mode {
        BodyCoordMode::FirstFrame => Some(body_frame(
            seq.frames
                .first()
                .ok_or(SkeletonError::DegenerateFrame { frame: 0 })?,
            map,
            0,
        )?),
        BodyCoordMode::PerFrame => None,
    };
    for (i, f) in seq.frames.iter().enumerate() {
        let bf = match &first {
            Some(bf) => *bf,
            None => body_frame(f, map, i)?,
        };
        let joints = f
            .joints
            .iter()
            .map(|j| bf.axes.apply_transpose(&(*j - bf.origin)))
            .collect();
        frames.push(SkeletonFrame::new(joints));
    }
    SkeletonSequence::new(frames)
}

/// 6-DOF trajectory of a virtual rigid body spanning `root` and `end`.
///
/// Positions are the end-joint trajectory; the orientation at step `t` is
/// the minimal rotation carrying the bone direction at `t` onto the
/// direction at `t+1`, padded with the identity at the final sample so both
/// streams have the input length. An antipodal direction flip between
/// adjacent frames cannot come from real motion; the step is replaced by
/// the identity and logged.
pub fn vrb_trajectory<T: Real>(
    seq: &SkeletonSequence<T>,
    root: usize,
    end: usize,
) -> Result<Trajectory6D<T>, SkeletonError> {
    let n = seq.len();
    let eps = scalar::<T>(EPS_BONE);
    let mut directions = Vec::with_capacity(n);
    for (i, f) in seq.frames.iter().enumerate() {
        let bone = f.joint(root)? - f.joint(end)?;
        let dir = bone
            .try_normalized(eps)
            .ok_or(SkeletonError::ZeroBone { frame: i })?;
        directions.push(dir);
    }

    let mut orientations = Vec::with_capacity(n);
    for t in 0..n.saturating_sub(1) {
        let q = match rotation_between_vectors(&directions[t], &directions[t + 1]) {
            Ok(r) => r.to_quaternion(),
            Err(GeomError::AntipodalVectors) => {
                log::warn!(
                    "bone {root}->{end} flipped direction between frames {t} and {}; \
                     treating step as identity",
                    t + 1
                );
                UnitQuaternion::identity()
            }
        };
        orientations.push(q);
    }
    orientations.push(UnitQuaternion::identity());

    let positions = seq.joint_trajectory(end)?;
    Ok(Trajectory6D::new(positions, orientations).expect("matched lengths"))
}

/// 6-DOF trajectory of the body frame itself, expressed in its own
/// coordinates so the result is view-independent: positions integrate the
/// body-frame velocity of the hip center, orientations are the per-step
/// relative rotations of the frame (identity-padded at the end).
pub fn torso_trajectory<T: Real>(
    seq: &SkeletonSequence<T>,
    map: &JointMap,
) -> Result<Trajectory6D<T>, SkeletonError> {
    let n = seq.len();
    let mut body_frames = Vec::with_capacity(n);
    for (i, f) in seq.frames.iter().enumerate() {
        body_frames.push(body_frame(f, map, i)?);
    }

    let mut positions = Vec::with_capacity(n.max(1));
    positions.push(Vector3::zero());
    for t in 0..n.saturating_sub(1) {
        let step_world = body_frames[t + 1].origin - body_frames[t].origin;
        let step_body = body_frames[t].axes.apply_transpose(&step_world);
        let prev = *positions.last().expect("nonempty");
        positions.push(prev + step_body);
    }

    let mut orientations = Vec::with_capacity(n);
    for t in 0..n.saturating_sub(1) {
        let relative = body_frames[t].axes.transpose() * body_frames[t + 1].axes;
        orientations.push(relative.to_quaternion());
    }
    orientations.push(UnitQuaternion::identity());

    Ok(Trajectory6D::new(positions, orientations).expect("matched lengths"))
}

/// The five hierarchical parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartId {
    LeftArm,
    RightArm,
    Torso,
    LeftLeg,
    RightLeg,
}

impl PartId {
    pub const ALL: [PartId; 5] = [
        PartId::LeftArm,
        PartId::RightArm,
        PartId::Torso,
        PartId::LeftLeg,
        PartId::RightLeg,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            PartId::LeftArm => "la",
            PartId::RightArm => "ra",
            PartId::Torso => "ts",
            PartId::LeftLeg => "ll",
            PartId::RightLeg => "rl",
        }
    }

    /// The symmetric partner under a left/right swap.
    pub fn mirrored(&self) -> PartId {
        match self {
            PartId::LeftArm => PartId::RightArm,
            PartId::RightArm => PartId::LeftArm,
            PartId::LeftLeg => PartId::RightLeg,
            PartId::RightLeg => PartId::LeftLeg,
            PartId::Torso => PartId::Torso,
        }
    }
}

/// Several descriptor streams of equal length stacked frame-wise; the
/// per-frame distance is the sum of per-stream distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRrvSequence<T> {
    frames: Vec<Vec<RrvDescriptor<T>>>,
}

impl<T: Real> MultiRrvSequence<T> {
    pub fn from_streams(streams: Vec<RrvSequence<T>>) -> Result<Self, SkeletonError> {
        let len = streams.first().map_or(0, |s| s.len());
        if streams.iter().any(|s| s.len() != len) {
            return Err(SkeletonError::StructureMismatch);
        }
        let mut frames = vec![Vec::with_capacity(streams.len()); len];
        for stream in &streams {
            for (t, d) in stream.descriptors.iter().enumerate() {
                frames[t].push(*d);
            }
        }
        Ok(Self { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Descriptors of all streams at one time step.
    pub fn frame(&self, t: usize) -> &[RrvDescriptor<T>] {
        &self.frames[t]
    }

    pub fn stream_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.len())
    }

    pub fn frames(&self) -> &[Vec<RrvDescriptor<T>>] {
        &self.frames
    }
}

/// Sum of descriptor distances over aligned sub-descriptors of one time
/// slice.
pub fn multi_distance<T: Real>(
    p: &[RrvDescriptor<T>],
    q: &[RrvDescriptor<T>],
    metric: Metric,
) -> Result<T, SkeletonError> {
    if p.len() != q.len() {
        return Err(SkeletonError::StructureMismatch);
    }
    Ok(p.iter().zip(q).map(|(a, b)| metric.distance(a, b)).sum())
}

/// Five per-part descriptor stacks sharing one time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonDescriptor<T> {
    pub left_arm: MultiRrvSequence<T>,
    pub right_arm: MultiRrvSequence<T>,
    pub torso: MultiRrvSequence<T>,
    pub left_leg: MultiRrvSequence<T>,
    pub right_leg: MultiRrvSequence<T>,
}

impl<T: Real> SkeletonDescriptor<T> {
    pub fn part(&self, id: PartId) -> &MultiRrvSequence<T> {
        match id {
            PartId::LeftArm => &self.left_arm,
            PartId::RightArm => &self.right_arm,
            PartId::Torso => &self.torso,
            PartId::LeftLeg => &self.left_leg,
            PartId::RightLeg => &self.right_leg,
        }
    }

    pub fn len(&self) -> usize {
        self.torso.len()
    }

    pub fn is_empty(&self) -> bool {
        self.torso.is_empty()
    }

    /// Total per-frame descriptor width across parts and streams.
    pub fn frame_width(&self) -> usize {
        PartId::ALL
            .iter()
            .map(|p| self.part(*p).stream_count() * 7)
            .sum()
    }

    /// The same descriptor with left/right part contents exchanged.
    pub fn with_parts_swapped(&self) -> Self {
        Self {
            left_arm: self.right_arm.clone(),
            right_arm: self.left_arm.clone(),
            torso: self.torso.clone(),
            left_leg: self.right_leg.clone(),
            right_leg: self.left_leg.clone(),
        }
    }
}

/// How limb parts are turned into rigid-body streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartRepresentation {
    /// One virtual rigid body per configured root/end pair.
    #[default]
    VirtualRigidBodies,
    /// One rigid body per adjacent-joint bone of the configured chains.
    BoneChain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkeletonOptions {
    pub joint_map: JointMap,
    pub vrb: VrbConfig,
    pub bones: BoneChains,
    pub representation: PartRepresentation,
    /// Express joints in body coordinates before building limb streams and
    /// skip the SVD rotational normalization (the frame change already
    /// removes viewpoint rotation). With `false`, limbs are built from
    /// world-frame joints and each stream is SVD-normalized instead.
    pub local_coords: bool,
    pub body_mode: BodyCoordMode,
}

impl Default for SkeletonOptions {
    fn default() -> Self {
        Self {
            joint_map: JointMap::default(),
            vrb: VrbConfig::default(),
            bones: BoneChains::default(),
            representation: PartRepresentation::default(),
            local_coords: true,
            body_mode: BodyCoordMode::default(),
        }
    }
}

/// Compute the five-part skeleton descriptor. Any unresolvable frame
/// rejects the sequence whole.
pub fn skeleton_descriptor<T: Real>(
    seq: &SkeletonSequence<T>,
    opts: &SkeletonOptions,
) -> Result<SkeletonDescriptor<T>, SkeletonError> {
    if seq.len() < 3 {
        return Err(SkeletonError::Descriptor(RrvError::TooShort {
            len: seq.len(),
        }));
    }

    let torso_stream = {
        let traj = torso_trajectory(seq, &opts.joint_map)?;
        compute_rrv(
            &traj,
            &RrvOptions {
                skip_svd_normalization: true,
            },
        )?
    };

    let working = if opts.local_coords {
        to_body_coords(seq, &opts.joint_map, opts.body_mode)?
    } else {
        seq.clone()
    };
    let limb_opts = RrvOptions {
        skip_svd_normalization: opts.local_coords,
    };

    let limb = |part: PartId| -> Result<MultiRrvSequence<T>, SkeletonError> {
        let pairs = match opts.representation {
            PartRepresentation::VirtualRigidBodies => opts.vrb.pairs_for(part),
            PartRepresentation::BoneChain => opts.bones.pairs_for(part),
        };
        let mut streams = Vec::with_capacity(pairs.len());
        for &(root, end) in pairs {
            let traj = vrb_trajectory(&working, root, end)?;
            streams.push(compute_rrv(&traj, &limb_opts)?);
        }
        MultiRrvSequence::from_streams(streams)
    };

    Ok(SkeletonDescriptor {
        left_arm: limb(PartId::LeftArm)?,
        right_arm: limb(PartId::RightArm)?,
        torso: MultiRrvSequence::from_streams(vec![torso_stream])?,
        left_leg: limb(PartId::LeftLeg)?,
        right_leg: limb(PartId::RightLeg)?,
    })
}

/// Reflect a skeleton through the `x = 0` plane and exchange the paired
/// left/right joints; the geometric mirror image of the motion.
pub fn mirror_skeleton<T: Real>(
    seq: &SkeletonSequence<T>,
    pairs: &[(usize, usize)],
) -> SkeletonSequence<T> {
    let joint_count = seq.joint_count();
    let mut relabel: Vec<usize> = (0..joint_count).collect();
    for &(a, b) in pairs {
        if a >= 1 && b >= 1 && a <= joint_count && b <= joint_count {
            relabel[a - 1] = b - 1;
            relabel[b - 1] = a - 1;
        }
    }
    let frames = seq
        .frames
        .iter()
        .map(|f| {
            let joints = (0..joint_count)
                .map(|n| {
                    let j = f.joints[relabel[n]];
                    Vector3::new(-j.x, j.y, j.z)
                })
                .collect();
            SkeletonFrame::new(joints)
        })
        .collect();
    SkeletonSequence::new(frames).expect("constant joint count preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::AxisAngle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Camera-facing rest pose in the repo-native 20-joint layout.
    /// The subject's right side sits at negative world x.
    fn rest_pose() -> SkeletonFrame<f64> {
        let mut joints = vec![Vector3::zero(); 20];
        let mut set = |idx: usize, p: [f64; 3]| joints[idx - 1] = Vector3::new(p[0], p[1], p[2]);
        set(1, [0.0, 1.75, 0.0]); // head
        set(2, [0.0, 1.55, 0.0]); // neck
        set(3, [0.0, 1.45, 0.0]); // shoulder center
        set(4, [0.20, 1.40, 0.0]); // left shoulder
        set(9, [-0.20, 1.40, 0.0]); // right shoulder
        set(8, [0.25, 1.10, 0.0]); // left elbow
        set(14, [-0.25, 1.10, 0.0]); // right elbow
        set(11, [0.28, 0.82, 0.0]); // left wrist
        set(10, [-0.28, 0.82, 0.0]); // right wrist
        set(13, [0.30, 0.72, 0.0]); // left hand
        set(12, [-0.30, 0.72, 0.0]); // right hand
        set(7, [0.0, 0.95, 0.0]); // hip center
        set(6, [0.12, 0.92, 0.0]); // left hip
        set(5, [-0.12, 0.92, 0.0]); // right hip
        set(15, [0.14, 0.50, 0.0]); // left knee
        set(20, [-0.14, 0.50, 0.0]); // right knee
        set(17, [0.15, 0.08, 0.0]); // left ankle
        set(18, [-0.15, 0.08, 0.0]); // right ankle
        set(19, [0.16, 0.0, 0.12]); // left foot
        set(16, [-0.16, 0.0, 0.12]); // right foot
        SkeletonFrame::new(joints)
    }

    fn transform_frame(
        f: &SkeletonFrame<f64>,
        rot: &UnitQuaternion<f64>,
        shift: Vector3<f64>,
    ) -> SkeletonFrame<f64> {
        SkeletonFrame::new(
            f.joints
                .iter()
                .map(|j| rot.rotate_vector(j) + shift)
                .collect(),
        )
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let u3: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        UnitQuaternion::new(
            u1.sqrt() * u3.cos(),
            (1.0 - u1).sqrt() * u2.sin(),
            (1.0 - u1).sqrt() * u2.cos(),
            u1.sqrt() * u3.sin(),
        )
    }

    /// Sagittal-plane arm swing: wrist and hand of the leading arm sweep
    /// forward (in the y-z plane), everything else resting.
    fn swing_sequence(n: usize, amplitude: f64, lead: PartId) -> SkeletonSequence<f64> {
        let rest = rest_pose();
        let (wrist, hand, shoulder) = match lead {
            PartId::RightArm => (10, 12, 14),
            _ => (11, 13, 8),
        };
        let frames = (0..n)
            .map(|t| {
                let mut f = rest.clone();
                let phase = amplitude * (t as f64 * 0.25).sin();
                let anchor = rest.joint(shoulder).unwrap();
                let swing = |p: Vector3<f64>| {
                    let rot = RotationMatrix::about_x(phase);
                    anchor + rot.apply(&(p - anchor))
                };
                f.joints[wrist - 1] = swing(rest.joint(wrist).unwrap());
                f.joints[hand - 1] = swing(rest.joint(hand).unwrap());
                f
            })
            .collect();
        SkeletonSequence::new(frames).unwrap()
    }

    #[test]
    fn body_frame_of_canonical_pose() {
        let bf = body_frame(&rest_pose(), &JointMap::default(), 0).unwrap();
        assert!((bf.axes.column(0) - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-9);
        assert!((bf.axes.column(1) - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-9);
        assert!((bf.axes.column(2) - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-9);
        assert!(bf.axes.is_special_orthogonal(1e-9));
        assert_eq!(bf.origin, rest_pose().joint(7).unwrap());
    }

    #[test]
    fn body_frame_axes_are_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = rest_pose();
        for _ in 0..50 {
            let g = random_rotation(&mut rng);
            let shift = Vector3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let moved = transform_frame(&base, &g, shift);
            let a = body_frame(&base, &JointMap::default(), 0).unwrap();
            let b = body_frame(&moved, &JointMap::default(), 0).unwrap();
            let rotated = g.to_matrix() * a.axes;
            for i in 0..3 {
                assert!((b.axes.column(i) - rotated.column(i)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn collinear_frame_joints_are_degenerate() {
        let mut f = rest_pose();
        // Put both hips on the spine line.
        f.joints[4] = Vector3::new(0.0, 1.0, 0.0);
        f.joints[5] = Vector3::new(0.0, 0.9, 0.0);
        assert!(matches!(
            body_frame(&f, &JointMap::default(), 0),
            Err(SkeletonError::DegenerateFrame { .. })
        ));
    }

    #[test]
    fn body_coords_send_origin_to_zero() {
        let seq = swing_sequence(6, 0.8, PartId::LeftArm);
        let body = to_body_coords(&seq, &JointMap::default(), BodyCoordMode::PerFrame).unwrap();
        for f in &body.frames {
            assert!(f.joint(7).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn body_coords_cancel_rigid_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let seq = swing_sequence(8, 0.9, PartId::LeftArm);
        let g = random_rotation(&mut rng);
        let shift = Vector3::new(1.0, -2.0, 0.5);
        let moved = SkeletonSequence::new(
            seq.frames
                .iter()
                .map(|f| transform_frame(f, &g, shift))
                .collect(),
        )
        .unwrap();
        let a = to_body_coords(&seq, &JointMap::default(), BodyCoordMode::PerFrame).unwrap();
        let b = to_body_coords(&moved, &JointMap::default(), BodyCoordMode::PerFrame).unwrap();
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            for (ja, jb) in fa.joints.iter().zip(&fb.joints) {
                assert!((*ja - *jb).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn already_body_framed_sequence_is_unchanged() {
        let seq = swing_sequence(6, 0.7, PartId::LeftArm);
        let once = to_body_coords(&seq, &JointMap::default(), BodyCoordMode::PerFrame).unwrap();
        let twice = to_body_coords(&once, &JointMap::default(), BodyCoordMode::PerFrame).unwrap();
        for (fa, fb) in once.frames.iter().zip(&twice.frames) {
            for (ja, jb) in fa.joints.iter().zip(&fb.joints) {
                assert!((*ja - *jb).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn static_limb_gives_identity_rotations() {
        let seq = SkeletonSequence::new(vec![rest_pose(); 8]).unwrap();
        let traj = vrb_trajectory(&seq, 3, 13).unwrap();
        for q in traj.orientations() {
            assert_eq!((q.w, q.x, q.y, q.z), (1.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn constant_rate_bone_rotation_recovers_the_step() {
        // Bone sweeping a circle perpendicular to z at 0.1 rad per step.
        let n = 12;
        let step = 0.1;
        let frames: Vec<_> = (0..n)
            .map(|t| {
                let mut f = rest_pose();
                let angle = step * t as f64;
                let dir = Vector3::new(angle.cos(), angle.sin(), 0.0);
                f.joints[12] = f.joints[2] - dir.scale(0.5);
                f
            })
            .collect();
        let seq = SkeletonSequence::new(frames).unwrap();
        let traj = vrb_trajectory(&seq, 3, 13).unwrap();
        let expect =
            UnitQuaternion::from_axis_angle(&AxisAngle::new(Vector3::new(0.0, 0.0, 1.0), step));
        for q in &traj.orientations()[..n - 1] {
            let d = (q.w - expect.w)
                .abs()
                .max((q.x - expect.x).abs())
                .max((q.y - expect.y).abs())
                .max((q.z - expect.z).abs());
            assert!(d < 1e-9, "per-step rotation deviates by {d}");
        }
    }

    #[test]
    fn swapping_root_and_end_keeps_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let frames: Vec<_> = (0..4)
                .map(|_| {
                    let mut f = rest_pose();
                    f.joints[12] = Vector3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    );
                    f
                })
                .collect();
            let seq = SkeletonSequence::new(frames).unwrap();
            let a = vrb_trajectory(&seq, 3, 13).unwrap();
            let b = vrb_trajectory(&seq, 13, 3).unwrap();
            for (qa, qb) in a.orientations().iter().zip(b.orientations()) {
                let d = (qa.w - qb.w)
                    .abs()
                    .max((qa.x - qb.x).abs())
                    .max((qa.y - qb.y).abs())
                    .max((qa.z - qb.z).abs());
                assert!(d < 1e-9);
            }
        }
    }

    #[test]
    fn zero_bone_is_rejected() {
        let mut f = rest_pose();
        f.joints[12] = f.joints[2];
        let seq = SkeletonSequence::new(vec![f; 4]).unwrap();
        assert!(matches!(
            vrb_trajectory(&seq, 3, 13),
            Err(SkeletonError::ZeroBone { frame: 0 })
        ));
    }

    #[test]
    fn stationary_torso_is_the_rest_fixed_point() {
        let seq = SkeletonSequence::new(vec![rest_pose(); 6]).unwrap();
        let traj = torso_trajectory(&seq, &JointMap::default()).unwrap();
        let rrv = compute_rrv(
            &traj,
            &RrvOptions {
                skip_svd_normalization: true,
            },
        )
        .unwrap();
        for d in &rrv.descriptors {
            assert_eq!(
                (d.rotation.w, d.rotation.x, d.rotation.y, d.rotation.z),
                (1.0, 0.0, 0.0, 0.0)
            );
            assert_eq!(d.velocity, Vector3::zero());
        }
    }

    #[test]
    fn straight_walk_moves_along_the_facing_axis() {
        let base = rest_pose();
        let frames: Vec<_> = (0..8)
            .map(|t| {
                let shift = Vector3::new(0.0, 0.0, 0.3 * t as f64);
                SkeletonFrame::new(base.joints.iter().map(|j| *j + shift).collect())
            })
            .collect();
        let seq = SkeletonSequence::new(frames).unwrap();
        let traj = torso_trajectory(&seq, &JointMap::default()).unwrap();
        let rrv = compute_rrv(
            &traj,
            &RrvOptions {
                skip_svd_normalization: true,
            },
        )
        .unwrap();
        for d in &rrv.descriptors {
            assert!((d.rotation.w - 1.0).abs() < 1e-9);
            // Gait direction is the body z axis for a forward walk.
            assert!(d.velocity.z > 0.0);
            assert!(d.velocity.x.abs() < 1e-9);
        }
    }

    #[test]
    fn pivot_in_place_has_zero_translation_part() {
        let base = rest_pose();
        let hip = base.joint(7).unwrap();
        let frames: Vec<_> = (0..8)
            .map(|t| {
                let rot = RotationMatrix::about_y(0.2 * t as f64);
                SkeletonFrame::new(
                    base.joints
                        .iter()
                        .map(|j| hip + rot.apply(&(*j - hip)))
                        .collect(),
                )
            })
            .collect();
        let seq = SkeletonSequence::new(frames).unwrap();
        let traj = torso_trajectory(&seq, &JointMap::default()).unwrap();
        let rrv = compute_rrv(
            &traj,
            &RrvOptions {
                skip_svd_normalization: true,
            },
        )
        .unwrap();
        let mut nontrivial_rotation = false;
        for d in &rrv.descriptors {
            assert_eq!(d.velocity, Vector3::zero());
            if d.rotation.w < 1.0 - 1e-6 {
                nontrivial_rotation = true;
            }
        }
        assert!(nontrivial_rotation);
    }

    #[test]
    fn descriptor_dimension_bookkeeping() {
        let seq = swing_sequence(10, 0.8, PartId::LeftArm);
        let desc = skeleton_descriptor(&seq, &SkeletonOptions::default()).unwrap();
        assert_eq!(desc.len(), 9);
        for part in PartId::ALL {
            assert_eq!(desc.part(part).len(), 9);
        }
        assert_eq!(desc.left_arm.stream_count(), 2);
        assert_eq!(desc.torso.stream_count(), 1);
        assert_eq!(desc.frame_width(), 63);
    }

    #[test]
    fn rest_pose_descriptor_is_all_identity() {
        let seq = SkeletonSequence::new(vec![rest_pose(); 6]).unwrap();
        let desc = skeleton_descriptor(&seq, &SkeletonOptions::default()).unwrap();
        for part in PartId::ALL {
            for frame in desc.part(part).frames() {
                for d in frame {
                    assert_eq!(
                        (d.rotation.w, d.rotation.x, d.rotation.y, d.rotation.z),
                        (1.0, 0.0, 0.0, 0.0)
                    );
                    assert_eq!(d.velocity, Vector3::zero());
                }
            }
        }
    }

    #[test]
    fn descriptor_is_view_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let seq = swing_sequence(10, 0.9, PartId::LeftArm);
        let a = skeleton_descriptor(&seq, &SkeletonOptions::default()).unwrap();
        for _ in 0..20 {
            let g = random_rotation(&mut rng);
            let shift = Vector3::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let moved = SkeletonSequence::new(
                seq.frames
                    .iter()
                    .map(|f| transform_frame(f, &g, shift))
                    .collect(),
            )
            .unwrap();
            let b = skeleton_descriptor(&moved, &SkeletonOptions::default()).unwrap();
            for part in PartId::ALL {
                for (fa, fb) in a.part(part).frames().iter().zip(b.part(part).frames()) {
                    for (da, db) in fa.iter().zip(fb) {
                        for (x, y) in da.to_array().iter().zip(db.to_array()) {
                            assert!((x - y).abs() < 1e-6);
                        }
                    }
                }
            }
        }
    }

    /// Arm swing confined to the sagittal plane: the moving bones have no
    /// lateral component, so their increment axes stay along body-x and the
    /// mirror image is exactly the part-swapped motion. The whole body also
    /// walks forward, exercising the torso stream.
    fn sagittal_walk_swing(n: usize, amplitude: f64, lead: PartId) -> SkeletonSequence<f64> {
        let mut rest = rest_pose();
        // Wrists and hands on the x = 0 plane.
        rest.joints[10] = Vector3::new(0.0, 0.82, 0.05);
        rest.joints[9] = Vector3::new(0.0, 0.82, 0.05);
        rest.joints[12] = Vector3::new(0.0, 0.72, 0.08);
        rest.joints[11] = Vector3::new(0.0, 0.72, 0.08);
        let (wrist, hand) = match lead {
            PartId::RightArm => (10, 12),
            _ => (11, 13),
        };
        let anchor = rest.joint(3).unwrap();
        let frames = (0..n)
            .map(|t| {
                let mut f = rest.clone();
                let phase = amplitude * (t as f64 * 0.25).sin();
                let rot = RotationMatrix::about_x(phase);
                let swing = |p: Vector3<f64>| anchor + rot.apply(&(p - anchor));
                f.joints[wrist - 1] = swing(rest.joint(wrist).unwrap());
                f.joints[hand - 1] = swing(rest.joint(hand).unwrap());
                let walk = Vector3::new(0.0, 0.0, 0.25 * t as f64);
                SkeletonFrame::new(f.joints.iter().map(|j| *j + walk).collect())
            })
            .collect();
        SkeletonSequence::new(frames).unwrap()
    }

    #[test]
    fn mirrored_sagittal_motion_swaps_parts() {
        let seq = sagittal_walk_swing(10, 0.9, PartId::LeftArm);
        let mirrored = mirror_skeleton(&seq, &default_mirror_pairs());
        let a = skeleton_descriptor(&seq, &SkeletonOptions::default()).unwrap();
        let b = skeleton_descriptor(&mirrored, &SkeletonOptions::default()).unwrap();
        for part in PartId::ALL {
            let swapped = b.part(part.mirrored());
            for (fa, fb) in a.part(part).frames().iter().zip(swapped.frames()) {
                for (da, db) in fa.iter().zip(fb) {
                    for (x, y) in da.to_array().iter().zip(db.to_array()) {
                        assert!(
                            (x - y).abs() < 1e-6,
                            "part {:?} deviates by {}",
                            part,
                            (x - y).abs()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn world_coordinate_mode_normalizes_per_stream() {
        let seq = swing_sequence(10, 0.8, PartId::LeftArm);
        let opts = SkeletonOptions {
            local_coords: false,
            ..SkeletonOptions::default()
        };
        let desc = skeleton_descriptor(&seq, &opts).unwrap();
        assert_eq!(desc.len(), 9);
        assert_eq!(desc.frame_width(), 63);
        // Static limbs keep the rest fixed point in this mode too.
        for d in desc.right_leg.frame(0) {
            assert_eq!(d.velocity, Vector3::zero());
        }
    }

    #[test]
    fn first_frame_mode_uses_one_governing_frame() {
        let base = rest_pose();
        // Walk forward while turning: per-frame and first-frame coordinates
        // diverge as the body yaws away from its initial heading.
        let frames: Vec<_> = (0..6)
            .map(|t| {
                let rot = RotationMatrix::about_y(0.3 * t as f64);
                let shift = Vector3::new(0.0, 0.0, 0.4 * t as f64);
                SkeletonFrame::new(
                    base.joints
                        .iter()
                        .map(|j| rot.apply(j) + shift)
                        .collect(),
                )
            })
            .collect();
        let seq = SkeletonSequence::new(frames).unwrap();
        let map = JointMap::default();
        let fixed = to_body_coords(&seq, &map, BodyCoordMode::FirstFrame).unwrap();
        let per_frame = to_body_coords(&seq, &map, BodyCoordMode::PerFrame).unwrap();
        // Frame 0 agrees; later frames differ once the body has turned.
        for (a, b) in fixed.frames[0].joints.iter().zip(&per_frame.frames[0].joints) {
            assert!((*a - *b).norm() < 1e-12);
        }
        let last = fixed.frames.last().unwrap().joint(3).unwrap()
            - per_frame.frames.last().unwrap().joint(3).unwrap();
        assert!(last.norm() > 0.1);
    }

    #[test]
    fn multi_distance_is_additive() {
        let d0 = RrvDescriptor::<f64> {
            rotation: UnitQuaternion::identity(),
            velocity: Vector3::zero(),
        };
        let d1 = RrvDescriptor {
            rotation: UnitQuaternion::identity(),
            velocity: Vector3::new(0.5, 0.0, 0.0),
        };
        let d2 = RrvDescriptor {
            rotation: UnitQuaternion::identity(),
            velocity: Vector3::new(0.0, 0.25, 0.0),
        };
        let p = vec![d0, d0];
        assert_eq!(multi_distance(&p, &p, Metric::Rrv).unwrap(), 0.0);
        let q = vec![d1, d0];
        assert!((multi_distance(&p, &q, Metric::Rrv).unwrap() - 0.5).abs() < 1e-12);
        let r = vec![d1, d2];
        assert!((multi_distance(&p, &r, Metric::Rrv).unwrap() - 0.75).abs() < 1e-12);
        assert!(matches!(
            multi_distance(&p, &[d0], Metric::Rrv),
            Err(SkeletonError::StructureMismatch)
        ));
    }

    #[test]
    fn bone_chain_baseline_dimensions() {
        let seq = swing_sequence(8, 0.8, PartId::LeftArm);
        let opts = SkeletonOptions {
            representation: PartRepresentation::BoneChain,
            ..SkeletonOptions::default()
        };
        let desc = skeleton_descriptor(&seq, &opts).unwrap();
        assert_eq!(desc.left_arm.stream_count(), 4);
        // 4 bones × 7 values per frame and per limb.
        assert_eq!(desc.left_arm.frame(0).len() * 7, 28);
        assert_eq!(desc.frame_width(), 4 * 28 + 7);
    }

    #[test]
    fn single_bone_part_matches_vrb_path() {
        let seq = swing_sequence(8, 0.8, PartId::LeftArm);
        let pair = (11, 13);
        let vrb_opts = SkeletonOptions {
            vrb: VrbConfig {
                left_arm: vec![pair],
                ..VrbConfig::default()
            },
            ..SkeletonOptions::default()
        };
        let chain_opts = SkeletonOptions {
            representation: PartRepresentation::BoneChain,
            bones: BoneChains {
                left_arm: vec![pair],
                ..BoneChains::default()
            },
            ..SkeletonOptions::default()
        };
        let a = skeleton_descriptor(&seq, &vrb_opts).unwrap();
        let b = skeleton_descriptor(&seq, &chain_opts).unwrap();
        assert_eq!(a.left_arm, b.left_arm);
    }
}
