//! Synthetic trajectory and skeleton generators, rigid transforms and
//! calibrated noise injection. Everything is deterministic under its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LabeledSample, SamplePayload};
use crate::geom::{AxisAngle, RotationMatrix, UnitQuaternion, Vector3};
use crate::preprocess::Trajectory6D;
use crate::rrv::{axis_matrix, svd_normalize};
use crate::skeleton::{SkeletonFrame, SkeletonSequence};

/// Uniform random rotation (Shoemake's subgroup method).
pub fn random_unit_quaternion(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
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

/// Standard normal draw (Box-Muller).
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Parametric position families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveFamily {
    Helix,
    FigureEight,
    SCurve,
    Circle,
    Line,
}

/// Orientation programs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RotationProgram {
    /// Rotation axis precesses over the sphere while the angle ramps; the
    /// per-sample axes spread out in all three directions.
    Precession { axis_rate: f64, angle_rate: f64 },
    /// Fixed axis, ramping angle; the axis samples are rank one.
    AboutFixedAxis { axis: [f64; 3], rate: f64 },
    /// All orientations identity.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub family: CurveFamily,
    pub rotation: RotationProgram,
    pub samples: usize,
    /// Relative magnitude of per-sample phase/amplitude/tempo variation.
    pub jitter: f64,
}

/// Generate one 6-DOF trajectory.
pub fn gen_trajectory(spec: &TrajectorySpec, seed: u64) -> Trajectory6D<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.samples.max(3);
    let j = spec.jitter;

    let amp = 1.0 + j * rng.gen_range(-1.0..1.0);
    let phase = j * rng.gen_range(-1.0..1.0);
    let tempo_amp = 0.12 * j * rng.gen::<f64>();
    let tempo_phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let line_dir = (Vector3::new(1.0, 0.35, 0.2)
        + Vector3::new(
            j * rng.gen_range(-1.0..1.0),
            j * rng.gen_range(-1.0..1.0),
            j * rng.gen_range(-1.0..1.0),
        ))
    .normalized();
    let axis_phase = j * rng.gen_range(-1.0..1.0);
    let angle_offset = 0.2 + 0.1 * j * rng.gen::<f64>();

    let tau = std::f64::consts::TAU;
    let mut positions = Vec::with_capacity(n);
    let mut orientations = Vec::with_capacity(n);
    for t in 0..n {
        let s = t as f64 / (n - 1) as f64;
        // Smooth tempo variation keeps the parameterization monotone.
        let u = s + tempo_amp * (tau * s + tempo_phase).sin() / tau;
        let p = match spec.family {
            CurveFamily::Helix => Vector3::new(
                amp * (1.5 * tau * u + phase).cos(),
                amp * (1.5 * tau * u + phase).sin(),
                1.2 * u,
            ),
            CurveFamily::FigureEight => Vector3::new(
                amp * (tau * u + phase).sin(),
                amp * (2.0 * tau * u + phase).sin() * 0.5,
                0.3 * u,
            ),
            CurveFamily::SCurve => Vector3::new(
                1.5 * u,
                0.4 * amp * (std::f64::consts::PI * 2.0 * u + phase).sin(),
                0.3 * (std::f64::consts::PI * u).cos(),
            ),
            CurveFamily::Circle => Vector3::new(
                amp * (tau * u + phase).cos(),
                amp * (tau * u + phase).sin(),
                0.05 * (2.0 * tau * u).sin(),
            ),
            CurveFamily::Line => line_dir.scale(u),
        };
        positions.push(p);

        let q = match spec.rotation {
            RotationProgram::Precession {
                axis_rate,
                angle_rate,
            } => {
                let a = axis_rate * tau * u + axis_phase;
                let axis = Vector3::new(a.cos(), 0.8 * a.sin(), 0.55 + 0.4 * (0.7 * a).sin())
                    .normalized();
                let angle = angle_offset + angle_rate * u;
                UnitQuaternion::from_axis_angle(&AxisAngle::new(axis, angle))
            }
            RotationProgram::AboutFixedAxis { axis, rate } => {
                let axis = Vector3::from(axis).normalized();
                UnitQuaternion::from_axis_angle(&AxisAngle::new(axis, rate * u))
            }
            RotationProgram::Identity => UnitQuaternion::identity(),
        };
        orientations.push(q);
    }
    Trajectory6D::new(positions, orientations).expect("matched lengths")
}

/// As [`gen_trajectory`], reseeding until the axis-matrix singular values
/// are pairwise separated by at least 2% of the largest. Panics if the
/// spec cannot reach a well-spread spectrum (e.g. a fixed-axis program).
pub fn gen_trajectory_well_spread(spec: &TrajectorySpec, seed: u64) -> Trajectory6D<f64> {
    for attempt in 0..64u64 {
        let traj = gen_trajectory(spec, seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9)));
        let samples = axis_matrix(traj.orientations());
        let (norm, _) = svd_normalize(&samples.axes);
        let s = norm.singular_values;
        if s[0] - s[1] > 0.02 * s[0] && s[1] - s[2] > 0.02 * s[0] {
            return traj;
        }
    }
    panic!("rotation program never produced distinct singular values");
}

/// Five rigid-motion classes with distinct shapes and rotation programs.
pub fn default_rigid_classes() -> Vec<(String, TrajectorySpec)> {
    let base = |family, rotation| TrajectorySpec {
        family,
        rotation,
        samples: 60,
        jitter: 0.15,
    };
    vec![
        (
            "helix".into(),
            base(
                CurveFamily::Helix,
                RotationProgram::Precession {
                    axis_rate: 0.9,
                    angle_rate: 1.4,
                },
            ),
        ),
        (
            "eight".into(),
            base(
                CurveFamily::FigureEight,
                RotationProgram::Precession {
                    axis_rate: 1.6,
                    angle_rate: 0.8,
                },
            ),
        ),
        (
            "scurve".into(),
            base(
                CurveFamily::SCurve,
                RotationProgram::Precession {
                    axis_rate: 0.5,
                    angle_rate: 2.2,
                },
            ),
        ),
        (
            "circle".into(),
            base(
                CurveFamily::Circle,
                RotationProgram::Precession {
                    axis_rate: 1.1,
                    angle_rate: 0.5,
                },
            ),
        ),
        (
            "drift".into(),
            base(
                CurveFamily::Line,
                RotationProgram::Precession {
                    axis_rate: 2.3,
                    angle_rate: 1.0,
                },
            ),
        ),
    ]
}

/// SplitMix-style seed mixing; keeps per-sample random streams
/// independent.
pub fn derive_seed(base: u64, class: usize, subject: u32, instance: u32) -> u64 {
    let mut z = base
        .wrapping_add((class as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((subject as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add((instance as u64).wrapping_mul(0x94D0_49BB_1331_11EB));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Build a labeled rigid-trajectory dataset over classes × subjects ×
/// instances.
pub fn gen_rigid_dataset(
    classes: &[(String, TrajectorySpec)],
    subjects: u32,
    samples_per_subject: u32,
    base_seed: u64,
) -> Vec<LabeledSample> {
    let mut out = Vec::new();
    for (ci, (label, spec)) in classes.iter().enumerate() {
        for subject in 1..=subjects {
            for instance in 1..=samples_per_subject {
                let seed = derive_seed(base_seed, ci, subject, instance);
                let trajectory = gen_trajectory(spec, seed);
                out.push(LabeledSample {
                    id: format!("{label}-{subject}-{instance}"),
                    label: label.clone(),
                    subject,
                    payload: SamplePayload::Rigid { trajectory },
                });
            }
        }
    }
    out
}

/// Canonical camera-facing rest pose of the repo-native 20-joint layout;
/// the subject's right side sits at negative world x.
pub fn canonical_rest_pose() -> SkeletonFrame<f64> {
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

/// Parametric whole-body action: sagittal arm/leg swings, an optional
/// frontal-plane arm component, forward walking and turning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkeletonActionSpec {
    pub samples: usize,
    /// Sagittal arm-swing amplitude, radians.
    pub arm_swing: f64,
    /// Arm-swing cycles over the clip.
    pub arm_rate: f64,
    /// Frontal-plane (lateral) arm amplitude, radians.
    pub lateral_arm: f64,
    /// Sagittal leg-swing amplitude, radians.
    pub leg_swing: f64,
    pub leg_rate: f64,
    /// Forward translation per frame.
    pub walk_speed: f64,
    /// Yaw per frame, radians.
    pub turn_rate: f64,
    /// Swing the left limbs (otherwise the right).
    pub lead_left: bool,
    pub jitter: f64,
}

impl Default for SkeletonActionSpec {
    fn default() -> Self {
        Self {
            samples: 40,
            arm_swing: 0.0,
            arm_rate: 1.0,
            lateral_arm: 0.0,
            leg_swing: 0.0,
            leg_rate: 1.0,
            walk_speed: 0.0,
            turn_rate: 0.0,
            lead_left: true,
            jitter: 0.1,
        }
    }
}

/// Generate one skeleton clip.
pub fn gen_skeleton(spec: &SkeletonActionSpec, seed: u64) -> SkeletonSequence<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.samples.max(3);
    let j = spec.jitter;
    let arm_amp = spec.arm_swing * (1.0 + j * rng.gen_range(-1.0..1.0));
    let leg_amp = spec.leg_swing * (1.0 + j * rng.gen_range(-1.0..1.0));
    let lat_amp = spec.lateral_arm * (1.0 + j * rng.gen_range(-1.0..1.0));
    let arm_phase = j * rng.gen_range(-1.0..1.0);
    let leg_phase = j * rng.gen_range(-1.0..1.0);
    let walk = spec.walk_speed * (1.0 + j * rng.gen_range(-1.0..1.0));
    let turn = spec.turn_rate * (1.0 + j * rng.gen_range(-1.0..1.0));

    let rest = canonical_rest_pose();
    let (wrist, hand, shoulder) = if spec.lead_left { (11, 13, 4) } else { (10, 12, 9) };
    let (knee, ankle, foot, hip) = if spec.lead_left {
        (15, 17, 19, 6)
    } else {
        (20, 18, 16, 5)
    };
    let tau = std::f64::consts::TAU;

    let frames = (0..n)
        .map(|t| {
            let s = t as f64 / (n - 1) as f64;
            let mut f = rest.clone();

            let arm_angle = arm_amp * (tau * spec.arm_rate * s + arm_phase).sin();
            let lat_angle = lat_amp * (tau * spec.arm_rate * s + arm_phase).cos();
            if arm_amp.abs() > 0.0 || lat_amp.abs() > 0.0 {
                let anchor = rest.joint(shoulder).unwrap();
                let rot = RotationMatrix::about_x(arm_angle) * RotationMatrix::about_z(lat_angle);
                for idx in [wrist, hand] {
                    let p = rest.joint(idx).unwrap();
                    f.joints[idx - 1] = anchor + rot.apply(&(p - anchor));
                }
            }

            let leg_angle = leg_amp * (tau * spec.leg_rate * s + leg_phase).sin();
            if leg_amp.abs() > 0.0 {
                let anchor = rest.joint(hip).unwrap();
                let rot = RotationMatrix::about_x(leg_angle);
                for idx in [knee, ankle, foot] {
                    let p = rest.joint(idx).unwrap();
                    f.joints[idx - 1] = anchor + rot.apply(&(p - anchor));
                }
            }

            let yaw = RotationMatrix::about_y(turn * t as f64);
            let hip_center = rest.joint(7).unwrap();
            let heading = yaw.apply(&Vector3::new(0.0, 0.0, 1.0));
            let shift = heading.scale(walk * t as f64);
            let joints = f
                .joints
                .iter()
                .map(|p| hip_center + yaw.apply(&(*p - hip_center)) + shift)
                .collect();
            SkeletonFrame::new(joints)
        })
        .collect();
    SkeletonSequence::new(frames).expect("constant joint count")
}

/// Three skeleton action classes with distinct moving parts.
pub fn default_skeleton_classes() -> Vec<(String, SkeletonActionSpec)> {
    vec![
        (
            "wave".into(),
            SkeletonActionSpec {
                arm_swing: 0.9,
                arm_rate: 1.5,
                lateral_arm: 0.15,
                ..SkeletonActionSpec::default()
            },
        ),
        (
            "kick".into(),
            SkeletonActionSpec {
                leg_swing: 0.8,
                leg_rate: 1.0,
                ..SkeletonActionSpec::default()
            },
        ),
        (
            "stride".into(),
            SkeletonActionSpec {
                arm_swing: 0.25,
                arm_rate: 2.0,
                walk_speed: 0.06,
                turn_rate: 0.01,
                ..SkeletonActionSpec::default()
            },
        ),
    ]
}

/// Build a labeled skeleton dataset over classes × subjects × instances.
pub fn gen_skeleton_dataset(
    classes: &[(String, SkeletonActionSpec)],
    subjects: u32,
    samples_per_subject: u32,
    base_seed: u64,
) -> Vec<LabeledSample> {
    let mut out = Vec::new();
    for (ci, (label, spec)) in classes.iter().enumerate() {
        for subject in 1..=subjects {
            for instance in 1..=samples_per_subject {
                let seed = derive_seed(base_seed, ci, subject, instance);
                let sequence = gen_skeleton(spec, seed);
                out.push(LabeledSample {
                    id: format!("{label}-{subject}-{instance}"),
                    label: label.clone(),
                    subject,
                    payload: SamplePayload::Skeleton { sequence },
                });
            }
        }
    }
    out
}

/// Similarity transform of the observation frame. Positions map through
/// `p ↦ scale·Γ·p + translation`; per-sample rotation fields transform by
/// conjugation (`R ↦ Γ·R·Γᵀ`), which is how a world-frame rotation field
/// reads in a rotated frame: the angle is preserved and the axis rotates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
    pub scale: f64,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zero(),
            scale: 1.0,
        }
    }

    /// Random rotation, translation in `[-5, 5]³`, scale in `[0.5, 2]`.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rotation = random_unit_quaternion(&mut rng);
        let translation = Vector3::new(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
        );
        let scale = (rng.gen_range(0.5f64.ln()..2.0f64.ln())).exp();
        Self {
            rotation,
            translation,
            scale,
        }
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate_vector(p).scale(self.scale) + self.translation
    }

    pub fn apply_trajectory(&self, traj: &Trajectory6D<f64>) -> Trajectory6D<f64> {
        let positions = traj.positions().iter().map(|p| self.apply_point(p)).collect();
        let orientations = traj
            .orientations()
            .iter()
            .map(|q| self.rotation * *q * self.rotation.conjugate())
            .collect();
        Trajectory6D::new(positions, orientations).expect("matched lengths")
    }

    pub fn apply_skeleton(&self, seq: &SkeletonSequence<f64>) -> SkeletonSequence<f64> {
        let frames = seq
            .frames
            .iter()
            .map(|f| SkeletonFrame::new(f.joints.iter().map(|j| self.apply_point(j)).collect()))
            .collect();
        SkeletonSequence::new(frames).expect("constant joint count")
    }

    pub fn apply_sample(&self, sample: &LabeledSample) -> LabeledSample {
        let payload = match &sample.payload {
            SamplePayload::Rigid { trajectory } => SamplePayload::Rigid {
                trajectory: self.apply_trajectory(trajectory),
            },
            SamplePayload::RigidPair { left, right } => SamplePayload::RigidPair {
                left: self.apply_trajectory(left),
                right: self.apply_trajectory(right),
            },
            SamplePayload::Skeleton { sequence } => SamplePayload::Skeleton {
                sequence: self.apply_skeleton(sequence),
            },
        };
        LabeledSample {
            payload,
            ..sample.clone()
        }
    }
}

/// Additive white Gaussian noise at a requested signal-to-noise ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

fn channel_sigma(values: impl Iterator<Item = f64> + Clone, snr_db: f64) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    // Signal power about the channel mean (AC power).
    let power = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (power / 10f64.powf(snr_db / 10.0)).sqrt()
}

fn noisy_positions(
    positions: &[Vector3<f64>],
    snr_db: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Vector3<f64>> {
    let sigma = [
        channel_sigma(positions.iter().map(|p| p.x), snr_db),
        channel_sigma(positions.iter().map(|p| p.y), snr_db),
        channel_sigma(positions.iter().map(|p| p.z), snr_db),
    ];
    positions
        .iter()
        .map(|p| {
            Vector3::new(
                p.x + sigma[0] * gaussian(rng),
                p.y + sigma[1] * gaussian(rng),
                p.z + sigma[2] * gaussian(rng),
            )
        })
        .collect()
}

/// Noise on all six channels. Positions get per-channel additive noise;
/// orientations are perturbed by composing a small random rotation whose
/// rotation-vector components are calibrated to the same ratio in angle
/// space, keeping the samples on the rotation manifold.
pub fn noisy_trajectory(
    traj: &Trajectory6D<f64>,
    snr_db: f64,
    rng: &mut ChaCha8Rng,
) -> Trajectory6D<f64> {
    let positions = noisy_positions(traj.positions(), snr_db, rng);

    let rotvecs: Vec<Vector3<f64>> = traj
        .orientations()
        .iter()
        .map(|q| q.to_axis_angle().to_rotation_vector())
        .collect();
    let sigma = [
        channel_sigma(rotvecs.iter().map(|w| w.x), snr_db),
        channel_sigma(rotvecs.iter().map(|w| w.y), snr_db),
        channel_sigma(rotvecs.iter().map(|w| w.z), snr_db),
    ];
    let orientations = traj
        .orientations()
        .iter()
        .map(|q| {
            let delta = Vector3::new(
                sigma[0] * gaussian(rng),
                sigma[1] * gaussian(rng),
                sigma[2] * gaussian(rng),
            );
            let dq = UnitQuaternion::from_axis_angle(&AxisAngle::from_rotation_vector(&delta));
            (dq * *q).normalized()
        })
        .collect();
    Trajectory6D::new(positions, orientations).expect("matched lengths")
}

/// Joint-position noise, per coordinate channel pooled across joints.
pub fn noisy_skeleton(
    seq: &SkeletonSequence<f64>,
    snr_db: f64,
    rng: &mut ChaCha8Rng,
) -> SkeletonSequence<f64> {
    let all = |pick: fn(&Vector3<f64>) -> f64| {
        seq.frames
            .iter()
            .flat_map(move |f| f.joints.iter().map(pick))
            .collect::<Vec<f64>>()
    };
    let sigma = [
        channel_sigma(all(|p| p.x).into_iter(), snr_db),
        channel_sigma(all(|p| p.y).into_iter(), snr_db),
        channel_sigma(all(|p| p.z).into_iter(), snr_db),
    ];
    let frames = seq
        .frames
        .iter()
        .map(|f| {
            SkeletonFrame::new(
                f.joints
                    .iter()
                    .map(|p| {
                        Vector3::new(
                            p.x + sigma[0] * gaussian(rng),
                            p.y + sigma[1] * gaussian(rng),
                            p.z + sigma[2] * gaussian(rng),
                        )
                    })
                    .collect(),
            )
        })
        .collect();
    SkeletonSequence::new(frames).expect("constant joint count")
}

/// Apply calibrated noise to a sample; deterministic under `spec.seed`.
pub fn add_noise(sample: &LabeledSample, spec: &NoiseSpec) -> LabeledSample {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let payload = match &sample.payload {
        SamplePayload::Rigid { trajectory } => SamplePayload::Rigid {
            trajectory: noisy_trajectory(trajectory, spec.snr_db, &mut rng),
        },
        SamplePayload::RigidPair { left, right } => SamplePayload::RigidPair {
            left: noisy_trajectory(left, spec.snr_db, &mut rng),
            right: noisy_trajectory(right, spec.snr_db, &mut rng),
        },
        SamplePayload::Skeleton { sequence } => SamplePayload::Skeleton {
            sequence: noisy_skeleton(sequence, spec.snr_db, &mut rng),
        },
    };
    LabeledSample {
        payload,
        ..sample.clone()
    }
}
