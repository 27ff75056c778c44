//! Dataset ingestion, split protocols and synthetic data.
//!
//! Two on-disk formats are read: delimited-text 6-DOF trajectory files
//! (positions plus Euler angles, column order configurable) and 20-joint
//! skeleton text (one joint per line, four reals, twenty lines per frame).
//! Synthetic samples round-trip through JSON. Loaders work in `f64`, the
//! native precision of both formats.

pub mod synth;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{EulerAngles, EulerConvention, Vector3};
use crate::preprocess::Trajectory6D;
use crate::skeleton::{SkeletonFrame, SkeletonSequence};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {lines} data lines is not a multiple of {joints} joints per frame")]
    FrameCountMismatch {
        path: PathBuf,
        lines: usize,
        joints: usize,
    },
    #[error("{path}: expected at least {expected} columns, row {line} has {got}")]
    Shape {
        path: PathBuf,
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("{path}: cannot derive label/subject/instance from file name")]
    Name { path: PathBuf },
    #[error("unknown subjects in split request: {0:?}")]
    UnknownSubjects(Vec<u32>),
    #[error("no samples found under {path}")]
    EmptyDataset { path: PathBuf },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// What one labeled sample carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplePayload {
    Rigid {
        trajectory: Trajectory6D<f64>,
    },
    /// Two rigid bodies recorded together (left and right hand).
    RigidPair {
        left: Trajectory6D<f64>,
        right: Trajectory6D<f64>,
    },
    Skeleton {
        sequence: SkeletonSequence<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub id: String,
    pub label: String,
    pub subject: u32,
    pub payload: SamplePayload,
}

/// Column indices (0-based) of one rigid body within a delimited row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnLayout {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub phi: usize,
    pub psi: usize,
    pub theta: usize,
}

impl ColumnLayout {
    /// Six consecutive columns starting at `offset`: x, y, z, φ, ψ, θ.
    pub fn consecutive(offset: usize) -> Self {
        Self {
            x: offset,
            y: offset + 1,
            z: offset + 2,
            phi: offset + 3,
            psi: offset + 4,
            theta: offset + 5,
        }
    }

    fn max_index(&self) -> usize {
        self.x
            .max(self.y)
            .max(self.z)
            .max(self.phi)
            .max(self.psi)
            .max(self.theta)
    }
}

/// Layout of delimited 6-DOF trajectory files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RigidFormat {
    /// `None` splits on ASCII whitespace.
    pub delimiter: Option<char>,
    pub left: ColumnLayout,
    /// Present for two-body rows.
    pub right: Option<ColumnLayout>,
    pub euler: EulerConvention,
    /// Header rows to skip.
    pub skip_rows: usize,
}

impl Default for RigidFormat {
    fn default() -> Self {
        Self {
            delimiter: None,
            left: ColumnLayout::consecutive(0),
            right: None,
            euler: EulerConvention::default(),
            skip_rows: 0,
        }
    }
}

impl RigidFormat {
    /// Two bodies in twelve consecutive columns.
    pub fn two_hand() -> Self {
        Self {
            right: Some(ColumnLayout::consecutive(6)),
            ..Self::default()
        }
    }
}

fn parse_field(
    fields: &[&str],
    idx: usize,
    path: &Path,
    line: usize,
) -> Result<f64, DataError> {
    fields[idx].parse::<f64>().map_err(|_| DataError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("field {} ({:?}) is not a number", idx + 1, fields[idx]),
    })
}

fn read_body(
    rows: &[(usize, Vec<f64>)],
    layout: &ColumnLayout,
    euler: EulerConvention,
) -> Trajectory6D<f64> {
    let mut positions = Vec::with_capacity(rows.len());
    let mut orientations = Vec::with_capacity(rows.len());
    for (_, fields) in rows {
        positions.push(Vector3::new(
            fields[layout.x],
            fields[layout.y],
            fields[layout.z],
        ));
        let angles = EulerAngles::new(
            fields[layout.phi],
            fields[layout.psi],
            fields[layout.theta],
            euler,
        );
        orientations.push(angles.to_quaternion());
    }
    Trajectory6D::new(positions, orientations).expect("matched lengths")
}

/// Parse one delimited trajectory file into a single- or two-body payload.
pub fn load_rigid_file(path: &Path, format: &RigidFormat) -> Result<SamplePayload, DataError> {
    let text = fs::read_to_string(path)?;
    let needed = format
        .left
        .max_index()
        .max(format.right.map_or(0, |r| r.max_index()))
        + 1;

    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if i < format.skip_rows || raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = match format.delimiter {
            Some(d) => raw.split(d).map(str::trim).collect(),
            None => raw.split_whitespace().collect(),
        };
        if fields.len() < needed {
            return Err(DataError::Shape {
                path: path.to_path_buf(),
                line: line_no,
                expected: needed,
                got: fields.len(),
            });
        }
        let mut values = Vec::with_capacity(fields.len());
        for idx in 0..fields.len() {
            values.push(parse_field(&fields, idx, path, line_no)?);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: "non-finite value".into(),
            });
        }
        rows.push((line_no, values));
    }

    let left = read_body(&rows, &format.left, format.euler);
    match &format.right {
        Some(layout) => Ok(SamplePayload::RigidPair {
            left,
            right: read_body(&rows, layout, format.euler),
        }),
        None => Ok(SamplePayload::Rigid { trajectory: left }),
    }
}

/// Derive `(label, subject, instance)` from a file path. Two conventions:
/// a `label-subject-instance` stem, or a `label-instance` stem inside a
/// subject directory whose name ends in digits.
fn sample_identity(root: &Path, path: &Path) -> Result<(String, u32, u32), DataError> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| DataError::Name {
            path: path.to_path_buf(),
        })?;
    let parts: Vec<&str> = stem.split('-').collect();
    if parts.len() >= 3 {
        if let (Ok(subject), Ok(instance)) = (
            parts[parts.len() - 2].parse::<u32>(),
            parts[parts.len() - 1].parse::<u32>(),
        ) {
            let label = parts[..parts.len() - 2].join("-");
            return Ok((label, subject, instance));
        }
    }
    if parts.len() >= 2 {
        if let Ok(instance) = parts[parts.len() - 1].parse::<u32>() {
            let dir = path
                .parent()
                .filter(|p| *p != root)
                .and_then(|p| p.file_name())
                .and_then(|s| s.to_str());
            if let Some(dir) = dir {
                let digits: String = dir
                    .chars()
                    .rev()
                    .take_while(char::is_ascii_digit)
                    .collect::<Vec<_>>()
                    .into_iter()
                    .rev()
                    .collect();
                if let Ok(subject) = digits.parse::<u32>() {
                    let label = parts[..parts.len() - 1].join("-");
                    return Ok((label, subject, instance));
                }
            }
        }
    }
    Err(DataError::Name {
        path: path.to_path_buf(),
    })
}

fn walk_files(root: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>, DataError> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| extensions.contains(&e))
            {
                files.push(path);
            }
        }
    }
    files.sort();
    Ok(files)
}

/// Load every delimited trajectory file under `root`.
pub fn load_rigid_dataset(
    root: &Path,
    format: &RigidFormat,
) -> Result<Vec<LabeledSample>, DataError> {
    let mut samples = Vec::new();
    for path in walk_files(root, &["txt", "tsd", "csv", "dat"])? {
        let (label, subject, instance) = sample_identity(root, &path)?;
        let payload = load_rigid_file(&path, format)?;
        samples.push(LabeledSample {
            id: format!("{label}-{subject}-{instance}"),
            label,
            subject,
            payload,
        });
    }
    if samples.is_empty() {
        return Err(DataError::EmptyDataset {
            path: root.to_path_buf(),
        });
    }
    Ok(samples)
}

/// Joints per frame of the skeleton text format.
pub const SKELETON_JOINTS: usize = 20;

/// Parse skeleton text: one joint per line as `x y z confidence`, twenty
/// lines per frame. The confidence column is read and discarded.
pub fn load_skeleton_file(
    path: &Path,
    joints_per_frame: usize,
) -> Result<SkeletonSequence<f64>, DataError> {
    let text = fs::read_to_string(path)?;
    let mut joints: Vec<Vector3<f64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(DataError::Shape {
                path: path.to_path_buf(),
                line: line_no,
                expected: 3,
                got: fields.len(),
            });
        }
        let x = parse_field(&fields, 0, path, line_no)?;
        let y = parse_field(&fields, 1, path, line_no)?;
        let z = parse_field(&fields, 2, path, line_no)?;
        joints.push(Vector3::new(x, y, z));
    }
    if joints.is_empty() || !joints.len().is_multiple_of(joints_per_frame) {
        return Err(DataError::FrameCountMismatch {
            path: path.to_path_buf(),
            lines: joints.len(),
            joints: joints_per_frame,
        });
    }
    let frames = joints
        .chunks(joints_per_frame)
        .map(|c| SkeletonFrame::new(c.to_vec()))
        .collect();
    SkeletonSequence::new(frames).map_err(|e| DataError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

/// Parse the `aNN_sNN_eNN` action/subject/instance convention.
pub fn parse_action_name(stem: &str) -> Option<(String, u32, u32)> {
    let parts: Vec<&str> = stem.split('_').collect();
    if parts.len() < 3 {
        return None;
    }
    let action = parts[0];
    let subject = parts[1].strip_prefix('s')?.parse::<u32>().ok()?;
    let instance = parts[2].strip_prefix('e')?.parse::<u32>().ok()?;
    if !action.starts_with('a') {
        return None;
    }
    Some((action.to_string(), subject, instance))
}

/// Read an exclusion list: one sample stem per line, `#` comments.
pub fn load_exclusions(path: &Path) -> Result<BTreeSet<String>, DataError> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Load every skeleton file under `root`, skipping stems on the exclusion
/// list.
pub fn load_skeleton_dataset(
    root: &Path,
    exclusions: &BTreeSet<String>,
) -> Result<Vec<LabeledSample>, DataError> {
    let mut samples = Vec::new();
    for path in walk_files(root, &["txt", "skeleton"])? {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        if exclusions.contains(&stem) {
            continue;
        }
        let Some((label, subject, instance)) = parse_action_name(&stem) else {
            return Err(DataError::Name { path });
        };
        let sequence = load_skeleton_file(&path, SKELETON_JOINTS)?;
        samples.push(LabeledSample {
            id: format!("{label}_s{subject:02}_e{instance:02}"),
            label,
            subject,
            payload: SamplePayload::Skeleton { sequence },
        });
    }
    if samples.is_empty() {
        return Err(DataError::EmptyDataset {
            path: root.to_path_buf(),
        });
    }
    Ok(samples)
}

/// Write a sample as JSON; numbers survive the round trip bit-exactly.
pub fn save_sample_json(path: &Path, sample: &LabeledSample) -> Result<(), DataError> {
    let json = serde_json::to_string(sample)?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_sample_json(path: &Path) -> Result<LabeledSample, DataError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Load every `.json` sample under `root`.
pub fn load_json_dataset(root: &Path) -> Result<Vec<LabeledSample>, DataError> {
    let mut samples = Vec::new();
    for path in walk_files(root, &["json"])? {
        if path.file_name().and_then(|s| s.to_str()) == Some("manifest.json") {
            continue;
        }
        samples.push(load_sample_json(&path)?);
    }
    if samples.is_empty() {
        return Err(DataError::EmptyDataset {
            path: root.to_path_buf(),
        });
    }
    Ok(samples)
}

/// Disjoint train/test subject sets covering the subject universe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: BTreeSet<u32>,
    pub test: BTreeSet<u32>,
}

/// Subject-level evaluation protocols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "kebab-case")]
pub enum Protocol {
    /// One split; `train` defaults to the odd-numbered subjects.
    CrossSubject { train: Option<Vec<u32>> },
    /// Every half/half subject split (252 for ten subjects).
    CrossValidationAllSplits,
    /// One split per subject, that subject testing.
    LeaveOneSubjectOut,
}

/// Expand a protocol over the observed subject set.
pub fn make_splits(
    subjects: &BTreeSet<u32>,
    protocol: &Protocol,
) -> Result<Vec<SplitPlan>, DataError> {
    match protocol {
        Protocol::CrossSubject { train } => {
            let train_set: BTreeSet<u32> = match train {
                Some(list) => {
                    let unknown: Vec<u32> = list
                        .iter()
                        .filter(|s| !subjects.contains(s))
                        .copied()
                        .collect();
                    if !unknown.is_empty() {
                        return Err(DataError::UnknownSubjects(unknown));
                    }
                    list.iter().copied().collect()
                }
                None => subjects.iter().copied().filter(|s| s % 2 == 1).collect(),
            };
            let test: BTreeSet<u32> = subjects.difference(&train_set).copied().collect();
            Ok(vec![SplitPlan {
                train: train_set,
                test,
            }])
        }
        Protocol::CrossValidationAllSplits => {
            let all: Vec<u32> = subjects.iter().copied().collect();
            let k = all.len() / 2;
            let mut plans = Vec::new();
            let mut picks = (0..k).collect::<Vec<usize>>();
            if k == 0 {
                return Ok(plans);
            }
            loop {
                let train: BTreeSet<u32> = picks.iter().map(|&i| all[i]).collect();
                let test: BTreeSet<u32> = subjects.difference(&train).copied().collect();
                plans.push(SplitPlan { train, test });

                // Next lexicographic combination.
                let mut i = k;
                loop {
                    if i == 0 {
                        return Ok(plans);
                    }
                    i -= 1;
                    if picks[i] != i + all.len() - k {
                        break;
                    }
                }
                picks[i] += 1;
                for j in i + 1..k {
                    picks[j] = picks[j - 1] + 1;
                }
            }
        }
        Protocol::LeaveOneSubjectOut => Ok(subjects
            .iter()
            .map(|&s| SplitPlan {
                train: subjects.iter().copied().filter(|&t| t != s).collect(),
                test: BTreeSet::from([s]),
            })
            .collect()),
    }
}

/// All subjects present in a sample set.
pub fn subject_universe(samples: &[LabeledSample]) -> BTreeSet<u32> {
    samples.iter().map(|s| s.subject).collect()
}
