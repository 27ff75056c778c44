//! End-to-end evaluation harness: configuration, the
//! preprocess→describe→classify pipeline, split execution and the results
//! bundle. The CLI is a thin wrapper over this module, which keeps full
//! runs reproducible from a single resolved config value.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::synth::{
    add_noise, default_rigid_classes, default_skeleton_classes, derive_seed, gen_rigid_dataset,
    gen_skeleton_dataset, NoiseSpec, SkeletonActionSpec, TrajectorySpec,
};
use crate::data::{
    load_exclusions, load_json_dataset, load_rigid_dataset, load_skeleton_dataset, make_splits,
    subject_universe, DataError, LabeledSample, Protocol, RigidFormat, SamplePayload, SplitPlan,
};
use crate::io::{save_json, BowModel, IoError};
use crate::preprocess::{
    kalman_smooth, normalize_scale, stationary_steps, stationary_trim_range, PreprocessError,
    SmootherParams, Trajectory6D,
};
use crate::recognize::bow::{encode_bow, learn_dictionary, BowDictionaries, DictionaryKind, KmeansParams};
use crate::recognize::svm::{svm_train, SvmParams};
use crate::recognize::{dtw_cost_with, dtw_multi, part_dtw_cost, RecognizeError};
use crate::rrv::{compute_rrv, Metric, RrvError, RrvOptions};
use crate::skeleton::{
    multi_distance, skeleton_descriptor, MultiRrvSequence, PartId, SkeletonDescriptor,
    SkeletonError, SkeletonOptions, SkeletonSequence,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("sample {id}: {source}")]
    Sample {
        id: String,
        #[source]
        source: Box<EvalError>,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Descriptor(#[from] RrvError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Recognize(#[from] RecognizeError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("dataset mixes payload kinds; run one kind at a time")]
    MixedPayloads,
    #[error("split {split} has an empty test set")]
    EmptyTestSplit { split: usize },
    #[error("split {split} has an empty training set")]
    EmptyTrainSplit { split: usize },
    #[error("model expects {expected} descriptor groups per sample, got {got}")]
    PartsMismatch { expected: usize, got: usize },
}

fn with_sample(id: &str, e: EvalError) -> EvalError {
    EvalError::Sample {
        id: id.to_string(),
        source: Box::new(e),
    }
}

/// Where samples come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    /// Delimited 6-DOF trajectory text files under `path`.
    RigidText,
    /// 20-joint skeleton text files under `path`.
    SkeletonText,
    /// JSON samples under `path`.
    Json,
    /// Generated in-process from `synthetic`.
    #[default]
    Synthetic,
}

/// Synthetic dataset description, shared by the generator command and
/// in-process generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    /// `rigid` or `skeleton`.
    pub payload: SynthPayload,
    /// Explicit class families; defaults when absent.
    pub rigid_classes: Option<Vec<(String, TrajectorySpec)>>,
    pub skeleton_classes: Option<Vec<(String, SkeletonActionSpec)>>,
    /// Keep only the first n default classes.
    pub class_count: Option<usize>,
    pub subjects: u32,
    pub samples_per_subject: u32,
    pub seed: u64,
    /// Corrupt every sample at this signal-to-noise ratio.
    pub noise_snr_db: Option<f64>,
    /// Emit additional noisy copies at each ratio (generator command).
    pub noise_sweep: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthPayload {
    #[default]
    Rigid,
    Skeleton,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            payload: SynthPayload::Rigid,
            rigid_classes: None,
            skeleton_classes: None,
            class_count: None,
            subjects: 5,
            samples_per_subject: 3,
            seed: 7,
            noise_snr_db: None,
            noise_sweep: None,
        }
    }
}

impl SyntheticSpec {
    pub fn resolved_rigid_classes(&self) -> Vec<(String, TrajectorySpec)> {
        let mut classes = self
            .rigid_classes
            .clone()
            .unwrap_or_else(default_rigid_classes);
        if let Some(n) = self.class_count {
            classes.truncate(n);
        }
        classes
    }

    pub fn resolved_skeleton_classes(&self) -> Vec<(String, SkeletonActionSpec)> {
        let mut classes = self
            .skeleton_classes
            .clone()
            .unwrap_or_else(default_skeleton_classes);
        if let Some(n) = self.class_count {
            classes.truncate(n);
        }
        classes
    }

    /// Generate the clean dataset (plus per-sample noise when configured).
    pub fn generate(&self) -> Vec<LabeledSample> {
        let mut samples = match self.payload {
            SynthPayload::Rigid => gen_rigid_dataset(
                &self.resolved_rigid_classes(),
                self.subjects,
                self.samples_per_subject,
                self.seed,
            ),
            SynthPayload::Skeleton => gen_skeleton_dataset(
                &self.resolved_skeleton_classes(),
                self.subjects,
                self.samples_per_subject,
                self.seed,
            ),
        };
        if let Some(snr) = self.noise_snr_db {
            samples = samples
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    add_noise(
                        s,
                        &NoiseSpec {
                            snr_db: snr,
                            seed: derive_seed(self.seed ^ 0xA5A5_5A5A, 0, 0, i as u32),
                        },
                    )
                })
                .collect();
        }
        samples
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub path: Option<PathBuf>,
    pub rigid_format: RigidFormat,
    /// Exclusion-list file for skeleton datasets.
    pub exclusions: Option<PathBuf>,
    pub synthetic: SyntheticSpec,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            kind: DatasetKind::Synthetic,
            path: None,
            rigid_format: RigidFormat::default(),
            exclusions: None,
            synthetic: SyntheticSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub smooth: bool,
    pub process_noise: f64,
    pub measurement_noise: f64,
    pub trim_stationary: bool,
    pub speed_eps: f64,
    /// Arc-length normalization of rigid trajectories. Skeleton joints are
    /// left in their native scale.
    pub normalize_scale: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            smooth: true,
            process_noise: 1e-3,
            measurement_noise: 1e-2,
            trim_stationary: true,
            speed_eps: 1e-4,
            normalize_scale: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescriptorConfig {
    /// Rigid path: skip the SVD rotational normalization.
    pub skip_svd_normalization: bool,
    pub metric: Metric,
    pub skeleton: SkeletonOptions,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            skip_svd_normalization: false,
            metric: Metric::Rrv,
            skeleton: SkeletonOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Dtw,
    Bow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecognizerConfig {
    pub backend: Backend,
    /// Rotational dictionary size.
    pub k_r: usize,
    /// Translational dictionary size.
    pub k_t: usize,
    pub kmeans_seed: u64,
    pub svm_c: f64,
    pub svm_tol: f64,
    /// Kernel scale; data-driven when absent.
    pub svm_gamma: Option<f64>,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Dtw,
            k_r: 120,
            k_t: 130,
            kmeans_seed: 42,
            svm_c: 10.0,
            svm_tol: 1e-3,
            svm_gamma: None,
        }
    }
}

/// Fully resolved run description; serialized verbatim into the bundle
/// metadata so a run reproduces from its own output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub preprocess: PreprocessConfig,
    pub descriptor: DescriptorConfig,
    pub recognizer: RecognizerConfig,
    pub protocol: Protocol,
    /// Worker threads for test classification; 0 picks the hardware count.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            preprocess: PreprocessConfig::default(),
            descriptor: DescriptorConfig::default(),
            recognizer: RecognizerConfig::default(),
            protocol: Protocol::CrossSubject { train: None },
            threads: 1,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|e| EvalError::Data(DataError::Io(e)))?;
        let config: RunConfig =
            serde_json::from_str(&text).map_err(|e| EvalError::Data(DataError::Json(e)))?;
        Ok(config)
    }
}

/// Load (or generate) the samples a config names.
pub fn load_dataset(config: &DatasetConfig) -> Result<Vec<LabeledSample>, EvalError> {
    let need_path = || {
        config.path.clone().ok_or_else(|| {
            EvalError::Data(DataError::EmptyDataset {
                path: PathBuf::from("<unset dataset path>"),
            })
        })
    };
    let samples = match config.kind {
        DatasetKind::RigidText => load_rigid_dataset(&need_path()?, &config.rigid_format)?,
        DatasetKind::SkeletonText => {
            let exclusions = match &config.exclusions {
                Some(path) => load_exclusions(path)?,
                None => BTreeSet::new(),
            };
            load_skeleton_dataset(&need_path()?, &exclusions)?
        }
        DatasetKind::Json => load_json_dataset(&need_path()?)?,
        DatasetKind::Synthetic => config.synthetic.generate(),
    };
    Ok(samples)
}

/// Per-sample descriptor, shaped by payload kind.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleDescriptor {
    Rigid(MultiRrvSequence<f64>),
    Pair {
        left: MultiRrvSequence<f64>,
        right: MultiRrvSequence<f64>,
    },
    Skeleton(SkeletonDescriptor<f64>),
}

impl SampleDescriptor {
    /// Descriptor groups for bag-of-words encoding: one per rigid body or
    /// skeleton part.
    pub fn parts(&self) -> Vec<&MultiRrvSequence<f64>> {
        match self {
            SampleDescriptor::Rigid(m) => vec![m],
            SampleDescriptor::Pair { left, right } => vec![left, right],
            SampleDescriptor::Skeleton(d) => PartId::ALL.iter().map(|p| d.part(*p)).collect(),
        }
    }

    /// Warping cost against another sample of the same shape. Two-body
    /// samples share one time axis and warp jointly; skeletons warp per
    /// part with the symmetric-swap branch.
    pub fn cost_to(&self, other: &Self, metric: Metric) -> Result<f64, RecognizeError> {
        match (self, other) {
            (SampleDescriptor::Rigid(a), SampleDescriptor::Rigid(b)) => {
                Ok(dtw_multi(a, b, metric)?.cost)
            }
            (
                SampleDescriptor::Pair { left: al, right: ar },
                SampleDescriptor::Pair { left: bl, right: br },
            ) => {
                if al.is_empty() || bl.is_empty() {
                    return Err(RecognizeError::EmptySequence);
                }
                if al.stream_count() != bl.stream_count()
                    || ar.stream_count() != br.stream_count()
                {
                    return Err(RecognizeError::StructureMismatch);
                }
                Ok(dtw_cost_with(al.len(), bl.len(), |i, j| {
                    multi_distance(al.frame(i), bl.frame(j), metric).expect("validated")
                        + multi_distance(ar.frame(i), br.frame(j), metric).expect("validated")
                }))
            }
            (SampleDescriptor::Skeleton(a), SampleDescriptor::Skeleton(b)) => {
                part_dtw_cost(a, b, metric)
            }
            _ => Err(RecognizeError::StructureMismatch),
        }
    }
}

fn prep_rigid(
    traj: &Trajectory6D<f64>,
    cfg: &PreprocessConfig,
) -> Result<Trajectory6D<f64>, EvalError> {
    let mut traj = traj.clone();
    if cfg.trim_stationary {
        let range = stationary_trim_range(&stationary_steps(&traj, cfg.speed_eps))?;
        traj = Trajectory6D::new(
            traj.positions()[range.clone()].to_vec(),
            traj.orientations()[range].to_vec(),
        )?;
    }
    if cfg.smooth {
        let smoothed = kalman_smooth(
            traj.positions(),
            &SmootherParams {
                process_noise: cfg.process_noise,
                measurement_noise: cfg.measurement_noise,
            },
        )?;
        traj.set_positions(smoothed)?;
    }
    if cfg.normalize_scale {
        // Pure-rotation recordings have no arc length to normalize.
        match normalize_scale(traj.positions()) {
            Ok(p) => traj.set_positions(p)?,
            Err(PreprocessError::DegenerateTrajectory) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(traj)
}

/// Trim a two-body recording jointly so both trajectories stay aligned:
/// a step is stationary only when both bodies are at rest.
fn prep_pair(
    left: &Trajectory6D<f64>,
    right: &Trajectory6D<f64>,
    cfg: &PreprocessConfig,
) -> Result<(Trajectory6D<f64>, Trajectory6D<f64>), EvalError> {
    let (mut left, mut right) = (left.clone(), right.clone());
    if cfg.trim_stationary && left.len() == right.len() {
        let l = stationary_steps(&left, cfg.speed_eps);
        let r = stationary_steps(&right, cfg.speed_eps);
        let both: Vec<bool> = l.iter().zip(&r).map(|(a, b)| *a && *b).collect();
        let range = stationary_trim_range(&both)?;
        left = Trajectory6D::new(
            left.positions()[range.clone()].to_vec(),
            left.orientations()[range.clone()].to_vec(),
        )?;
        right = Trajectory6D::new(
            right.positions()[range.clone()].to_vec(),
            right.orientations()[range].to_vec(),
        )?;
    }
    let no_trim = PreprocessConfig {
        trim_stationary: false,
        ..*cfg
    };
    Ok((prep_rigid(&left, &no_trim)?, prep_rigid(&right, &no_trim)?))
}

fn prep_skeleton(
    seq: &SkeletonSequence<f64>,
    cfg: &PreprocessConfig,
) -> Result<SkeletonSequence<f64>, EvalError> {
    let mut frames = seq.frames.clone();
    if cfg.trim_stationary && frames.len() > 1 {
        let stationary: Vec<bool> = (0..frames.len() - 1)
            .map(|t| {
                frames[t]
                    .joints
                    .iter()
                    .zip(&frames[t + 1].joints)
                    .all(|(a, b)| (*b - *a).norm() < cfg.speed_eps)
            })
            .collect();
        let range = stationary_trim_range(&stationary)?;
        frames = frames[range].to_vec();
    }
    if cfg.smooth {
        let params = SmootherParams {
            process_noise: cfg.process_noise,
            measurement_noise: cfg.measurement_noise,
        };
        let joints = frames.first().map_or(0, |f| f.joints.len());
        let n = frames.len();
        for j in 0..joints {
            let track: Vec<_> = frames.iter().map(|f| f.joints[j]).collect();
            let smoothed = kalman_smooth(&track, &params)?;
            for t in 0..n {
                frames[t].joints[j] = smoothed[t];
            }
        }
    }
    Ok(SkeletonSequence::new(frames)?)
}

/// Preprocess one sample and compute its descriptor.
pub fn describe_sample(
    sample: &LabeledSample,
    config: &RunConfig,
) -> Result<SampleDescriptor, EvalError> {
    let run = || -> Result<SampleDescriptor, EvalError> {
        let opts = RrvOptions {
            skip_svd_normalization: config.descriptor.skip_svd_normalization,
        };
        match &sample.payload {
            SamplePayload::Rigid { trajectory } => {
                let traj = prep_rigid(trajectory, &config.preprocess)?;
                let seq = compute_rrv(&traj, &opts)?;
                Ok(SampleDescriptor::Rigid(MultiRrvSequence::from_streams(
                    vec![seq],
                )?))
            }
            SamplePayload::RigidPair { left, right } => {
                let (l, r) = prep_pair(left, right, &config.preprocess)?;
                let left = MultiRrvSequence::from_streams(vec![compute_rrv(&l, &opts)?])?;
                let right = MultiRrvSequence::from_streams(vec![compute_rrv(&r, &opts)?])?;
                Ok(SampleDescriptor::Pair { left, right })
            }
            SamplePayload::Skeleton { sequence } => {
                let seq = prep_skeleton(sequence, &config.preprocess)?;
                Ok(SampleDescriptor::Skeleton(skeleton_descriptor(
                    &seq,
                    &config.descriptor.skeleton,
                )?))
            }
        }
    };
    run().map_err(|e| with_sample(&sample.id, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub split: usize,
    pub id: String,
    pub subject: u32,
    pub label: String,
    pub predicted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub split: usize,
    pub accuracy: f64,
    pub train_subjects: Vec<u32>,
    pub test_subjects: Vec<u32>,
    pub test_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub splits: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub per_split: Vec<SplitSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub classified_samples: usize,
    pub mean_classify_ms_per_sample: f64,
}

/// Everything one evaluation run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub config: RunConfig,
    pub summary: Summary,
    pub labels: Vec<String>,
    pub confusion: Vec<Vec<u32>>,
    pub predictions: Vec<PredictionRow>,
    pub timing: Timing,
}

/// Sample index, predicted label, classification seconds.
type Classified = (usize, String, f64);

fn classify_dtw(
    descriptors: &[SampleDescriptor],
    samples: &[LabeledSample],
    train_idx: &[usize],
    test_idx: &[usize],
    metric: Metric,
    threads: usize,
) -> Result<Vec<Classified>, EvalError> {
    let workers = threads.max(1).min(test_idx.len().max(1));
    let chunk_size = test_idx.len().div_ceil(workers);
    let chunks: Vec<&[usize]> = test_idx.chunks(chunk_size.max(1)).collect();

    let classify_one = |ti: usize| -> Result<Classified, EvalError> {
        let started = Instant::now();
        let mut best: Option<(f64, usize)> = None;
        for &tr in train_idx {
            let cost = descriptors[ti]
                .cost_to(&descriptors[tr], metric)
                .map_err(|e| with_sample(&samples[ti].id, e.into()))?;
            if best.is_none_or(|(b, _)| cost < b) {
                best = Some((cost, tr));
            }
        }
        let (_, tr) = best.expect("nonempty training set");
        let elapsed = started.elapsed().as_secs_f64();
        Ok((ti, samples[tr].label.clone(), elapsed))
    };

    let results: Vec<Result<Vec<Classified>, EvalError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| {
                    scope.spawn(move || {
                        chunk
                            .iter()
                            .map(|&ti| classify_one(ti))
                            .collect::<Result<Vec<_>, _>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });

    let mut out = Vec::with_capacity(test_idx.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

fn bow_layout_parts(descriptors: &[SampleDescriptor]) -> Result<usize, EvalError> {
    let mut parts = None;
    for d in descriptors {
        let p = d.parts().len();
        match parts {
            None => parts = Some(p),
            Some(q) if q != p => return Err(EvalError::MixedPayloads),
            _ => {}
        }
    }
    Ok(parts.unwrap_or(1))
}

/// Learn the dictionary pair and SVM over the given training descriptors.
pub fn train_bow_on(
    descriptors: &[SampleDescriptor],
    labels: &[String],
    recognizer: &RecognizerConfig,
) -> Result<BowModel, EvalError> {
    let parts = bow_layout_parts(descriptors)?;
    let mut rot_patches = Vec::new();
    let mut trans_patches = Vec::new();
    for d in descriptors {
        for part in d.parts() {
            let (r, t) = crate::recognize::bow::collect_patches(part);
            rot_patches.extend(r);
            trans_patches.extend(t);
        }
    }
    let rotational = learn_dictionary(
        &rot_patches,
        DictionaryKind::Rotational,
        &KmeansParams::new(recognizer.k_r, recognizer.kmeans_seed),
    )?;
    let translational = learn_dictionary(
        &trans_patches,
        DictionaryKind::Translational,
        &KmeansParams::new(recognizer.k_t, recognizer.kmeans_seed.wrapping_add(1)),
    )?;
    let dicts = BowDictionaries {
        rotational,
        translational,
    };

    let histograms: Vec<Vec<f64>> = descriptors
        .iter()
        .map(|d| encode_bow(&d.parts(), &dicts).map(|h| h.values))
        .collect::<Result<_, _>>()?;
    let svm = svm_train(
        &histograms,
        labels,
        &SvmParams {
            c: recognizer.svm_c,
            tol: recognizer.svm_tol,
            gamma: recognizer.svm_gamma,
            max_passes: 200,
        },
    )?;
    Ok(BowModel {
        dicts,
        svm,
        parts: parts as u32,
    })
}

/// Encode and classify one descriptor with a trained model.
pub fn classify_with_model(
    model: &BowModel,
    descriptor: &SampleDescriptor,
) -> Result<String, EvalError> {
    let parts = descriptor.parts();
    if parts.len() != model.parts as usize {
        return Err(EvalError::PartsMismatch {
            expected: model.parts as usize,
            got: parts.len(),
        });
    }
    let hist = encode_bow(&parts, &model.dicts)?;
    Ok(model.svm.predict(&hist.values).to_string())
}

fn classify_bow(
    descriptors: &[SampleDescriptor],
    samples: &[LabeledSample],
    train_idx: &[usize],
    test_idx: &[usize],
    recognizer: &RecognizerConfig,
) -> Result<Vec<Classified>, EvalError> {
    let train_desc: Vec<SampleDescriptor> =
        train_idx.iter().map(|&i| descriptors[i].clone()).collect();
    let train_labels: Vec<String> = train_idx.iter().map(|&i| samples[i].label.clone()).collect();
    let model = train_bow_on(&train_desc, &train_labels, recognizer)?;

    let mut out = Vec::with_capacity(test_idx.len());
    for &ti in test_idx {
        let started = Instant::now();
        let predicted = classify_with_model(&model, &descriptors[ti])
            .map_err(|e| with_sample(&samples[ti].id, e))?;
        out.push((ti, predicted, started.elapsed().as_secs_f64()));
    }
    Ok(out)
}

/// Run the full evaluation a config describes.
pub fn evaluate(config: &RunConfig) -> Result<EvalReport, EvalError> {
    let samples = load_dataset(&config.dataset)?;
    let descriptors: Vec<SampleDescriptor> = samples
        .iter()
        .map(|s| describe_sample(s, config))
        .collect::<Result<_, _>>()?;

    let subjects = subject_universe(&samples);
    let splits = make_splits(&subjects, &config.protocol)?;

    let mut labels: Vec<String> = samples.iter().map(|s| s.label.clone()).collect();
    labels.sort();
    labels.dedup();
    let label_index = |l: &str| labels.iter().position(|x| x == l).expect("known label");

    let mut per_split = Vec::new();
    let mut predictions = Vec::new();
    let mut confusion = vec![vec![0u32; labels.len()]; labels.len()];
    let mut total_time = 0.0f64;
    let mut total_classified = 0usize;

    for (si, plan) in splits.iter().enumerate() {
        let train_idx: Vec<usize> = (0..samples.len())
            .filter(|&i| plan.train.contains(&samples[i].subject))
            .collect();
        let test_idx: Vec<usize> = (0..samples.len())
            .filter(|&i| plan.test.contains(&samples[i].subject))
            .collect();
        if test_idx.is_empty() {
            return Err(EvalError::EmptyTestSplit { split: si });
        }
        if train_idx.is_empty() {
            return Err(EvalError::EmptyTrainSplit { split: si });
        }

        let results = match config.recognizer.backend {
            Backend::Dtw => classify_dtw(
                &descriptors,
                &samples,
                &train_idx,
                &test_idx,
                config.descriptor.metric,
                config.threads,
            )?,
            Backend::Bow => {
                classify_bow(&descriptors, &samples, &train_idx, &test_idx, &config.recognizer)?
            }
        };

        let mut correct = 0usize;
        for (ti, predicted, seconds) in &results {
            let truth = &samples[*ti].label;
            if truth == predicted {
                correct += 1;
            }
            confusion[label_index(truth)][label_index(predicted)] += 1;
            total_time += seconds;
            total_classified += 1;
            predictions.push(PredictionRow {
                split: si,
                id: samples[*ti].id.clone(),
                subject: samples[*ti].subject,
                label: truth.clone(),
                predicted: predicted.clone(),
            });
        }
        per_split.push(SplitSummary {
            split: si,
            accuracy: correct as f64 / test_idx.len() as f64,
            train_subjects: plan.train.iter().copied().collect(),
            test_subjects: plan.test.iter().copied().collect(),
            test_samples: test_idx.len(),
        });
    }

    predictions.sort_by(|a, b| (a.split, &a.id).cmp(&(b.split, &b.id)));
    let accuracies: Vec<f64> = per_split.iter().map(|s| s.accuracy).collect();
    let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    let std = if accuracies.len() > 1 {
        (accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
            / (accuracies.len() - 1) as f64)
            .sqrt()
    } else {
        0.0
    };

    Ok(EvalReport {
        config: config.clone(),
        summary: Summary {
            splits: per_split.len(),
            mean_accuracy: mean,
            std_accuracy: std,
            per_split,
        },
        labels,
        confusion,
        predictions,
        timing: Timing {
            classified_samples: total_classified,
            mean_classify_ms_per_sample: if total_classified == 0 {
                0.0
            } else {
                total_time / total_classified as f64 * 1e3
            },
        },
    })
}

impl EvalReport {
    /// Write the results bundle: `summary.json`, `predictions.csv`,
    /// `confusion.csv` and `metadata.json` are byte-deterministic for a
    /// given config; wall-clock numbers go to `timing.json` only.
    pub fn write_bundle(&self, dir: &Path) -> Result<(), EvalError> {
        fs::create_dir_all(dir).map_err(|e| EvalError::Data(DataError::Io(e)))?;
        save_json(&dir.join("summary.json"), &self.summary)?;
        save_json(&dir.join("metadata.json"), &self.config)?;
        save_json(&dir.join("timing.json"), &self.timing)?;

        let mut pred = String::from("split,id,subject,label,predicted\n");
        for row in &self.predictions {
            pred.push_str(&format!(
                "{},{},{},{},{}\n",
                row.split, row.id, row.subject, row.label, row.predicted
            ));
        }
        fs::write(dir.join("predictions.csv"), pred)
            .map_err(|e| EvalError::Data(DataError::Io(e)))?;

        let mut conf = String::from("label");
        for l in &self.labels {
            conf.push(',');
            conf.push_str(l);
        }
        conf.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            conf.push_str(l);
            for v in &self.confusion[i] {
                conf.push_str(&format!(",{v}"));
            }
            conf.push('\n');
        }
        fs::write(dir.join("confusion.csv"), conf)
            .map_err(|e| EvalError::Data(DataError::Io(e)))?;
        Ok(())
    }
}

/// Train a bag-of-words model on the training side of the protocol's first
/// split.
pub fn train_bow(config: &RunConfig) -> Result<(BowModel, Vec<SplitPlan>), EvalError> {
    let samples = load_dataset(&config.dataset)?;
    let subjects = subject_universe(&samples);
    let splits = make_splits(&subjects, &config.protocol)?;
    let plan = splits.first().ok_or(EvalError::EmptyTrainSplit { split: 0 })?;

    let mut train_desc = Vec::new();
    let mut train_labels = Vec::new();
    for s in &samples {
        if plan.train.contains(&s.subject) {
            train_desc.push(describe_sample(s, config)?);
            train_labels.push(s.label.clone());
        }
    }
    if train_desc.is_empty() {
        return Err(EvalError::EmptyTrainSplit { split: 0 });
    }
    let model = train_bow_on(&train_desc, &train_labels, &config.recognizer)?;
    Ok((model, splits))
}
