//! Bag-of-words encoding of descriptor sequences.
//!
//! Two dictionaries are learned offline by k-means — one over 4-D
//! rotational patches, one over 3-D translational patches. A sequence is
//! encoded by voting each patch into its nearest word and normalizing the
//! per-dictionary histograms to frequencies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RecognizeError;
use crate::skeleton::MultiRrvSequence;
use crate::{scalar, Real};

/// Which descriptor half a dictionary covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DictionaryKind {
    /// 4-D unit-quaternion patches.
    Rotational,
    /// 3-D square-root-velocity patches.
    Translational,
}

impl DictionaryKind {
    pub fn dim(&self) -> usize {
        match self {
            DictionaryKind::Rotational => 4,
            DictionaryKind::Translational => 3,
        }
    }
}

/// Learned code book: `k` centroids of fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary<T> {
    pub kind: DictionaryKind,
    pub words: Vec<Vec<T>>,
}

impl<T: Real> Dictionary<T> {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmeansParams<T> {
    pub k: usize,
    pub seed: u64,
    /// Stop when the largest centroid displacement falls below this.
    pub shift_tol: T,
    pub max_iter: usize,
}

impl<T: Real> KmeansParams<T> {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            shift_tol: scalar(1e-6),
            max_iter: 100,
        }
    }
}

fn squared_distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y) * (*x - *y))
        .sum()
}

/// Index of the nearest centroid by Euclidean distance; ties break toward
/// the lowest index.
pub fn nearest_word<T: Real>(dict: &Dictionary<T>, patch: &[T]) -> usize {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (i, w) in dict.words.iter().enumerate() {
        let d = squared_distance(w, patch);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Lloyd's k-means with k-means++ seeding. Deterministic under a fixed
/// seed; empty clusters are refilled with the point farthest from its
/// current centroid.
pub fn learn_dictionary<T: Real>(
    patches: &[Vec<T>],
    kind: DictionaryKind,
    params: &KmeansParams<T>,
) -> Result<Dictionary<T>, RecognizeError> {
    let k = params.k;
    if patches.len() < k {
        return Err(RecognizeError::TooFewPatches {
            needed: k,
            got: patches.len(),
        });
    }
    let dim = kind.dim();
    for p in patches {
        if p.len() != dim {
            return Err(RecognizeError::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids: Vec<Vec<T>> = Vec::with_capacity(k);
    centroids.push(patches[rng.gen_range(0..patches.len())].clone());
    let mut dist2: Vec<T> = patches
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: T = dist2.iter().copied().sum();
        let next = if total <= T::zero() {
            // All remaining mass on already-chosen points: take the first
            // patch not yet selected.
            patches
                .iter()
                .position(|p| centroids.iter().all(|c| c != p))
                .unwrap_or(0)
        } else {
            let mut target = scalar::<T>(rng.gen::<f64>()) * total;
            let mut chosen = patches.len() - 1;
            for (i, d) in dist2.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= *d;
            }
            chosen
        };
        centroids.push(patches[next].clone());
        let newest = centroids.last().expect("just pushed").clone();
        for (d, p) in dist2.iter_mut().zip(patches) {
            let nd = squared_distance(p, &newest);
            if nd < *d {
                *d = nd;
            }
        }
    }

    let mut assignment = vec![0usize; patches.len()];
    for _ in 0..params.max_iter {
        let probe = Dictionary {
            kind,
            words: centroids.clone(),
        };
        for (a, p) in assignment.iter_mut().zip(patches) {
            *a = nearest_word(&probe, p);
        }

        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (a, p) in assignment.iter().zip(patches) {
            counts[*a] += 1;
            for (s, x) in sums[*a].iter_mut().zip(p) {
                *s += *x;
            }
        }
        // Refill empty clusters with the worst-represented point.
        for c in 0..k {
            if counts[c] == 0 {
                let mut far = 0;
                let mut far_d = T::neg_infinity();
                for (i, p) in patches.iter().enumerate() {
                    let d = squared_distance(p, &centroids[assignment[i]]);
                    if d > far_d && counts[assignment[i]] > 1 {
                        far_d = d;
                        far = i;
                    }
                }
                counts[assignment[far]] -= 1;
                for (s, x) in sums[assignment[far]].iter_mut().zip(&patches[far]) {
                    *s -= *x;
                }
                assignment[far] = c;
                counts[c] = 1;
                sums[c] = patches[far].clone();
            }
        }

        let mut shift = T::zero();
        for c in 0..k {
            let inv = T::one() / T::from_usize(counts[c]).expect("count fits scalar");
            let new: Vec<T> = sums[c].iter().map(|s| *s * inv).collect();
            let moved = squared_distance(&new, &centroids[c]).sqrt();
            if moved > shift {
                shift = moved;
            }
            centroids[c] = new;
        }
        if shift < params.shift_tol {
            break;
        }
    }

    Ok(Dictionary {
        kind,
        words: centroids,
    })
}

/// The rotational/translational dictionary pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowDictionaries<T> {
    pub rotational: Dictionary<T>,
    pub translational: Dictionary<T>,
}

/// Concatenated per-block word frequencies; every block sums to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowHistogram<T> {
    pub values: Vec<T>,
    /// Lengths of the normalized blocks, in order.
    pub blocks: Vec<usize>,
}

/// Rotational and translational patches of one descriptor group.
pub fn collect_patches<T: Real>(part: &MultiRrvSequence<T>) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let mut rotational = Vec::new();
    let mut translational = Vec::new();
    for frame in part.frames() {
        for d in frame {
            rotational.push(vec![d.rotation.w, d.rotation.x, d.rotation.y, d.rotation.z]);
            translational.push(vec![d.velocity.x, d.velocity.y, d.velocity.z]);
        }
    }
    (rotational, translational)
}

/// Encode descriptor groups: per group, one rotational and one
/// translational frequency histogram, all concatenated in order.
pub fn encode_bow<T: Real>(
    parts: &[&MultiRrvSequence<T>],
    dicts: &BowDictionaries<T>,
) -> Result<BowHistogram<T>, RecognizeError> {
    let mut values = Vec::new();
    let mut blocks = Vec::new();
    for part in parts {
        let (rot, trans) = collect_patches(part);
        for (dict, patches) in [
            (&dicts.rotational, &rot),
            (&dicts.translational, &trans),
        ] {
            let mut hist = vec![T::zero(); dict.len()];
            for p in patches {
                if p.len() != dict.dim() {
                    return Err(RecognizeError::DimensionMismatch {
                        expected: dict.dim(),
                        got: p.len(),
                    });
                }
                hist[nearest_word(dict, p)] += T::one();
            }
            let total: T = hist.iter().copied().sum();
            if total > T::zero() {
                for h in hist.iter_mut() {
                    *h /= total;
                }
            }
            blocks.push(hist.len());
            values.extend(hist);
        }
    }
    Ok(BowHistogram { values, blocks })
}
