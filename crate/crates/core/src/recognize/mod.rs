//! Recognition back-ends: dynamic time warping with 1-NN, and bag-of-words
//! encoding with a chi-square-kernel SVM.

pub mod bow;
pub mod svm;

use thiserror::Error;

use crate::rrv::{Metric, RrvSequence};
use crate::skeleton::{multi_distance, MultiRrvSequence, PartId, SkeletonDescriptor};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecognizeError {
    #[error("cannot warp an empty sequence")]
    EmptySequence,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("need at least {needed} patches for {needed} clusters, got {got}")]
    TooFewPatches { needed: usize, got: usize },
    #[error("patch dimension {got} does not match dictionary dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training data contains a single class")]
    SingleClass,
    #[error("sequences have mismatched part structure")]
    StructureMismatch,
}

/// Alignment cost and, when requested, the warping path.
#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult<T> {
    pub cost: T,
    /// Index pairs, monotone nondecreasing in both coordinates with steps
    /// from `{(1,0),(0,1),(1,1)}`.
    pub path: Option<Vec<(usize, usize)>>,
}

/// Accumulated-cost recurrence over an `n × m` cost function:
/// `D(p,q) = d(p,q) + min{D(p−1,q), D(p,q−1), D(p−1,q−1)}`, unconstrained,
/// with the total in the bottom-right entry.
pub fn dtw_cost_with<T, F>(n: usize, m: usize, mut cost: F) -> T
where
    T: Real,
    F: FnMut(usize, usize) -> T,
{
    let inf = T::infinity();
    let mut prev = vec![inf; m + 1];
    let mut row = vec![inf; m + 1];
    prev[0] = T::zero();
    for i in 1..=n {
        row[0] = inf;
        for j in 1..=m {
            let best = prev[j].min(row[j - 1]).min(prev[j - 1]);
            // First cell: min(inf, inf, D(0,0)=0).
            row[j] = cost(i - 1, j - 1) + best;
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[m]
}

/// Full-matrix variant that also backtracks one optimal path. Ties prefer
/// the diagonal, then the vertical step.
pub fn dtw_with_path_fn<T, F>(n: usize, m: usize, mut cost: F) -> DtwResult<T>
where
    T: Real,
    F: FnMut(usize, usize) -> T,
{
    let inf = T::infinity();
    let mut d = vec![vec![inf; m + 1]; n + 1];
    d[0][0] = T::zero();
    for i in 1..=n {
        for j in 1..=m {
            let best = d[i - 1][j].min(d[i][j - 1]).min(d[i - 1][j - 1]);
            d[i][j] = cost(i - 1, j - 1) + best;
        }
    }
    let mut path = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        path.push((i - 1, j - 1));
        if i == 1 && j == 1 {
            break;
        }
        let diag = d[i - 1][j - 1];
        let up = d[i - 1][j];
        let left = d[i][j - 1];
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    path.reverse();
    DtwResult {
        cost: d[n][m],
        path: Some(path),
    }
}

/// Warp two descriptor sequences under the chosen metric.
pub fn dtw<T: Real>(
    a: &RrvSequence<T>,
    b: &RrvSequence<T>,
    metric: Metric,
) -> Result<DtwResult<T>, RecognizeError> {
    if a.is_empty() || b.is_empty() {
        return Err(RecognizeError::EmptySequence);
    }
    let cost = dtw_cost_with(a.len(), b.len(), |i, j| {
        metric.distance(&a.descriptors[i], &b.descriptors[j])
    });
    Ok(DtwResult { cost, path: None })
}

/// As [`dtw`] but with the optimal path.
pub fn dtw_with_path<T: Real>(
    a: &RrvSequence<T>,
    b: &RrvSequence<T>,
    metric: Metric,
) -> Result<DtwResult<T>, RecognizeError> {
    if a.is_empty() || b.is_empty() {
        return Err(RecognizeError::EmptySequence);
    }
    Ok(dtw_with_path_fn(a.len(), b.len(), |i, j| {
        metric.distance(&a.descriptors[i], &b.descriptors[j])
    }))
}

/// Warp stacked descriptor streams; the per-frame cost sums over aligned
/// streams.
pub fn dtw_multi<T: Real>(
    a: &MultiRrvSequence<T>,
    b: &MultiRrvSequence<T>,
    metric: Metric,
) -> Result<DtwResult<T>, RecognizeError> {
    if a.is_empty() || b.is_empty() {
        return Err(RecognizeError::EmptySequence);
    }
    if a.stream_count() != b.stream_count() {
        return Err(RecognizeError::StructureMismatch);
    }
    let cost = dtw_cost_with(a.len(), b.len(), |i, j| {
        multi_distance(a.frame(i), b.frame(j), metric).expect("stream counts validated")
    });
    Ok(DtwResult { cost, path: None })
}

/// Skeleton warping cost: each part is warped separately and the costs
/// summed; the same is done against the left/right-swapped opponent, and
/// the smaller total wins, so symmetric executions of an action compare
/// cheaply.
pub fn part_dtw_cost<T: Real>(
    p: &SkeletonDescriptor<T>,
    q: &SkeletonDescriptor<T>,
    metric: Metric,
) -> Result<T, RecognizeError> {
    let total = |q_mapped: &dyn Fn(PartId) -> PartId| -> Result<T, RecognizeError> {
        let mut sum = T::zero();
        for part in PartId::ALL {
            sum += dtw_multi(p.part(part), q.part(q_mapped(part)), metric)?.cost;
        }
        Ok(sum)
    };
    let identical = total(&|part| part)?;
    let swapped = total(&|part| part.mirrored())?;
    Ok(identical.min(swapped))
}

/// Label of the nearest training sample under `cost`; ties break toward
/// the lowest training index.
pub fn knn_classify_1<'a, S, L, T, F>(
    test: &S,
    train: &'a [(S, L)],
    mut cost: F,
) -> Result<&'a L, RecognizeError>
where
    T: Real,
    F: FnMut(&S, &S) -> Result<T, RecognizeError>,
{
    if train.is_empty() {
        return Err(RecognizeError::EmptyTrainingSet);
    }
    let mut best: Option<(T, &L)> = None;
    for (sample, label) in train {
        let c = cost(test, sample)?;
        match &best {
            Some((b, _)) if c >= *b => {}
            _ => best = Some((c, label)),
        }
    }
    Ok(best.expect("nonempty training set").1)
}
