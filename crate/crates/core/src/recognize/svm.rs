//! Chi-square-kernel SVM trained by sequential minimal optimization, with
//! one-against-one multi-class voting.

use serde::{Deserialize, Serialize};

use super::RecognizeError;
use crate::{scalar, Real};

/// Guards zero-sum bins in the chi-square denominator.
pub const EPS_CHI: f64 = 1e-12;

/// `Σᵢ (xᵢ−yᵢ)²/(xᵢ+yᵢ+ε)` over nonnegative histogram entries.
pub fn chi_square_distance<T: Real>(x: &[T], y: &[T]) -> T {
    let eps = scalar::<T>(EPS_CHI);
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = *a - *b;
            d * d / (*a + *b + eps)
        })
        .sum()
}

/// `k(x, y) = exp(−γ·χ²(x, y))`; `k(x, x) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareKernel<T> {
    pub gamma: T,
}

impl<T: Real> ChiSquareKernel<T> {
    pub fn evaluate(&self, x: &[T], y: &[T]) -> T {
        (-self.gamma * chi_square_distance(x, y)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams<T> {
    /// Box constraint.
    pub c: T,
    /// KKT violation tolerance.
    pub tol: T,
    /// Kernel scale; `None` picks `1 / mean pairwise chi-square distance`
    /// over the training set.
    pub gamma: Option<T>,
    /// Cap on optimization sweeps per binary problem.
    pub max_passes: usize,
}

impl<T: Real> Default for SvmParams<T> {
    fn default() -> Self {
        Self {
            c: scalar(10.0),
            tol: scalar(1e-3),
            gamma: None,
            max_passes: 200,
        }
    }
}

/// One binary margin machine of the one-against-one ensemble. A positive
/// decision votes for `class_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairClassifier<T> {
    pub class_a: usize,
    pub class_b: usize,
    pub support_vectors: Vec<Vec<T>>,
    /// `αᵢ·yᵢ` per support vector.
    pub coefficients: Vec<T>,
    pub bias: T,
}

impl<T: Real> PairClassifier<T> {
    pub fn decision(&self, kernel: &ChiSquareKernel<T>, x: &[T]) -> T {
        let mut sum = self.bias;
        for (sv, coeff) in self.support_vectors.iter().zip(&self.coefficients) {
            sum += *coeff * kernel.evaluate(sv, x);
        }
        sum
    }
}

/// Trained multi-class model: sorted class list, kernel scale and one
/// binary classifier per unordered class pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel<T> {
    pub classes: Vec<String>,
    pub gamma: T,
    pub c: T,
    pub pairs: Vec<PairClassifier<T>>,
}

impl<T: Real> SvmModel<T> {
    /// Majority vote over pair decisions; ties break toward the smallest
    /// class index.
    pub fn predict_index(&self, x: &[T]) -> usize {
        let kernel = ChiSquareKernel { gamma: self.gamma };
        let mut votes = vec![0usize; self.classes.len()];
        for pair in &self.pairs {
            if pair.decision(&kernel, x) >= T::zero() {
                votes[pair.class_a] += 1;
            } else {
                votes[pair.class_b] += 1;
            }
        }
        let mut best = 0;
        for (i, v) in votes.iter().enumerate() {
            if *v > votes[best] {
                best = i;
            }
        }
        best
    }

    pub fn predict<'a>(&'a self, x: &[T]) -> &'a str {
        &self.classes[self.predict_index(x)]
    }
}

/// Train a one-against-one chi-square-kernel SVM on labeled histograms.
pub fn svm_train<T: Real>(
    histograms: &[Vec<T>],
    labels: &[String],
    params: &SvmParams<T>,
) -> Result<SvmModel<T>, RecognizeError> {
    assert_eq!(histograms.len(), labels.len());
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(RecognizeError::SingleClass);
    }

    let gamma = params.gamma.unwrap_or_else(|| default_gamma(histograms));
    let kernel = ChiSquareKernel { gamma };

    let mut pairs = Vec::new();
    for a in 0..classes.len() {
        for b in a + 1..classes.len() {
            let mut xs: Vec<&Vec<T>> = Vec::new();
            let mut ys: Vec<T> = Vec::new();
            for (h, l) in histograms.iter().zip(labels) {
                if *l == classes[a] {
                    xs.push(h);
                    ys.push(T::one());
                } else if *l == classes[b] {
                    xs.push(h);
                    ys.push(-T::one());
                }
            }
            let (alphas, bias) = smo(&xs, &ys, &kernel, params);
            let mut support_vectors = Vec::new();
            let mut coefficients = Vec::new();
            for ((alpha, x), y) in alphas.iter().zip(&xs).zip(&ys) {
                if *alpha > scalar(1e-12) {
                    support_vectors.push((*x).clone());
                    coefficients.push(*alpha * *y);
                }
            }
            pairs.push(PairClassifier {
                class_a: a,
                class_b: b,
                support_vectors,
                coefficients,
                bias,
            });
        }
    }

    Ok(SvmModel {
        classes,
        gamma,
        c: params.c,
        pairs,
    })
}

/// `1 / mean pairwise chi-square distance`, the scale at which the kernel
/// resolves typical histogram differences.
pub fn default_gamma<T: Real>(histograms: &[Vec<T>]) -> T {
    let n = histograms.len();
    let mut sum = T::zero();
    let mut count = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            sum += chi_square_distance(&histograms[i], &histograms[j]);
            count += 1;
        }
    }
    if count == 0 || sum <= T::zero() {
        return T::one();
    }
    T::from_usize(count).expect("count fits scalar") / sum
}

/// Sequential minimal optimization on one binary problem. Deterministic:
/// the first multiplier scans in index order, the second maximizes the
/// error gap with lowest-index tie-breaks. Converged when a full sweep
/// leaves every multiplier within the KKT tolerance.
fn smo<T: Real>(
    xs: &[&Vec<T>],
    ys: &[T],
    kernel: &ChiSquareKernel<T>,
    params: &SvmParams<T>,
) -> (Vec<T>, T) {
    let n = xs.len();
    let c = params.c;
    let tol = params.tol;
    let mut alphas = vec![T::zero(); n];
    let mut bias = T::zero();

    let mut k = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.evaluate(xs[i], xs[j]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }

    let decision = |alphas: &[T], bias: T, idx: usize| -> T {
        let mut sum = bias;
        for ((alpha, y), row) in alphas.iter().zip(ys).zip(&k) {
            if *alpha > T::zero() {
                sum += *alpha * *y * row[idx];
            }
        }
        sum
    };

    for _ in 0..params.max_passes {
        let mut changed = 0usize;
        for i in 0..n {
            let e_i = decision(&alphas, bias, i) - ys[i];
            let violates = (ys[i] * e_i < -tol && alphas[i] < c)
                || (ys[i] * e_i > tol && alphas[i] > T::zero());
            if !violates {
                continue;
            }

            // Second multiplier: largest error gap.
            let mut j_best = usize::MAX;
            let mut gap_best = T::neg_infinity();
            for (j, yj) in ys.iter().enumerate() {
                if j == i {
                    continue;
                }
                let gap = (e_i - (decision(&alphas, bias, j) - *yj)).abs();
                if gap > gap_best {
                    gap_best = gap;
                    j_best = j;
                }
            }
            if j_best == usize::MAX {
                continue;
            }
            let j = j_best;
            let e_j = decision(&alphas, bias, j) - ys[j];

            let (alpha_i_old, alpha_j_old) = (alphas[i], alphas[j]);
            let (low, high) = if ys[i] != ys[j] {
                (
                    T::zero().max(alpha_j_old - alpha_i_old),
                    c.min(c + alpha_j_old - alpha_i_old),
                )
            } else {
                (
                    T::zero().max(alpha_i_old + alpha_j_old - c),
                    c.min(alpha_i_old + alpha_j_old),
                )
            };
            if low >= high {
                continue;
            }
            let eta = scalar::<T>(2.0) * k[i][j] - k[i][i] - k[j][j];
            if eta >= T::zero() {
                continue;
            }

            let mut alpha_j = alpha_j_old - ys[j] * (e_i - e_j) / eta;
            alpha_j = alpha_j.max(low).min(high);
            if (alpha_j - alpha_j_old).abs() < scalar(1e-7) {
                continue;
            }
            let alpha_i = alpha_i_old + ys[i] * ys[j] * (alpha_j_old - alpha_j);
            alphas[i] = alpha_i;
            alphas[j] = alpha_j;

            let b1 = bias
                - e_i
                - ys[i] * (alpha_i - alpha_i_old) * k[i][i]
                - ys[j] * (alpha_j - alpha_j_old) * k[i][j];
            let b2 = bias
                - e_j
                - ys[i] * (alpha_i - alpha_i_old) * k[i][j]
                - ys[j] * (alpha_j - alpha_j_old) * k[j][j];
            bias = if alpha_i > T::zero() && alpha_i < c {
                b1
            } else if alpha_j > T::zero() && alpha_j < c {
                b2
            } else {
                (b1 + b2) * scalar(0.5)
            };
            changed += 1;
        }
        if changed == 0 {
            break;
        }
    }

    (alphas, bias)
}
