//! 3×3 symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Small, allocation-free and fully deterministic, which is what the
//! descriptor normalization needs: the left singular basis of a 3×N matrix
//! `A` is the eigenbasis of `A·Aᵀ`.

use crate::geom::Vector3;
use crate::{scalar, Real};

/// Eigenpairs of a symmetric 3×3 matrix, eigenvalues sorted descending.
/// Eigenvectors are orthonormal; each is determined only up to sign.
#[derive(Debug, Clone, Copy)]
pub struct SymEigen3<T> {
    pub values: [T; 3],
    pub vectors: [Vector3<T>; 3],
}

/// Decompose a symmetric matrix given by its rows. Only the upper triangle
/// is read.
pub fn sym_eigen3<T: Real>(m: &[[T; 3]; 3]) -> SymEigen3<T> {
    let mut a = *m;
    let mut v = [[T::zero(); 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }

    // Cyclic sweeps; quadratic convergence makes a fixed cap ample for 3×3.
    for _ in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= (diag + off) * scalar(1e-30) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (scalar::<T>(2.0) * apq);
            let t = if theta >= T::zero() {
                T::one() / (theta + (T::one() + theta * theta).sqrt())
            } else {
                -T::one() / (-theta + (T::one() + theta * theta).sqrt())
            };
            let c = T::one() / (T::one() + t * t).sqrt();
            let s = t * c;

            let app = a[p][p];
            let aqq = a[q][q];
            a[p][p] = app - t * apq;
            a[q][q] = aqq + t * apq;
            a[p][q] = T::zero();
            a[q][p] = T::zero();
            let r = 3 - p - q;
            let arp = a[r][p];
            let arq = a[r][q];
            a[r][p] = c * arp - s * arq;
            a[p][r] = a[r][p];
            a[r][q] = s * arp + c * arq;
            a[q][r] = a[r][q];

            for row in v.iter_mut() {
                let vip = row[p];
                let viq = row[q];
                row[p] = c * vip - s * viq;
                row[q] = s * vip + c * viq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    // Descending by eigenvalue; stable for ties.
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).expect("finite eigenvalues"));

    let values = [a[order[0]][order[0]], a[order[1]][order[1]], a[order[2]][order[2]]];
    let vectors = [
        Vector3::new(v[0][order[0]], v[1][order[0]], v[2][order[0]]),
        Vector3::new(v[0][order[1]], v[1][order[1]], v[2][order[1]]),
        Vector3::new(v[0][order[2]], v[1][order[2]], v[2][order[2]]),
    ];
    SymEigen3 { values, vectors }
}
