use nalgebra::{DMatrix, DVector};

/// Householder QR with column pivoting, `A P = Q R`, with the full square `Q`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// Column `i` of `A P` is column `perm[i]` of `A`.
    pub perm: Vec<usize>,
}

pub fn pivoted_qr(a: DMatrix<f64>) -> PivotedQr {
    let m = a.nrows();
    let (r, perm, reflectors) = householder(a);
    // Q = H_0 H_1 ⋯, accumulated from the right
    let mut q = DMatrix::<f64>::identity(m, m);
    for (j, v) in reflectors.iter().enumerate().rev() {
        for c in 0..m {
            let s: f64 = 2.0 * v.iter().enumerate().map(|(i, vi)| vi * q[(j + i, c)]).sum::<f64>();
            for (i, vi) in v.iter().enumerate() {
                q[(j + i, c)] -= s * vi;
            }
        }
    }
    PivotedQr { q, r, perm }
}

/// Minimum-norm solution of the (possibly inconsistent) system `B x = b`
/// with `B` of full row rank up to `deficiency` dependent rows.
///
/// Works on the QR factorization of `Bᵀ`. Returns `x`, the residual of the
/// dropped rows, and the smallest retained pivot relative to the largest.
#[derive(Debug, Clone)]
pub struct MinNorm {
    pub x: DVector<f64>,
    /// Orthonormal basis of the null space of the retained rows.
    pub null: DMatrix<f64>,
    pub residual: f64,
    pub min_pivot: f64,
}

pub fn min_norm_solve(b_mat: &DMatrix<f64>, rhs: &DVector<f64>, deficiency: usize) -> MinNorm {
    let (m, n) = b_mat.shape();
    let qr = pivoted_qr(b_mat.transpose());
    let rank = m.saturating_sub(deficiency).min(n);
    let (w, residual, min_pivot) = triangular_part(&qr.r, &qr.perm, rhs, rank);
    MinNorm {
        x: qr.q.columns(0, rank) * w,
        null: qr.q.columns(rank, n - rank).into_owned(),
        residual,
        min_pivot,
    }
}

/// Forward substitution with the leading `rank` columns of `Rᵀ`; returns the
/// solution, the residual of the remaining rows and the relative pivot.
fn triangular_part(r: &DMatrix<f64>, perm: &[usize], rhs: &DVector<f64>, rank: usize) -> (DVector<f64>, f64, f64) {
    let m = perm.len();
    let pr: Vec<f64> = perm.iter().map(|&i| rhs[i]).collect();
    // Rᵀ is lower triangular in its leading rank × rank block
    let mut w = DVector::<f64>::zeros(rank);
    for i in 0..rank {
        let s: f64 = (0..i).map(|l| r[(l, i)] * w[l]).sum();
        w[i] = (pr[i] - s) / r[(i, i)];
    }
    let mut residual = 0.0;
    for i in rank..m {
        let s: f64 = (0..rank).map(|l| r[(l, i)] * w[l]).sum();
        residual += (s - pr[i]) * (s - pr[i]);
    }
    let min_pivot = if rank == 0 {
        1.0
    } else {
        (0..rank).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min) / r[(0, 0)].abs()
    };
    (w, residual.sqrt(), min_pivot)
}

/// Like [`min_norm_solve`] without the null space; `Q` is applied through
/// its Householder reflectors instead of being formed.
pub fn min_norm_particular(b_mat: &DMatrix<f64>, rhs: &DVector<f64>, deficiency: usize) -> MinNorm {
    let (m, n) = b_mat.shape();
    let (r, perm, reflectors) = householder(b_mat.transpose());
    let rank = m.saturating_sub(deficiency).min(n);
    let (w, residual, min_pivot) = triangular_part(&r, &perm, rhs, rank);
    let mut x = DVector::<f64>::zeros(n);
    x.rows_mut(0, rank).copy_from(&w);
    for (j, v) in reflectors.iter().enumerate().rev() {
        let s: f64 = 2.0 * v.iter().enumerate().map(|(i, vi)| vi * x[j + i]).sum::<f64>();
        for (i, vi) in v.iter().enumerate() {
            x[j + i] -= s * vi;
        }
    }
    MinNorm {
        x,
        null: DMatrix::zeros(n, 0),
        residual,
        min_pivot,
    }
}

/// Householder triangularization with column pivoting: `R`, the column
/// permutation and the unit reflector vectors (vector `j` acts on rows `j..`).
fn householder(a: DMatrix<f64>) -> (DMatrix<f64>, Vec<usize>, Vec<Vec<f64>>) {
    let (m, n) = a.shape();
    let mut r = a.as_slice().to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors = Vec::new();
    for j in 0..m.min(n) {
        let mut best = j;
        let mut best_norm = -1.0;
        for c in j..n {
            let s: f64 = r[c * m + j..(c + 1) * m].iter().map(|x| x * x).sum();
            if s > best_norm {
                best = c;
                best_norm = s;
            }
        }
        if best != j {
            for i in 0..m {
                r.swap(j * m + i, best * m + i);
            }
            perm.swap(j, best);
        }
        let norm = best_norm.sqrt();
        if norm == 0.0 {
            break;
        }
        let alpha = if r[j * m + j] > 0.0 { -norm } else { norm };
        let mut v = r[j * m + j..(j + 1) * m].to_vec();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vn == 0.0 {
            reflectors.push(vec![0.0; m - j]);
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vn);
        for c in j..n {
            let col = &mut r[c * m + j..(c + 1) * m];
            let s: f64 = 2.0 * v.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>();
            col.iter_mut().zip(&v).for_each(|(x, vi)| *x -= s * vi);
        }
        for x in &mut r[j * m + j + 1..(j + 1) * m] {
            *x = 0.0;
        }
        reflectors.push(v);
    }
    (DMatrix::from_vec(m, n, r), perm, reflectors)
}
