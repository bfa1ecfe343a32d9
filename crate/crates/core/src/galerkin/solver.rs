use super::assembly::CsrMatrix;
use crate::error::{Error, Result};
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Systems up to this size are factorized; larger ones use Jacobi-PCG.
    pub direct_limit: usize,
    /// Relative residual target of the iterative solver.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            direct_limit: 200_000,
            tolerance: 1e-12,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMethod {
    Cholesky,
    ConjugateGradient { iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub unknowns: usize,
    /// `‖b − A x‖ / ‖b‖` of the returned solution.
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut r = vec![0.0; a.n];
    a.mul_vec(x, &mut r);
    let num = r.iter().zip(b).map(|(ri, bi)| (bi - ri) * (bi - ri)).sum::<f64>().sqrt();
    let den = norm(b);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    if a.n == 0 {
        let report = SolveReport {
            method: SolveMethod::Cholesky,
            unknowns: 0,
            residual: 0.0,
        };
        return Ok((Vec::new(), report));
    }
    if a.n <= opts.direct_limit {
        cholesky(a, b)
    } else {
        pcg(a, b, opts)
    }
}

fn cholesky(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    let mut triplets = Vec::with_capacity(a.nnz());
    for i in 0..a.n {
        for (j, v) in a.row(i) {
            triplets.push(Triplet::new(i, j, v));
        }
    }
    let fail = || Error::Solve {
        iterations: 0,
        residual: f64::INFINITY,
    };
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.n, a.n, &triplets).map_err(|_| fail())?;
    let llt = m.sp_cholesky(Side::Lower).map_err(|_| fail())?;
    let rhs = faer::Col::<f64>::from_fn(a.n, |i| b[i]);
    let sol = llt.solve(&rhs);
    let x: Vec<f64> = (0..a.n).map(|i| sol[i]).collect();
    let residual = relative_residual(a, &x, b);
    if !residual.is_finite() {
        return Err(Error::Solve { iterations: 0, residual });
    }
    Ok((
        x,
        SolveReport {
            method: SolveMethod::Cholesky,
            unknowns: a.n,
            residual,
        },
    ))
}

/// Conjugate gradients with diagonal preconditioning.
fn pcg(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.n;
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let done = |iterations, x: Vec<f64>| {
        let residual = relative_residual(a, &x, b);
        Ok((
            x,
            SolveReport {
                method: SolveMethod::ConjugateGradient { iterations },
                unknowns: n,
                residual,
            },
        ))
    };
    if bnorm == 0.0 {
        return done(0, x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=opts.max_iterations {
        a.mul_vec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Solve {
                iterations: it,
                residual: norm(&r) / bnorm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= opts.tolerance * bnorm {
            return done(it, x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solve {
        iterations: opts.max_iterations,
        residual: norm(&r) / bnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    #[test]
    fn direct_and_iterative_agree() {
        let a = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let (x1, r1) = solve_spd(&a, &b, &SolverOptions::default()).unwrap();
        let opts = SolverOptions {
            direct_limit: 0,
            ..SolverOptions::default()
        };
        let (x2, r2) = solve_spd(&a, &b, &opts).unwrap();
        assert_eq!(r1.method, SolveMethod::Cholesky);
        assert!(matches!(r2.method, SolveMethod::ConjugateGradient { .. }));
        assert!(r1.residual < 1e-13 && r2.residual < 1e-11);
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let a = laplacian_1d(200);
        let b = vec![1.0; 200];
        let opts = SolverOptions {
            direct_limit: 0,
            max_iterations: 3,
            ..SolverOptions::default()
        };
        match solve_spd(&a, &b, &opts) {
            Err(Error::Solve { iterations: 3, residual }) => assert!(residual > 1e-12),
            other => panic!("expected a solve error, got {other:?}"),
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = CsrMatrix::from_rows(vec![vec![(0, 1.0), (1, 2.0)], vec![(0, 2.0), (1, 1.0)]]);
        assert!(solve_spd(&a, &[1.0, 1.0], &SolverOptions::default()).is_err());
    }
}
