//! Conforming `P^k` Lagrange discretization of `−Δu = f` with homogeneous
//! Dirichlet data.
//!
//! Every integral involving the source `f` (load vector, projections,
//! equilibration data, oscillations) uses the same data rule of degree
//! `2k + 4`, so discrete identities such as Galerkin orthogonality hold to
//! rounding error even for non-polynomial `f`.

mod assembly;
mod field;
pub mod lagrange;
mod norms;
mod projection;
mod solver;
mod space;

pub use assembly::{assemble_load, assemble_stiffness, element_stiffness, reduce, CsrMatrix, ReducedSystem};
pub use field::{hat_function, ScalarField};
pub use norms::{energy_distance, energy_error, energy_error_squared, energy_norm};
pub use projection::{l2_project, l2_project_with, monomial_values, monomials, n_monomials, LocalPolynomial};
pub use solver::{solve_spd, SolveMethod, SolveReport, SolverOptions};
pub use space::FeSpace;

use crate::error::Result;
use crate::mesh::Point;
use std::sync::Arc;

/// Degree of the quadrature rule used for every integral of the source.
pub fn data_rule_degree(k: usize) -> usize {
    2 * k + 4
}

/// Solves `(∇u_h, ∇v) = (f, v)` for all `v ∈ V_h`.
pub fn solve_poisson_with(
    space: &Arc<FeSpace>,
    f: &dyn Fn(Point) -> f64,
    opts: &SolverOptions,
) -> Result<(ScalarField, SolveReport)> {
    let a = assemble_stiffness(space);
    let b = assemble_load(space, f);
    let sys = reduce(space, &a, &b);
    let (x, report) = solve_spd(&sys.matrix, &sys.rhs, opts)?;
    let mut coeffs = vec![0.0; space.n_dofs()];
    for (&d, v) in sys.free.iter().zip(x) {
        coeffs[d] = v;
    }
    Ok((ScalarField::new(space.clone(), coeffs)?, report))
}

pub fn solve_poisson(space: &Arc<FeSpace>, f: &dyn Fn(Point) -> f64) -> Result<ScalarField> {
    solve_poisson_with(space, f, &SolverOptions::default()).map(|(u, _)| u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;

    #[test]
    fn zero_load_gives_zero() {
        let s = FeSpace::new(Arc::new(Mesh::l_shape()), 2).unwrap();
        let u = solve_poisson(&s, &|_| 0.0).unwrap();
        assert!(u.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn criss_cross_center_value() {
        // hand assembly: the center hat has stiffness 4 and load 1/3 (four
        // triangles of area 1/4, each contributing area/3)
        let m = Arc::new(Mesh::criss_cross_square());
        let s = FeSpace::new(m.clone(), 1).unwrap();
        let u = solve_poisson(&s, &|_| 1.0).unwrap();
        let c = (0..m.n_vertices()).find(|&v| !m.vertex(v).on_boundary).unwrap();
        assert!((u.coeffs()[c] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn quartic_reproduces_polynomial_solution() {
        let s = FeSpace::new(Arc::new(Mesh::criss_cross_square()), 4).unwrap();
        let exact = |p: Point| p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]);
        let f = |p: Point| 2.0 * (p[0] * (1.0 - p[0]) + p[1] * (1.0 - p[1]));
        let u = solve_poisson(&s, &f).unwrap();
        for (d, p) in s.dof_points().into_iter().enumerate() {
            assert!((u.coeffs()[d] - exact(p)).abs() < 1e-10);
        }
    }
}
