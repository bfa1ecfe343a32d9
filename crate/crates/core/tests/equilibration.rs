use hypercircle::equilibration::{assemble, eta_delta, eta_star, local_equilibrate, reconstruct, Equilibrator};
use hypercircle::galerkin::{solve_poisson, FeSpace, ScalarField};
use hypercircle::mesh::Point;
use hypercircle::Mesh;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn solved(mesh: Mesh, k: usize, f: &dyn Fn(Point) -> f64) -> ScalarField {
    solve_poisson(&FeSpace::new(Arc::new(mesh), k).unwrap(), f).unwrap()
}

/// Minimizer of `cᵀ M c` subject to `B c = r` from the full saddle-point
/// matrix `[M Bᵀ; B 0]`, solved by SVD (dependent rows make it singular).
fn kkt_oracle(m: &DMatrix<f64>, b: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
    let (n, p) = (m.nrows(), b.nrows());
    let mut k = DMatrix::<f64>::zeros(n + p, n + p);
    k.view_mut((0, 0), (n, n)).copy_from(m);
    k.view_mut((n, 0), (p, n)).copy_from(b);
    k.view_mut((0, n), (n, p)).copy_from(&b.transpose());
    let mut rhs = DVector::<f64>::zeros(n + p);
    rhs.rows_mut(n, p).copy_from(r);
    let sol = k.svd(true, true).solve(&rhs, 1e-11).unwrap();
    sol.rows(0, n).into_owned()
}

fn null_space(b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.ncols();
    // the SVD of Bᵀ B exposes all right singular vectors
    let svd = (b.transpose() * b).svd(false, true);
    let v_t = svd.v_t.unwrap();
    let tol = 1e-12 * svd.singular_values.max();
    let cols: Vec<_> = (0..n)
        .filter(|&i| svd.singular_values[i] <= tol)
        .map(|i| v_t.row(i).transpose())
        .collect();
    DMatrix::from_columns(&cols)
}

#[test]
fn patch_norm_matches_dense_saddle_point_oracle() {
    let f = |_: Point| 1.0;
    let u = solved(Mesh::criss_cross_square(), 1, &f);
    let eq = Equilibrator::new(&u, &f);
    for v in 0..u.space().mesh().n_vertices() {
        let prob = eq.problem(v).unwrap();
        let c = kkt_oracle(&prob.mass, &prob.constraints, &prob.rhs);
        let oracle = c.dot(&(&prob.mass * &c)).sqrt();
        let flux = local_equilibrate(&u, &f, v).unwrap();
        assert!((flux.norm - oracle).abs() < 1e-9, "vertex {v}: {} vs {oracle}", flux.norm);
        let ours = DVector::from_column_slice(&flux.coeffs);
        let energy = ours.dot(&(&prob.mass * &ours)).sqrt();
        assert!((energy - flux.norm).abs() < 1e-12);
        assert!((&prob.constraints * &ours - &prob.rhs).norm() < 1e-10 * (1.0 + prob.rhs.norm()));
    }
}

#[test]
fn patch_flux_is_minimal_in_its_constraint_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mesh = Mesh::l_shape().refine_uniform().unwrap().refine_uniform().unwrap();
    let f = |p: Point| 1.0 + p[0] * p[1];
    let u = solved(mesh, 2, &f);
    let eq = Equilibrator::new(&u, &f);
    let nv = u.space().mesh().n_vertices();
    for _ in 0..10 {
        let v = rng.random_range(0..nv);
        let prob = eq.problem(v).unwrap();
        let flux = eq.solve(v).unwrap();
        let c = DVector::from_column_slice(&flux.coeffs);
        let null = null_space(&prob.constraints);
        assert!(null.ncols() > 0);
        for _ in 0..5 {
            let y = DVector::from_fn(null.ncols(), |_, _| rng.random_range(-1.0..1.0));
            let other = &c + 1e-2 * &null * y;
            assert!((&prob.constraints * &other - &prob.rhs).norm() < 1e-9);
            let norm = other.dot(&(&prob.mass * &other)).sqrt();
            assert!(norm >= flux.norm - 1e-10, "vertex {v}");
        }
    }
}

#[test]
fn patch_sum_equals_assembled_correction() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = |p: Point| (3.0 * p[0]).sin() + p[1];
    let u = solved(Mesh::l_shape().refine_uniform().unwrap(), 2, &f);
    let flux = reconstruct(&u, &f).unwrap();
    assert!(flux.residuals.unwrap().ok(), "{:?}", flux.residuals);
    let mesh = u.space().mesh();
    for _ in 0..20 {
        let t = rng.random_range(0..mesh.n_triangles());
        let a: f64 = rng.random_range(0.0..1.0);
        let b: f64 = rng.random_range(0.0..1.0 - a);
        let p = mesh.point_at(t, [a, b, 1.0 - a - b]);
        let mut sum = [0.0; 2];
        for patch in &flux.patches {
            let single = assemble(mesh, 2, std::slice::from_ref(patch));
            let v = single.value(t, p);
            sum[0] += v[0];
            sum[1] += v[1];
        }
        let whole = flux.q_delta.value(t, p);
        assert!((sum[0] - whole[0]).abs() < 1e-12 && (sum[1] - whole[1]).abs() < 1e-12);
    }
}

#[test]
fn interior_patch_traces_vanish() {
    let f = |p: Point| p[0] * p[0] - p[1];
    let u = solved(Mesh::uniform_square(3), 3, &f);
    let eq = Equilibrator::new(&u, &f);
    let mesh = u.space().mesh();
    for v in (0..mesh.n_vertices()).filter(|&v| !mesh.vertex(v).on_boundary) {
        assert!(eq.solve(v).unwrap().trace_residual < 1e-12);
    }
}

#[test]
fn delta_total_is_bounded_by_star_total() {
    for mesh in [Mesh::criss_cross_square(), Mesh::l_shape(), Mesh::union_jack_square(2)] {
        let f = |p: Point| 1.0 + p[0];
        let u = solved(mesh, 1, &f);
        let flux = reconstruct(&u, &f).unwrap();
        let (_, delta) = eta_delta(&flux);
        assert!(delta <= 3f64.sqrt() * eta_star(&flux.patches).total + 1e-14);
    }
}

#[test]
fn non_galerkin_function_is_rejected() {
    let f = |_: Point| 1.0;
    let space = FeSpace::new(Arc::new(Mesh::uniform_square(2)), 1).unwrap();
    let u = ScalarField::interpolate(space, &|p| p[0] * (1.0 - p[0]));
    let mesh = u.space().mesh().clone();
    let interior = (0..mesh.n_vertices()).find(|&v| !mesh.vertex(v).on_boundary).unwrap();
    assert!(matches!(
        local_equilibrate(&u, &f, interior),
        Err(hypercircle::Error::Consistency { .. })
    ));
}
