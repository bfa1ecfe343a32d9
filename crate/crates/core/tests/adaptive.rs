use hypercircle::afem::{
    check_hypotheses, consecutive_pairs, run, AfemConfig, Bisections, EstimatorKind, StoppingRule,
};
use hypercircle::harness::problem;

fn triangles_near(mesh: &hypercircle::Mesh, centre: [f64; 2], radius: f64) -> usize {
    (0..mesh.n_triangles())
        .filter(|&t| {
            let c = mesh.coords(t);
            let m = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0];
            (m[0] - centre[0]).hypot(m[1] - centre[1]) < radius
        })
        .count()
}

#[test]
fn lshape_refines_towards_the_reentrant_corner() {
    let p = problem("lshape_one").unwrap();
    for estimator in EstimatorKind::ALL {
        let config = AfemConfig { estimator, stop: StoppingRule::MaxLevels(11), ..AfemConfig::default() };
        let r = run(&p, &config).unwrap();
        let mesh = r.levels.last().unwrap().mesh();
        // a disc of radius 0.1 covers three quadrants at the re-entrant corner, one at (-1, 1)
        let corner = triangles_near(mesh, [0.0, 0.0], 0.1) as f64 / 3.0;
        let far = triangles_near(mesh, [-1.0, 1.0], 0.1).max(1) as f64;
        assert!(corner >= 4.0 * far, "{estimator}: density ratio {}", corner / far);
    }
}

#[test]
fn error_and_estimators_decrease_on_a_smooth_problem() {
    let p = problem("square_sine").unwrap();
    for k in 1..=2 {
        let config = AfemConfig { degree: k, stop: StoppingRule::MaxLevels(8), ..AfemConfig::default() };
        let r = run(&p, &config).unwrap();
        for w in r.records.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert!(b.n_dofs > a.n_dofs);
            // nested spaces: the Galerkin error never increases
            assert!(b.energy_error().unwrap() <= a.energy_error().unwrap() * (1.0 + 1e-12));
            assert!(b.totals.osc <= a.totals.osc * (1.0 + 1e-12));
        }
        for rec in &r.records {
            let err = rec.energy_error().unwrap();
            for (name, eta) in [("delta", rec.totals.eta_delta), ("star", rec.totals.eta_star), ("res", rec.totals.eta_res)] {
                let index = eta / err;
                assert!((0.9..=20.0).contains(&index), "k = {k}, level {}: {name} index {index}", rec.level);
            }
        }
    }
}

#[test]
fn galerkin_pythagoras_holds_between_levels() {
    let p = problem("square_sine").unwrap();
    let config = AfemConfig { degree: 2, estimator: EstimatorKind::Star, stop: StoppingRule::MaxLevels(6), ..AfemConfig::default() };
    let r = run(&p, &config).unwrap();
    let d = check_hypotheses(&r, &p, &consecutive_pairs(r.levels.len())).unwrap();
    for row in &d.rows {
        // orthogonality holds for the quadrature load; its error in f = 2π² sin sin is the only defect
        assert!(row.pythagoras_defect.unwrap().abs() < 1e-4, "{row:?}");
        assert!(row.h1.unwrap() > 0.0 && row.h2.unwrap() > 0.0);
    }
}

#[test]
fn uniform_refinement_marks_everything() {
    let p = problem("square_xy").unwrap();
    let config = AfemConfig {
        theta: 1.0,
        bisections: Bisections::Fixed(2),
        stop: StoppingRule::MaxLevels(4),
        ..AfemConfig::default()
    };
    let r = run(&p, &config).unwrap();
    for w in r.records.windows(2) {
        assert_eq!(w[0].n_marked, w[0].n_elements);
        assert_eq!(w[1].n_elements, 4 * w[0].n_elements);
    }
}

#[test]
fn max_dofs_stops_at_the_first_level_past_the_budget() {
    let p = problem("lshape_one").unwrap();
    let config = AfemConfig { degree: 2, stop: StoppingRule::MaxDofs(2_000), ..AfemConfig::default() };
    let r = run(&p, &config).unwrap();
    let dofs: Vec<usize> = r.records.iter().map(|r| r.n_dofs).collect();
    assert!(*dofs.last().unwrap() >= 2_000);
    assert!(dofs[..dofs.len() - 1].iter().all(|&n| n < 2_000));
    assert!(r.slope.unwrap() < 0.0);
}
