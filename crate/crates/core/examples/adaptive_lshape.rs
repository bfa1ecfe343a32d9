//! Adaptive and uniform refinement on the L-shape with f = 1: the adaptive
//! loop recovers the optimal rate -1/2, uniform refinement only about -1/3.

use hypercircle::afem::{run, AfemConfig, Bisections, EstimatorKind, StoppingRule};
use hypercircle::harness::problem;
use hypercircle::Result;

fn main() -> Result<()> {
    let max_dofs = std::env::args().nth(1).map_or(20_000, |a| a.parse().expect("dof budget"));
    let p = problem("lshape_one")?;
    for (label, theta, bisections) in [("adaptive", 0.5, Bisections::Auto), ("uniform", 1.0, Bisections::Fixed(1))] {
        let config = AfemConfig {
            estimator: EstimatorKind::Delta,
            theta,
            bisections,
            stop: StoppingRule::MaxDofs(max_dofs),
            ..AfemConfig::default()
        };
        let r = run(&p, &config)?;
        println!("{label} (theta = {theta}, b = {}):", r.b);
        for rec in &r.records {
            println!("  level {:>2}  dofs {:>6}  eta_delta {:.4e}  marked {}", rec.level, rec.n_dofs, rec.estimator, rec.n_marked);
        }
        println!("  decay slope {:.3}", r.slope.unwrap_or(f64::NAN));
    }
    Ok(())
}
