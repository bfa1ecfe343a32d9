//! Every estimator of one discrete solution: η^Δ, η^⋆, the residual
//! estimators and the oscillations, with efficiency indices.

use hypercircle::estimators::estimate;
use hypercircle::galerkin::{solve_poisson, FeSpace};
use hypercircle::harness::problem;
use hypercircle::Result;
use std::sync::Arc;

fn main() -> Result<()> {
    let p = problem("square_sine")?;
    let exact = p.exact.expect("square_sine has a closed-form solution");
    let mesh = p.mesh.refine_uniform()?.refine_uniform()?.refine_uniform()?;
    for k in 1..=2 {
        let space = FeSpace::new(Arc::new(mesh.clone()), k)?;
        let u_h = solve_poisson(&space, &p.f)?;
        let (report, _flux) = estimate(&u_h, &p.f, Some(&exact.grad))?;
        let t = report.totals;
        let err = t.energy_error.expect("exact gradient given");
        println!("k = {k}, {} dofs, |||u - u_h||| = {err:.4e}", space.n_dofs());
        for (name, eta) in [
            ("eta_delta", t.eta_delta),
            ("eta_star", t.eta_star),
            ("eta_star (single count)", t.eta_star_single),
            ("eta_res", t.eta_res),
            ("eta_res (patch)", t.eta_res_patch),
        ] {
            println!("  {name:<24} {eta:.4e}  index {:.3}", eta / err);
        }
        println!("  {:<24} {:.4e}\n  {:<24} {:.4e}", "osc", t.osc, "osc_star", t.osc_star);
    }
    Ok(())
}
