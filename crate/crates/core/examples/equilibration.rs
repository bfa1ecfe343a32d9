//! Patchwise equilibrated flux q = ∇u_h + q^Δ and the guaranteed bound it gives.

use hypercircle::equilibration::{prager_synge_terms, reconstruct};
use hypercircle::galerkin::{energy_error, solve_poisson, FeSpace};
use hypercircle::harness::problem;
use hypercircle::Result;
use std::sync::Arc;

fn main() -> Result<()> {
    let p = problem("square_poly")?;
    let exact = p.exact.expect("square_poly has a closed-form solution");
    let mesh = p.mesh.refine_uniform()?.refine_uniform()?;
    for k in 1..=3 {
        let space = FeSpace::new(Arc::new(mesh.clone()), k)?;
        let u_h = solve_poisson(&space, &p.f)?;
        let flux = reconstruct(&u_h, &p.f)?;
        let res = flux.residuals.expect("reconstruct verifies the flux");
        // |||u - v|||² + ||∇u - q||² = ||∇v - q||² once div q = -Π^k f equals -f, here for k >= 2
        let (err, dual, bound) = prager_synge_terms(&exact.grad, &u_h, &flux.q);
        println!(
            "k = {k}: div residual {:.1e}, jump residual {:.1e}, error {:.4e} <= bound {:.4e}, identity defect {:.1e}",
            res.div,
            res.jump,
            energy_error(&u_h, &exact.grad),
            bound.sqrt(),
            (err + dual - bound).abs() / bound
        );
    }
    Ok(())
}
