//! P^k Galerkin solutions of -Δu = f on uniform meshes and their energy errors.

use hypercircle::galerkin::{energy_error, solve_poisson, FeSpace};
use hypercircle::harness::problem;
use hypercircle::Result;
use std::sync::Arc;

fn main() -> Result<()> {
    let p = problem("square_sine")?;
    let exact = p.exact.expect("square_sine has a closed-form solution");
    for k in 1..=3 {
        let mut mesh = p.mesh.clone();
        let mut previous: Option<(usize, f64)> = None;
        for _ in 0..5 {
            mesh = mesh.refine_uniform()?.refine_uniform()?;
            let space = FeSpace::new(Arc::new(mesh.clone()), k)?;
            let u_h = solve_poisson(&space, &p.f)?;
            let err = energy_error(&u_h, &exact.grad);
            let rate = previous.map(|(n, e)| (err / e).ln() / (space.n_dofs() as f64 / n as f64).ln());
            println!(
                "k = {k}  dofs = {:>6}  |||u - u_h||| = {err:.3e}  rate = {}",
                space.n_dofs(),
                rate.map_or("-".into(), |r| format!("{r:.3}"))
            );
            previous = Some((space.n_dofs(), err));
        }
    }
    Ok(())
}
