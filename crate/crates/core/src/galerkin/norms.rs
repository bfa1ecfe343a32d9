use super::field::ScalarField;
use super::lagrange::{tabulate, ElementGeometry};
use crate::error::{Error, Result};
use crate::mesh::Point;

/// Squared `L²(T)` norm of `∇u − g` per triangle, on a rule of degree `2k + extra`.
fn gradient_defect(u: &ScalarField, g: &dyn Fn(usize, Point) -> [f64; 2], extra: usize) -> Vec<f64> {
    let space = u.space();
    let k = space.degree();
    let tab = tabulate(k, 2 * k + extra);
    let mut grads = Vec::new();
    (0..space.mesh().n_triangles())
        .map(|t| {
            let geo = ElementGeometry::new(space.mesh(), t);
            u.gradients_at(t, &geo, tab, &mut grads);
            let mut s = 0.0;
            for ((&lam, w), gu) in tab.rule.points.iter().zip(&tab.rule.weights).zip(&grads) {
                let ge = g(t, geo.point(lam));
                let (dx, dy) = (gu[0] - ge[0], gu[1] - ge[1]);
                s += w * (dx * dx + dy * dy);
            }
            s * geo.area
        })
        .collect()
}

/// `|||u||| = ‖∇u‖_{L²(Ω)}`.
pub fn energy_norm(u: &ScalarField) -> f64 {
    gradient_defect(u, &|_, _| [0.0, 0.0], 0).iter().sum::<f64>().sqrt()
}

/// Squared energy error `‖∇u − ∇u_h‖²_{L²(T)}` per triangle.
pub fn energy_error_squared(u_h: &ScalarField, grad_exact: &dyn Fn(Point) -> [f64; 2]) -> Vec<f64> {
    gradient_defect(u_h, &|_, p| grad_exact(p), 6)
}

/// `|||u − u_h|||` for a known exact gradient.
pub fn energy_error(u_h: &ScalarField, grad_exact: &dyn Fn(Point) -> [f64; 2]) -> f64 {
    energy_error_squared(u_h, grad_exact).iter().sum::<f64>().sqrt()
}

/// `|||u − v|||` for two fields on the same space.
pub fn energy_distance(u: &ScalarField, v: &ScalarField) -> Result<f64> {
    if !std::sync::Arc::ptr_eq(u.space(), v.space()) {
        return Err(Error::Argument("fields live on different spaces".into()));
    }
    let diff: Vec<f64> = u.coeffs().iter().zip(v.coeffs()).map(|(a, b)| a - b).collect();
    let d = ScalarField::new(u.space().clone(), diff)?;
    Ok(energy_norm(&d))
}
