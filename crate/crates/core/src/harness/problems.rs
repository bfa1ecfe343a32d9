use crate::afem::{ExactSolution, Problem};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use std::f64::consts::PI;

/// Registered problem ids.
pub const PROBLEMS: [&str; 4] = ["square_sine", "square_poly", "lshape_one", "square_xy"];

fn sine_u(p: Point) -> f64 {
    (PI * p[0]).sin() * (PI * p[1]).sin()
}

fn sine_grad(p: Point) -> [f64; 2] {
    let (sx, cx) = (PI * p[0]).sin_cos();
    let (sy, cy) = (PI * p[1]).sin_cos();
    [PI * cx * sy, PI * sx * cy]
}

fn sine_f(p: Point) -> f64 {
    2.0 * PI * PI * sine_u(p)
}

fn poly_u(p: Point) -> f64 {
    p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1])
}

fn poly_grad(p: Point) -> [f64; 2] {
    [
        (1.0 - 2.0 * p[0]) * p[1] * (1.0 - p[1]),
        p[0] * (1.0 - p[0]) * (1.0 - 2.0 * p[1]),
    ]
}

fn poly_f(p: Point) -> f64 {
    2.0 * (p[0] * (1.0 - p[0]) + p[1] * (1.0 - p[1]))
}

/// Looks up a problem by id.
///
/// - `square_sine`: `u = sin(πx) sin(πy)` on the unit square.
/// - `square_poly`: `u = x(1−x) y(1−y)` on the unit square.
/// - `lshape_one`: `f = 1` on `(−1,1)² ∖ [0,1)×(−1,0)`, no closed-form solution.
/// - `square_xy`: `f = x + y` on the unit square, no closed-form solution.
pub fn problem(id: &str) -> Result<Problem> {
    let p = match id {
        "square_sine" => Problem {
            id: id.into(),
            mesh: Mesh::criss_cross_square(),
            f: sine_f,
            exact: Some(ExactSolution { u: sine_u, grad: sine_grad }),
        },
        "square_poly" => Problem {
            id: id.into(),
            mesh: Mesh::criss_cross_square(),
            f: poly_f,
            exact: Some(ExactSolution { u: poly_u, grad: poly_grad }),
        },
        "lshape_one" => Problem {
            id: id.into(),
            mesh: Mesh::l_shape(),
            f: |_| 1.0,
            exact: None,
        },
        "square_xy" => Problem {
            id: id.into(),
            mesh: Mesh::criss_cross_square(),
            f: |p| p[0] + p[1],
            exact: None,
        },
        _ => {
            return Err(Error::Usage(format!(
                "unknown problem {id:?}; registered problems: {}",
                PROBLEMS.join(", ")
            )))
        }
    };
    Ok(p)
}
