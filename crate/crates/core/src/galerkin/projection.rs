use super::lagrange::ElementGeometry;
use crate::mesh::{Mesh, Point};
use crate::quadrature::QuadratureRule;
use nalgebra::{DMatrix, DVector};

/// Exponents `(a, b)` of the monomials `ξ^a η^b` of total degree `≤ m`,
/// ordered by total degree, then by the power of `η`.
pub fn monomials(m: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::with_capacity(n_monomials(m));
    for d in 0..=m {
        for b in 0..=d {
            out.push([d - b, b]);
        }
    }
    out
}

pub fn n_monomials(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// Values of all monomials of degree `≤ m` at `(ξ, η)`.
pub fn monomial_values(m: usize, xi: f64, eta: f64, out: &mut Vec<f64>) {
    out.clear();
    let mut px = [1.0; 16];
    let mut py = [1.0; 16];
    for i in 1..=m {
        px[i] = px[i - 1] * xi;
        py[i] = py[i - 1] * eta;
    }
    for d in 0..=m {
        for b in 0..=d {
            out.push(px[d - b] * py[b]);
        }
    }
}

/// Polynomial on one triangle in scaled monomials `ξ = (x − x_c)/h`,
/// `η = (y − y_c)/h` about the centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPolynomial {
    pub center: Point,
    pub h: f64,
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl LocalPolynomial {
    pub fn frame(mesh: &Mesh, t: usize) -> (Point, f64) {
        let c = mesh.coords(t);
        let center = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0];
        (center, mesh.triangle(t).diameter)
    }

    pub fn scaled(&self, p: Point) -> [f64; 2] {
        [(p[0] - self.center[0]) / self.h, (p[1] - self.center[1]) / self.h]
    }

    pub fn eval(&self, p: Point) -> f64 {
        let [xi, eta] = self.scaled(p);
        let mut v = Vec::new();
        monomial_values(self.degree, xi, eta, &mut v);
        v.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }
}

/// `Π^m_T g` computed on the triangle rule of degree `rule_degree`.
pub fn l2_project_with(mesh: &Mesh, t: usize, g: &dyn Fn(Point) -> f64, m: usize, rule_degree: usize) -> LocalPolynomial {
    let (center, h) = LocalPolynomial::frame(mesh, t);
    let geo = ElementGeometry::new(mesh, t);
    let rule = QuadratureRule::triangle(rule_degree);
    let n = n_monomials(m);
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    let mut v = Vec::with_capacity(n);
    for (&lam, &w) in rule.points.iter().zip(&rule.weights) {
        let p = geo.point(lam);
        monomial_values(m, (p[0] - center[0]) / h, (p[1] - center[1]) / h, &mut v);
        let gw = w * g(p);
        for i in 0..n {
            rhs[i] += gw * v[i];
            for j in 0..n {
                gram[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    let coeffs = gram
        .cholesky()
        .expect("scaled monomial Gram matrix is positive definite")
        .solve(&rhs);
    LocalPolynomial {
        center,
        h,
        degree: m,
        coeffs: coeffs.iter().copied().collect(),
    }
}

/// `Π^m_T g`, the best `L²(T)` approximation of `g` in `P^m(T)`.
pub fn l2_project(mesh: &Mesh, t: usize, g: &dyn Fn(Point) -> f64, m: usize) -> LocalPolynomial {
    l2_project_with(mesh, t, g, m, 2 * m + 6)
}
