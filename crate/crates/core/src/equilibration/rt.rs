use crate::error::{Error, Result};
use crate::galerkin::{monomial_values, n_monomials, LocalPolynomial};
use crate::mesh::{Mesh, Point};
use crate::quadrature::QuadratureRule;
use std::sync::Arc;

/// Basis of `RT^k(T) = (P^k)² + x P̃^k` in scaled monomials `ξ, η` about the
/// centroid, scaled by the diameter.
///
/// Layout: `(m, 0)` for every monomial `m` of degree `≤ k`, then `(0, m)`,
/// then `(ξ m̃, η m̃)` for the homogeneous `m̃ = ξ^{k−b} η^b`, `b = 0..=k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RtLocalBasis {
    pub degree: usize,
}

impl RtLocalBasis {
    pub fn new(degree: usize) -> Self {
        RtLocalBasis { degree }
    }

    /// `(k+1)(k+3)`
    pub fn dim(&self) -> usize {
        (self.degree + 1) * (self.degree + 3)
    }

    /// Basis values at scaled coordinates; `scratch` holds monomial values.
    pub fn values(&self, xi: f64, eta: f64, scratch: &mut Vec<f64>, out: &mut [[f64; 2]]) {
        let k = self.degree;
        let nk = n_monomials(k);
        monomial_values(k, xi, eta, scratch);
        for (j, &m) in scratch.iter().enumerate() {
            out[j] = [m, 0.0];
            out[nk + j] = [0.0, m];
        }
        let top = nk - (k + 1);
        for b in 0..=k {
            let m = scratch[top + b];
            out[2 * nk + b] = [xi * m, eta * m];
        }
    }

    /// Divergences at scaled coordinates on a triangle of diameter `h`.
    pub fn divergences(&self, xi: f64, eta: f64, h: f64, scratch: &mut Vec<f64>, out: &mut [f64]) {
        let k = self.degree;
        let nk = n_monomials(k);
        monomial_values(k, xi, eta, scratch);
        let index = |a: usize, b: usize| (a + b) * (a + b + 1) / 2 + b;
        let mut j = 0;
        for d in 0..=k {
            for b in 0..=d {
                let a = d - b;
                out[j] = if a > 0 { a as f64 * scratch[index(a - 1, b)] / h } else { 0.0 };
                out[nk + j] = if b > 0 { b as f64 * scratch[index(a, b - 1)] / h } else { 0.0 };
                j += 1;
            }
        }
        let top = nk - (k + 1);
        for b in 0..=k {
            out[2 * nk + b] = (k + 2) as f64 * scratch[top + b] / h;
        }
    }
}

/// Elementwise `RT^k` field without inter-element continuity.
#[derive(Debug, Clone)]
pub struct BrokenRTField {
    mesh: Arc<Mesh>,
    basis: RtLocalBasis,
    frames: Vec<(Point, f64)>,
    coeffs: Vec<f64>,
}

impl BrokenRTField {
    pub fn zeros(mesh: Arc<Mesh>, degree: usize) -> Self {
        let basis = RtLocalBasis::new(degree);
        let frames = (0..mesh.n_triangles()).map(|t| LocalPolynomial::frame(&mesh, t)).collect();
        let coeffs = vec![0.0; mesh.n_triangles() * basis.dim()];
        BrokenRTField {
            mesh,
            basis,
            frames,
            coeffs,
        }
    }

    pub fn new(mesh: Arc<Mesh>, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let mut f = Self::zeros(mesh, degree);
        if coeffs.len() != f.coeffs.len() {
            return Err(Error::Argument(format!(
                "{} coefficients, expected {}",
                coeffs.len(),
                f.coeffs.len()
            )));
        }
        f.coeffs = coeffs;
        Ok(f)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn basis(&self) -> RtLocalBasis {
        self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn element_coeffs(&self, t: usize) -> &[f64] {
        let n = self.basis.dim();
        &self.coeffs[t * n..(t + 1) * n]
    }

    pub fn element_coeffs_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.basis.dim();
        &mut self.coeffs[t * n..(t + 1) * n]
    }

    /// Centroid and diameter defining the scaled coordinates of triangle `t`.
    pub fn frame(&self, t: usize) -> (Point, f64) {
        self.frames[t]
    }

    fn scaled(&self, t: usize, p: Point) -> (f64, f64, f64) {
        let (c, h) = self.frames[t];
        ((p[0] - c[0]) / h, (p[1] - c[1]) / h, h)
    }

    /// Value of the restriction to triangle `t` at `p`.
    pub fn value(&self, t: usize, p: Point) -> [f64; 2] {
        RtEvaluator::new(self.basis).value(self, t, p)
    }

    pub fn divergence(&self, t: usize, p: Point) -> f64 {
        RtEvaluator::new(self.basis).divergence(self, t, p)
    }

    /// Value at a physical point (linear search for the containing triangle).
    pub fn eval(&self, p: Point) -> Option<[f64; 2]> {
        (0..self.mesh.n_triangles()).find_map(|t| {
            let lam = self.mesh.barycentric(t, p);
            lam.iter().all(|&l| l >= -1e-12).then(|| self.value(t, p))
        })
    }

    /// `self += other` on the same mesh and degree.
    pub fn add_assign(&mut self, other: &BrokenRTField) -> Result<()> {
        if !Arc::ptr_eq(&self.mesh, &other.mesh) || self.basis != other.basis {
            return Err(Error::Argument("flux fields on different meshes or degrees".into()));
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(())
    }

    /// `‖q‖²_{L²(T)}` per triangle on a rule of degree `2k + 2`.
    pub fn norms_squared(&self) -> Vec<f64> {
        let rule = QuadratureRule::triangle(2 * self.degree() + 2);
        let mut ev = RtEvaluator::new(self.basis);
        (0..self.mesh.n_triangles())
            .map(|t| {
                let area = self.mesh.triangle(t).area;
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&lam, w)| {
                        let v = ev.value(self, t, self.mesh.point_at(t, lam));
                        w * (v[0] * v[0] + v[1] * v[1])
                    })
                    .sum::<f64>()
                    * area
            })
            .collect()
    }
}

/// Reusable buffers for pointwise evaluation of broken `RT^k` fields.
#[derive(Debug, Clone)]
pub struct RtEvaluator {
    basis: RtLocalBasis,
    scratch: Vec<f64>,
    vals: Vec<[f64; 2]>,
    divs: Vec<f64>,
}

impl RtEvaluator {
    pub fn new(basis: RtLocalBasis) -> Self {
        RtEvaluator {
            basis,
            scratch: Vec::new(),
            vals: vec![[0.0; 2]; basis.dim()],
            divs: vec![0.0; basis.dim()],
        }
    }

    pub fn value(&mut self, q: &BrokenRTField, t: usize, p: Point) -> [f64; 2] {
        let (xi, eta, _) = q.scaled(t, p);
        self.basis.values(xi, eta, &mut self.scratch, &mut self.vals);
        let mut s = [0.0; 2];
        for (c, b) in q.element_coeffs(t).iter().zip(&self.vals) {
            s[0] += c * b[0];
            s[1] += c * b[1];
        }
        s
    }

    pub fn divergence(&mut self, q: &BrokenRTField, t: usize, p: Point) -> f64 {
        let (xi, eta, h) = q.scaled(t, p);
        self.basis.divergences(xi, eta, h, &mut self.scratch, &mut self.divs);
        q.element_coeffs(t).iter().zip(&self.divs).map(|(c, b)| c * b).sum()
    }
}
