use super::lagrange::{ElementGeometry, Tabulation};
use super::space::FeSpace;
use crate::error::{Error, Result};
use crate::mesh::Point;
use std::sync::Arc;

/// A `P^k` finite element function: coefficients of the nodal basis.
#[derive(Debug, Clone)]
pub struct ScalarField {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl ScalarField {
    pub fn new(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::Argument(format!(
                "{} coefficients for a space with {} dofs",
                coeffs.len(),
                space.n_dofs()
            )));
        }
        Ok(ScalarField { space, coeffs })
    }

    pub fn zeros(space: Arc<FeSpace>) -> Self {
        let n = space.n_dofs();
        ScalarField {
            space,
            coeffs: vec![0.0; n],
        }
    }

    /// Nodal interpolant of `g`.
    pub fn interpolate(space: Arc<FeSpace>, g: &dyn Fn(Point) -> f64) -> Self {
        let coeffs = space.dof_points().into_iter().map(g).collect();
        ScalarField { space, coeffs }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    fn local(&self, t: usize) -> impl Iterator<Item = f64> + '_ {
        self.space.element_dofs(t).iter().map(|&d| self.coeffs[d])
    }

    pub fn value(&self, t: usize, lam: [f64; 3]) -> f64 {
        let el = self.space.element();
        let mut v = vec![0.0; el.n_local()];
        el.values(lam, &mut v);
        self.local(t).zip(v).map(|(c, b)| c * b).sum()
    }

    pub fn gradient(&self, t: usize, lam: [f64; 3]) -> [f64; 2] {
        let el = self.space.element();
        let mut d = vec![[0.0; 3]; el.n_local()];
        el.lambda_gradients(lam, &mut d);
        let mut s = [0.0; 3];
        for (c, di) in self.local(t).zip(d) {
            for i in 0..3 {
                s[i] += c * di[i];
            }
        }
        ElementGeometry::new(self.space.mesh(), t).gradient(s)
    }

    pub fn laplacian(&self, t: usize, lam: [f64; 3]) -> f64 {
        let el = self.space.element();
        let mut h = vec![[[0.0; 3]; 3]; el.n_local()];
        el.lambda_hessians(lam, &mut h);
        let mut s = [[0.0; 3]; 3];
        for (c, hi) in self.local(t).zip(h) {
            for i in 0..3 {
                for l in 0..3 {
                    s[i][l] += c * hi[i][l];
                }
            }
        }
        ElementGeometry::new(self.space.mesh(), t).laplacian(&s)
    }

    /// Values at the points of a tabulation on triangle `t`.
    pub fn values_at(&self, t: usize, tab: &Tabulation, out: &mut Vec<f64>) {
        let nl = tab.n_local;
        let c: Vec<f64> = self.local(t).collect();
        out.clear();
        out.extend((0..tab.rule.len()).map(|q| (0..nl).map(|n| c[n] * tab.values[q * nl + n]).sum::<f64>()));
    }

    /// Gradients at the points of a tabulation on triangle `t`.
    pub fn gradients_at(&self, t: usize, geo: &ElementGeometry, tab: &Tabulation, out: &mut Vec<[f64; 2]>) {
        let nl = tab.n_local;
        let c: Vec<f64> = self.local(t).collect();
        out.clear();
        for q in 0..tab.rule.len() {
            let mut s = [0.0; 3];
            for (n, cn) in c.iter().enumerate() {
                let d = tab.dlam[q * nl + n];
                s[0] += cn * d[0];
                s[1] += cn * d[1];
                s[2] += cn * d[2];
            }
            out.push(geo.gradient(s));
        }
    }

    /// Laplacians at the points of a tabulation on triangle `t`.
    pub fn laplacians_at(&self, t: usize, geo: &ElementGeometry, tab: &Tabulation, out: &mut Vec<f64>) {
        let nl = tab.n_local;
        let c: Vec<f64> = self.local(t).collect();
        out.clear();
        for q in 0..tab.rule.len() {
            let mut s = [[0.0; 3]; 3];
            for (n, cn) in c.iter().enumerate() {
                let h = &tab.hess[q * nl + n];
                for i in 0..3 {
                    for l in 0..3 {
                        s[i][l] += cn * h[i][l];
                    }
                }
            }
            out.push(geo.laplacian(&s));
        }
    }

    /// Value at a physical point (linear search for the containing triangle).
    pub fn eval(&self, p: Point) -> Option<f64> {
        let mesh = self.space.mesh();
        (0..mesh.n_triangles()).find_map(|t| {
            let lam = mesh.barycentric(t, p);
            lam.iter().all(|&l| l >= -1e-12).then(|| self.value(t, lam))
        })
    }
}

/// The piecewise linear hat function of vertex `vertex` on the space's mesh.
pub fn hat_function(space: &FeSpace, vertex: usize) -> Result<ScalarField> {
    let mesh = space.mesh();
    if vertex >= mesh.n_vertices() {
        return Err(Error::Argument(format!("vertex {vertex} out of range")));
    }
    let p1 = FeSpace::new(mesh.clone(), 1)?;
    let mut f = ScalarField::zeros(p1);
    f.coeffs[vertex] = 1.0;
    Ok(f)
}
