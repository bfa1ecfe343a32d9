use crate::mesh::{Mesh, Point};
use crate::quadrature::QuadratureRule;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Nodal `P^k` basis on a triangle in barycentric coordinates:
/// `φ_α(λ) = Π_i g_{α_i}(λ_i)` with `g_a(t) = Π_{j<a} (k t − j) / (j + 1)`.
///
/// Local nodes are ordered vertices, then edges (edge `i` is opposite vertex
/// `i`, traversed from vertex `i+1` to `i+2`), then interior nodes.
#[derive(Debug, Clone)]
pub struct LagrangeElement {
    pub degree: usize,
    pub nodes: Vec<[usize; 3]>,
}

/// `(g, g', g'')` of the one-dimensional factor at `t`.
fn factor(a: usize, k: usize, t: f64) -> (f64, f64, f64) {
    let (mut p, mut dp, mut ddp) = (1.0, 0.0, 0.0);
    for j in 0..a {
        let c = 1.0 / (j as f64 + 1.0);
        let f = (k as f64 * t - j as f64) * c;
        let df = k as f64 * c;
        ddp = ddp * f + 2.0 * dp * df;
        dp = dp * f + p * df;
        p *= f;
    }
    (p, dp, ddp)
}

impl LagrangeElement {
    pub fn new(degree: usize) -> Self {
        let k = degree;
        let mut nodes = Vec::with_capacity((k + 1) * (k + 2) / 2);
        for i in 0..3 {
            let mut a = [0; 3];
            a[i] = k;
            nodes.push(a);
        }
        for i in 0..3 {
            for s in 1..k {
                let mut a = [0; 3];
                a[(i + 1) % 3] = k - s;
                a[(i + 2) % 3] = s;
                nodes.push(a);
            }
        }
        for a0 in (1..k).rev() {
            for a1 in (1..k - a0).rev() {
                let a2 = k - a0 - a1;
                if a2 >= 1 {
                    nodes.push([a0, a1, a2]);
                }
            }
        }
        LagrangeElement { degree, nodes }
    }

    pub fn n_local(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_interior(&self) -> usize {
        let k = self.degree;
        if k < 3 {
            0
        } else {
            (k - 1) * (k - 2) / 2
        }
    }

    /// Barycentric coordinates of each local node.
    pub fn node_lambda(&self, n: usize) -> [f64; 3] {
        self.nodes[n].map(|a| a as f64 / self.degree as f64)
    }

    pub fn values(&self, lam: [f64; 3], out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(&self.nodes) {
            *o = (0..3).map(|i| factor(a[i], self.degree, lam[i]).0).product();
        }
    }

    /// Partial derivatives with respect to `λ_0, λ_1, λ_2`.
    pub fn lambda_gradients(&self, lam: [f64; 3], out: &mut [[f64; 3]]) {
        for (o, a) in out.iter_mut().zip(&self.nodes) {
            let f = [0, 1, 2].map(|i| factor(a[i], self.degree, lam[i]));
            *o = [
                f[0].1 * f[1].0 * f[2].0,
                f[0].0 * f[1].1 * f[2].0,
                f[0].0 * f[1].0 * f[2].1,
            ];
        }
    }

    /// Second partial derivatives with respect to the barycentric coordinates.
    pub fn lambda_hessians(&self, lam: [f64; 3], out: &mut [[[f64; 3]; 3]]) {
        for (o, a) in out.iter_mut().zip(&self.nodes) {
            let f = [0, 1, 2].map(|i| factor(a[i], self.degree, lam[i]));
            for i in 0..3 {
                for l in 0..3 {
                    o[i][l] = (0..3)
                        .map(|m| match (m == i, m == l) {
                            (true, true) => f[m].2,
                            (true, false) | (false, true) => f[m].1,
                            (false, false) => f[m].0,
                        })
                        .product();
                }
            }
        }
    }
}

/// Basis values and barycentric derivatives at the points of a rule.
#[derive(Debug)]
pub struct Tabulation {
    pub rule: &'static QuadratureRule,
    pub n_local: usize,
    /// `values[q * n_local + n]`
    pub values: Vec<f64>,
    pub dlam: Vec<[f64; 3]>,
    pub hess: Vec<[[f64; 3]; 3]>,
}

impl Tabulation {
    pub fn value(&self, q: usize, n: usize) -> f64 {
        self.values[q * self.n_local + n]
    }
}

/// Cached tabulation of the degree-`k` element on the rule of degree `rule_degree`.
pub fn tabulate(k: usize, rule_degree: usize) -> &'static Tabulation {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static Tabulation>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(Default::default).lock().expect("tabulation cache");
    cache.entry((k, rule_degree)).or_insert_with(|| {
        let el = LagrangeElement::new(k);
        let rule = QuadratureRule::triangle(rule_degree);
        let nl = el.n_local();
        let nq = rule.len();
        let mut values = vec![0.0; nq * nl];
        let mut dlam = vec![[0.0; 3]; nq * nl];
        let mut hess = vec![[[0.0; 3]; 3]; nq * nl];
        for (q, &lam) in rule.points.iter().enumerate() {
            el.values(lam, &mut values[q * nl..(q + 1) * nl]);
            el.lambda_gradients(lam, &mut dlam[q * nl..(q + 1) * nl]);
            el.lambda_hessians(lam, &mut hess[q * nl..(q + 1) * nl]);
        }
        Box::leak(Box::new(Tabulation {
            rule,
            n_local: nl,
            values,
            dlam,
            hess,
        }))
    })
}

/// Affine data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub coords: [Point; 3],
    pub area: f64,
    /// `∇λ_i`, constant on the triangle.
    pub grad_lambda: [[f64; 2]; 3],
    /// Diameter (longest edge).
    pub h: f64,
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, t: usize) -> Self {
        let coords = mesh.coords(t);
        let tri = mesh.triangle(t);
        let twice = 2.0 * tri.area;
        let grad_lambda = [0, 1, 2].map(|i| {
            let (p, q) = (coords[(i + 1) % 3], coords[(i + 2) % 3]);
            [(p[1] - q[1]) / twice, (q[0] - p[0]) / twice]
        });
        ElementGeometry {
            coords,
            area: tri.area,
            grad_lambda,
            h: tri.diameter,
        }
    }

    pub fn point(&self, lam: [f64; 3]) -> Point {
        let c = &self.coords;
        [
            lam[0] * c[0][0] + lam[1] * c[1][0] + lam[2] * c[2][0],
            lam[0] * c[0][1] + lam[1] * c[1][1] + lam[2] * c[2][1],
        ]
    }

    /// Physical gradient from barycentric partial derivatives.
    pub fn gradient(&self, d: [f64; 3]) -> [f64; 2] {
        let g = &self.grad_lambda;
        [
            d[0] * g[0][0] + d[1] * g[1][0] + d[2] * g[2][0],
            d[0] * g[0][1] + d[1] * g[1][1] + d[2] * g[2][1],
        ]
    }

    /// Laplacian from barycentric second derivatives.
    pub fn laplacian(&self, h: &[[f64; 3]; 3]) -> f64 {
        let g = &self.grad_lambda;
        let mut s = 0.0;
        for i in 0..3 {
            for l in 0..3 {
                s += h[i][l] * (g[i][0] * g[l][0] + g[i][1] * g[l][1]);
            }
        }
        s
    }
}
