//! Gauss–Legendre rules on the unit interval and collapsed (Duffy) product
//! rules on the reference triangle.
//!
//! Triangle rules are stored in barycentric coordinates with weights
//! normalized to sum to one, so `area * Σ w_q g(x_q)` integrates `g` over a
//! physical triangle.

use std::sync::OnceLock;

/// Largest polynomial degree for which rules are cached.
pub const MAX_DEGREE: usize = 40;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Barycentric coordinates `(λ0, λ1, λ2)` of each point.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub degree: usize,
}

/// Gauss–Legendre rule on `[0, 1]`: `n` points exact to degree `2n − 1`.
#[derive(Debug, Clone)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

impl LineRule {
    fn build(degree: usize) -> Self {
        let n = degree / 2 + 1;
        let (x, w) = gauss_legendre(n);
        LineRule {
            points: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|wi| 0.5 * wi).collect(),
            degree: 2 * n - 1,
        }
    }

    /// Cached rule exact for polynomials of degree `degree` on `[0, 1]`.
    pub fn get(degree: usize) -> &'static LineRule {
        static RULES: OnceLock<Vec<LineRule>> = OnceLock::new();
        let rules = RULES.get_or_init(|| (0..=MAX_DEGREE).map(LineRule::build).collect());
        &rules[degree.min(MAX_DEGREE)]
    }
}

impl QuadratureRule {
    fn build(degree: usize) -> Self {
        // x = u, y = (1 - u) v; the Jacobian (1 - u) raises the degree in u by one.
        let rule_u = LineRule::build(degree + 1);
        let rule_v = LineRule::build(degree);
        let mut points = Vec::with_capacity(rule_u.points.len() * rule_v.points.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for (u, wu) in rule_u.points.iter().zip(&rule_u.weights) {
            for (v, wv) in rule_v.points.iter().zip(&rule_v.weights) {
                let x = *u;
                let y = (1.0 - u) * v;
                points.push([1.0 - x - y, x, y]);
                // reference area is 1/2
                weights.push(2.0 * wu * wv * (1.0 - u));
            }
        }
        QuadratureRule {
            points,
            weights,
            degree,
        }
    }

    /// Cached triangle rule exact for total degree `degree`.
    pub fn triangle(degree: usize) -> &'static QuadratureRule {
        static RULES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
        let rules = RULES.get_or_init(|| (0..=MAX_DEGREE).map(QuadratureRule::build).collect());
        &rules[degree.min(MAX_DEGREE)]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
