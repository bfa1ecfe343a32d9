//! Residual estimators, data oscillation and the per-level estimator report.
//!
//! `R_T = (f + Δu_h)|_T`, `J_E = ∇u_h|_{T⁺}·n⁺ + ∇u_h|_{T⁻}·n⁻` on interior
//! edges (boundary edges carry no jump). Element indicators weight the
//! element residual by `h_T²` and the jumps on `∂T` by `h_T`.

use crate::equilibration::{eta_delta, eta_star, reconstruct_unverified, EquilibratedFlux};
use crate::error::{Error, Result};
use crate::galerkin::lagrange::{tabulate, ElementGeometry};
use crate::galerkin::{data_rule_degree, energy_error, l2_project_with, ScalarField};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{LineRule, QuadratureRule};

/// Squared residual integrals of one triangle.
#[derive(Debug, Clone, Copy)]
struct ElementResidual {
    /// `∫_T R²`
    full: f64,
    /// `∫_T λ_i² R²` for the local vertices.
    weighted: [f64; 3],
}

/// Squared jump integrals of one interior edge.
#[derive(Debug, Clone, Copy, Default)]
struct EdgeJump {
    /// `∫_E J²`
    full: f64,
    /// `∫_E φ_a² J²` and `∫_E φ_b² J²` for the endpoints `v = [a, b]`.
    weighted: [f64; 2],
}

fn element_residuals(u_h: &ScalarField, f: &dyn Fn(Point) -> f64) -> Vec<ElementResidual> {
    let mesh = u_h.space().mesh();
    let tab = tabulate(u_h.space().degree(), data_rule_degree(u_h.space().degree()));
    let mut lap = Vec::new();
    (0..mesh.n_triangles())
        .map(|t| {
            let geo = ElementGeometry::new(mesh, t);
            u_h.laplacians_at(t, &geo, tab, &mut lap);
            let mut r = ElementResidual {
                full: 0.0,
                weighted: [0.0; 3],
            };
            for ((&lam, &w), l) in tab.rule.points.iter().zip(&tab.rule.weights).zip(&lap) {
                let res = f(geo.point(lam)) + l;
                let wr = w * geo.area * res * res;
                r.full += wr;
                for i in 0..3 {
                    r.weighted[i] += wr * lam[i] * lam[i];
                }
            }
            r
        })
        .collect()
}

fn edge_jumps(u_h: &ScalarField) -> Vec<EdgeJump> {
    let mesh = u_h.space().mesh();
    let rule = LineRule::get(2 * u_h.space().degree() + 2);
    mesh.edges()
        .iter()
        .map(|e| {
            let Some(t2) = e.second else {
                return EdgeJump::default();
            };
            let (a, b) = (mesh.vertex(e.v[0]).point(), mesh.vertex(e.v[1]).point());
            let len = mesh.edge_length(e.id);
            // J = (∇u|_{T⁺} − ∇u|_{T⁻})·n⁺ with the normal sign irrelevant
            let n = [(b[1] - a[1]) / len, (a[0] - b[0]) / len];
            let mut j = EdgeJump::default();
            for (&s, &w) in rule.points.iter().zip(&rule.weights) {
                let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let g1 = u_h.gradient(e.first, mesh.barycentric(e.first, x));
                let g2 = u_h.gradient(t2, mesh.barycentric(t2, x));
                let jump = (g1[0] - g2[0]) * n[0] + (g1[1] - g2[1]) * n[1];
                let wj = w * len * jump * jump;
                j.full += wj;
                j.weighted[0] += wj * (1.0 - s) * (1.0 - s);
                j.weighted[1] += wj * s * s;
            }
            j
        })
        .collect()
}

/// `η_res(u_h, T)` for every triangle.
pub fn residual_indicators(u_h: &ScalarField, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
    element_indicators(u_h.space().mesh(), &element_residuals(u_h, f), &edge_jumps(u_h))
}

fn element_indicators(mesh: &Mesh, residuals: &[ElementResidual], jumps: &[EdgeJump]) -> Vec<f64> {
    residuals
        .iter()
        .enumerate()
        .map(|(t, r)| {
            let h = mesh.triangle(t).diameter;
            let edges: f64 = mesh.triangle_edges(t).iter().map(|&e| jumps[e].full).sum();
            (h * h * r.full + h * edges).sqrt()
        })
        .collect()
}

/// `η_res(u_h, T)²  = ‖h_T R_T‖²_T + ‖h_T^{1/2} J‖²_{∂T}`
pub fn residual_indicator(u_h: &ScalarField, f: &dyn Fn(Point) -> f64, t: usize) -> f64 {
    residual_indicators(u_h, f)[t]
}

/// `η̃_res(u_h, ν)` for every vertex: the residual indicator of the patch
/// `ω_ν` with the residuals weighted by the hat function `φ_ν`.
pub fn patch_residual_indicators(u_h: &ScalarField, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
    patch_indicators(u_h.space().mesh(), &element_residuals(u_h, f), &edge_jumps(u_h))
}

fn patch_indicators(mesh: &Mesh, residuals: &[ElementResidual], jumps: &[EdgeJump]) -> Vec<f64> {
    let mut sq = vec![0.0; mesh.n_vertices()];
    for (t, r) in residuals.iter().enumerate() {
        let tri = mesh.triangle(t);
        let h = tri.diameter;
        for (i, &v) in tri.v.iter().enumerate() {
            sq[v] += h * h * r.weighted[i];
        }
        for &e in &mesh.triangle_edges(t) {
            let edge = mesh.edge(e);
            sq[edge.v[0]] += h * jumps[e].weighted[0];
            sq[edge.v[1]] += h * jumps[e].weighted[1];
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

pub fn patch_residual_indicator(u_h: &ScalarField, f: &dyn Fn(Point) -> f64, vertex: usize) -> f64 {
    patch_residual_indicators(u_h, f)[vertex]
}

/// Data oscillation `‖h_T (f − Π^{k−1}_T f)‖` and its patch aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct Oscillation {
    pub element: Vec<f64>,
    /// `osc(f, ν) = (Σ_{T ∈ ω_ν} osc(f, T)²)^{1/2}`
    pub vertex: Vec<f64>,
    /// `(Σ_T osc(f, T)²)^{1/2}`
    pub total: f64,
    /// `(Σ_ν osc(f, ν)²)^{1/2}`
    pub star: f64,
}

impl Oscillation {
    /// `osc` restricted to a set of triangles.
    pub fn on_elements(&self, elements: &[usize]) -> f64 {
        elements.iter().map(|&t| self.element[t].powi(2)).sum::<f64>().sqrt()
    }

    /// `osc^⋆` restricted to the vertices of a set of triangles.
    pub fn star_on_elements(&self, mesh: &Mesh, elements: &[usize]) -> f64 {
        let mut seen = vec![false; mesh.n_vertices()];
        for &t in elements {
            for &v in &mesh.triangle(t).v {
                seen[v] = true;
            }
        }
        seen.iter()
            .zip(&self.vertex)
            .filter(|(s, _)| **s)
            .map(|(_, o)| o * o)
            .sum::<f64>()
            .sqrt()
    }
}

pub fn oscillation(f: &dyn Fn(Point) -> f64, mesh: &Mesh, k: usize) -> Result<Oscillation> {
    if k == 0 {
        return Err(Error::Argument("oscillation needs a polynomial degree k ≥ 1".into()));
    }
    let deg = data_rule_degree(k);
    let rule = QuadratureRule::triangle(deg);
    let element: Vec<f64> = (0..mesh.n_triangles())
        .map(|t| {
            let proj = l2_project_with(mesh, t, f, k - 1, deg);
            let tri = mesh.triangle(t);
            let s: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(&lam, &w)| {
                    let p = mesh.point_at(t, lam);
                    w * (f(p) - proj.eval(p)).powi(2)
                })
                .sum();
            tri.diameter * (s * tri.area).sqrt()
        })
        .collect();
    let mut vertex_sq = vec![0.0; mesh.n_vertices()];
    for (t, o) in element.iter().enumerate() {
        for &v in &mesh.triangle(t).v {
            vertex_sq[v] += o * o;
        }
    }
    let total = element.iter().map(|o| o * o).sum::<f64>().sqrt();
    let star = vertex_sq.iter().sum::<f64>().sqrt();
    Ok(Oscillation {
        element,
        vertex: vertex_sq.into_iter().map(f64::sqrt).collect(),
        total,
        star,
    })
}

/// `(|||u − u_h|||² + osc(f)²)^{1/2}`
pub fn total_error(
    grad_exact: Option<&dyn Fn(Point) -> [f64; 2]>,
    u_h: &ScalarField,
    f: &dyn Fn(Point) -> f64,
) -> Result<f64> {
    let grad = grad_exact.ok_or_else(|| Error::Unsupported("total error needs the exact solution".into()))?;
    let err = energy_error(u_h, grad);
    let osc = oscillation(f, u_h.space().mesh(), u_h.space().degree())?.total;
    Ok((err * err + osc * osc).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorTotals {
    pub eta_delta: f64,
    /// Each patch counted once per incident triangle.
    pub eta_star: f64,
    pub eta_star_single: f64,
    pub eta_res: f64,
    /// `(Σ_T Σ_{ν ∈ V_T} η̃_res(ν)²)^{1/2}`
    pub eta_res_patch: f64,
    pub osc: f64,
    pub osc_star: f64,
    pub energy_error: Option<f64>,
}

/// All indicators of one level.
#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub eta_delta: Vec<f64>,
    pub eta_res: Vec<f64>,
    pub osc: Vec<f64>,
    pub eta_star: Vec<f64>,
    pub eta_res_patch: Vec<f64>,
    pub osc_patch: Vec<f64>,
    /// Patch sizes `|ω_ν|`, the multiplicities of the double-counted totals.
    pub patch_sizes: Vec<usize>,
    pub totals: EstimatorTotals,
}

impl EstimatorReport {
    /// `Σ_{ν ∈ V_T} (η^⋆_ν)²` per triangle: the element form of the `η^⋆` total.
    pub fn eta_star_elementwise(&self, mesh: &Mesh) -> Vec<f64> {
        (0..mesh.n_triangles())
            .map(|t| mesh.triangle(t).v.iter().map(|&v| self.eta_star[v].powi(2)).sum::<f64>().sqrt())
            .collect()
    }
}

/// Equilibrates, then evaluates every estimator and oscillation term.
pub fn estimate(
    u_h: &ScalarField,
    f: &dyn Fn(Point) -> f64,
    grad_exact: Option<&dyn Fn(Point) -> [f64; 2]>,
) -> Result<(EstimatorReport, EquilibratedFlux)> {
    let mesh = u_h.space().mesh();
    let flux = reconstruct_unverified(u_h, f)?;
    let (delta, delta_total) = eta_delta(&flux);
    let star = eta_star(&flux.patches);
    let (residuals, jumps) = (element_residuals(u_h, f), edge_jumps(u_h));
    let res = element_indicators(mesh, &residuals, &jumps);
    let res_patch = patch_indicators(mesh, &residuals, &jumps);
    let osc = oscillation(f, mesh, u_h.space().degree())?;
    let patch_sizes: Vec<usize> = (0..mesh.n_vertices()).map(|v| mesh.vertex_triangles(v).len()).collect();
    let totals = EstimatorTotals {
        eta_delta: delta_total,
        eta_star: star.total,
        eta_star_single: star.single_count,
        eta_res: res.iter().map(|x| x * x).sum::<f64>().sqrt(),
        eta_res_patch: res_patch
            .iter()
            .zip(&patch_sizes)
            .map(|(x, &m)| m as f64 * x * x)
            .sum::<f64>()
            .sqrt(),
        osc: osc.total,
        osc_star: osc.star,
        energy_error: grad_exact.map(|g| energy_error(u_h, g)),
    };
    Ok((
        EstimatorReport {
            eta_delta: delta,
            eta_res: res,
            osc: osc.element,
            eta_star: star.vertex,
            eta_res_patch: res_patch,
            osc_patch: osc.vertex,
            patch_sizes,
            totals,
        },
        flux,
    ))
}
