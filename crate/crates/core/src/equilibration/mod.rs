//! Equilibrated flux reconstruction and the estimators built on it.
//!
//! `q = ∇u_h + q^Δ` with `q^Δ = Σ_ν q^Δ_ν`, each `q^Δ_ν` supported on the
//! vertex patch `ω_ν` and of minimal `L²(ω_ν)` norm among the fluxes that
//! satisfy the local divergence, jump and trace conditions.

mod local;
pub mod qr;
mod rt;

pub use local::{gradient_field, Equilibrator, LocalProblem, PatchFlux, CONSISTENCY_TOLERANCE, RANK_TOLERANCE};
pub use rt::{BrokenRTField, RtEvaluator, RtLocalBasis};

use crate::error::Result;
use crate::galerkin::{data_rule_degree, energy_norm, l2_project_with, ScalarField};
use crate::mesh::Point;
use crate::quadrature::{LineRule, QuadratureRule};

/// Relative tolerance of [`EquilibrationResiduals::ok`].
pub const VERIFY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EquilibratedFlux {
    pub q_delta: BrokenRTField,
    /// `∇u_h + q^Δ`
    pub q: BrokenRTField,
    /// One entry per vertex, in vertex order.
    pub patches: Vec<PatchFlux>,
    /// Present when the flux was checked after assembly.
    pub residuals: Option<EquilibrationResiduals>,
}

/// Maximal residuals of the equilibration conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibrationResiduals {
    /// `max_T ‖div q + Π^k f‖_T / ‖f‖`
    pub div: f64,
    /// `max_E ‖[[q·n]]‖_E / |||u_h|||` over interior edges.
    pub jump: f64,
    /// Largest root mean square of a patch flux normal trace on a
    /// constrained patch-boundary edge, relative to `|||u_h||| / |Ω|^{1/2}`.
    pub trace: f64,
}

impl EquilibrationResiduals {
    pub fn ok(&self) -> bool {
        self.div < VERIFY_TOLERANCE && self.jump < VERIFY_TOLERANCE && self.trace < VERIFY_TOLERANCE
    }
}

/// Flux `q^Δ_ν` of a single vertex patch.
pub fn local_equilibrate(u_h: &ScalarField, f: &dyn Fn(Point) -> f64, vertex: usize) -> Result<PatchFlux> {
    Equilibrator::new(u_h, f).solve(vertex)
}

/// Solves every patch problem and assembles `q^Δ` in vertex order.
pub fn reconstruct(u_h: &ScalarField, f: &dyn Fn(Point) -> f64) -> Result<EquilibratedFlux> {
    let mut flux = reconstruct_unverified(u_h, f)?;
    flux.residuals = Some(verify_equilibration(&flux, u_h, f));
    Ok(flux)
}

/// [`reconstruct`] without the global residual check.
pub fn reconstruct_unverified(u_h: &ScalarField, f: &dyn Fn(Point) -> f64) -> Result<EquilibratedFlux> {
    let eq = Equilibrator::new(u_h, f);
    let mesh = u_h.space().mesh().clone();
    let k = u_h.space().degree();
    let patches = (0..mesh.n_vertices()).map(|v| eq.solve(v)).collect::<Result<Vec<_>>>()?;
    let q_delta = assemble(&mesh, k, &patches);
    let mut q = eq.gradient().clone();
    q.add_assign(&q_delta)?;
    Ok(EquilibratedFlux {
        q_delta,
        q,
        patches,
        residuals: None,
    })
}

/// `Σ_ν q^Δ_ν` as a broken field on the whole mesh.
pub fn assemble(mesh: &std::sync::Arc<crate::Mesh>, k: usize, patches: &[PatchFlux]) -> BrokenRTField {
    let mut q = BrokenRTField::zeros(mesh.clone(), k);
    let n = q.basis().dim();
    for p in patches {
        for (slot, &t) in p.elements.iter().enumerate() {
            for (a, b) in q.element_coeffs_mut(t).iter_mut().zip(p.element_coeffs(slot, n)) {
                *a += b;
            }
        }
    }
    q
}

/// `η^Δ_T = ‖q^Δ‖_T` per triangle and the total.
pub fn eta_delta(flux: &EquilibratedFlux) -> (Vec<f64>, f64) {
    let sq = flux.q_delta.norms_squared();
    let total = sq.iter().sum::<f64>().sqrt();
    (sq.into_iter().map(f64::sqrt).collect(), total)
}

/// Patch totals of `η^⋆`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaStar {
    /// `η^⋆_ν` per vertex.
    pub vertex: Vec<f64>,
    /// `(Σ_T Σ_{ν ∈ V_T} (η^⋆_ν)²)^{1/2}`: each patch counted once per triangle.
    pub total: f64,
    /// `(Σ_ν (η^⋆_ν)²)^{1/2}`
    pub single_count: f64,
}

pub fn eta_star(patches: &[PatchFlux]) -> EtaStar {
    let vertex: Vec<f64> = patches.iter().map(|p| p.norm).collect();
    let total = patches
        .iter()
        .map(|p| p.elements.len() as f64 * p.norm * p.norm)
        .sum::<f64>()
        .sqrt();
    let single_count = vertex.iter().map(|x| x * x).sum::<f64>().sqrt();
    EtaStar {
        vertex,
        total,
        single_count,
    }
}

/// `(‖∇u − ∇v‖², ‖∇u − q‖², ‖∇v − q‖²)`; the first two sum to the third
/// when `div q = −f`.
pub fn prager_synge_terms(grad_exact: &dyn Fn(Point) -> [f64; 2], v: &ScalarField, q: &BrokenRTField) -> (f64, f64, f64) {
    let mesh = v.space().mesh();
    let k = v.space().degree().max(q.degree());
    let rule = QuadratureRule::triangle(2 * k + 8);
    let mut ev = RtEvaluator::new(q.basis());
    let mut terms = (0.0, 0.0, 0.0);
    for t in 0..mesh.n_triangles() {
        let area = mesh.triangle(t).area;
        for (&lam, &w) in rule.points.iter().zip(&rule.weights) {
            let p = mesh.point_at(t, lam);
            let (gu, gv, qv) = (grad_exact(p), v.gradient(t, lam), ev.value(q, t, p));
            let sq = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
            let wa = w * area;
            terms.0 += wa * sq(gu, gv);
            terms.1 += wa * sq(gu, qv);
            terms.2 += wa * sq(gv, qv);
        }
    }
    terms
}

/// Residuals of the divergence, jump and patch-trace conditions.
pub fn verify_equilibration(flux: &EquilibratedFlux, u_h: &ScalarField, f: &dyn Fn(Point) -> f64) -> EquilibrationResiduals {
    let mesh = u_h.space().mesh();
    let k = flux.q.degree();
    let q = &flux.q;
    let rule = QuadratureRule::triangle(data_rule_degree(k));
    let relative = |x: f64, scale: f64| if scale > 0.0 { x / scale } else { x };
    let mut ev = RtEvaluator::new(q.basis());

    let mut f_norm2 = 0.0;
    let mut div: f64 = 0.0;
    for t in 0..mesh.n_triangles() {
        let proj = l2_project_with(mesh, t, f, k, data_rule_degree(k));
        let area = mesh.triangle(t).area;
        let mut r2 = 0.0;
        for (&lam, &w) in rule.points.iter().zip(&rule.weights) {
            let p = mesh.point_at(t, lam);
            f_norm2 += w * area * f(p).powi(2);
            r2 += w * area * (ev.divergence(q, t, p) + proj.eval(p)).powi(2);
        }
        div = div.max(r2.sqrt());
    }

    let line = LineRule::get(2 * k + 2);
    let mut jump: f64 = 0.0;
    for e in mesh.edges().iter().filter(|e| !e.is_boundary()) {
        let (a, b) = (mesh.vertex(e.v[0]).point(), mesh.vertex(e.v[1]).point());
        let len = mesh.edge_length(e.id);
        let n = [(b[1] - a[1]) / len, (a[0] - b[0]) / len];
        let t2 = e.second.expect("interior edge");
        let mut r2 = 0.0;
        for (&s, &w) in line.points.iter().zip(&line.weights) {
            let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let (qa, qb) = (ev.value(q, e.first, x), ev.value(q, t2, x));
            r2 += w * len * ((qa[0] - qb[0]) * n[0] + (qa[1] - qb[1]) * n[1]).powi(2);
        }
        jump = jump.max(r2.sqrt());
    }

    let energy = energy_norm(u_h);
    let trace = flux.patches.iter().map(|p| p.trace_residual).fold(0.0, f64::max);
    EquilibrationResiduals {
        div: relative(div, f_norm2.sqrt()),
        jump: relative(jump, energy),
        trace: relative(trace, energy / mesh.domain_area().sqrt()),
    }
}
