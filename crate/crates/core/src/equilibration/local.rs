//! The local equilibration problem on a vertex patch.
//!
//! Unknowns are the `RT^k` coefficients of `q^Δ_ν` on every patch triangle.
//! Minimizing `Σ_T cᵀ M_T c` is done in the coordinates `z = Lᵀ c`
//! (`M_T = L Lᵀ`), where the objective is `‖z‖²`. Per-triangle constraints
//! (divergence and zero normal traces) are eliminated first; the remaining
//! jump constraints couple triangles and are solved in the per-triangle null
//! spaces.

use super::qr::{min_norm_particular, min_norm_solve};
use super::rt::{BrokenRTField, RtLocalBasis};
use crate::error::{Error, Result};
use crate::galerkin::{data_rule_degree, lagrange::ElementGeometry, monomial_values, n_monomials, ScalarField};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{LineRule, QuadratureRule};
use nalgebra::{DMatrix, DVector};
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

/// Relative pivot size below which a constraint row is treated as dependent.
pub const RANK_TOLERANCE: f64 = 1e-12;
/// Compatibility residual, relative to the data, above which an interior
/// patch problem is rejected.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-8;

/// Flux `q^Δ_ν` of one vertex patch.
#[derive(Debug, Clone)]
pub struct PatchFlux {
    pub vertex: usize,
    /// Patch triangles, ascending.
    pub elements: Vec<usize>,
    /// `RT^k` coefficients, one block per entry of `elements`.
    pub coeffs: Vec<f64>,
    /// `η^⋆_ν = ‖q^Δ_ν‖_{L²(ω_ν)}`
    pub norm: f64,
    /// Residual of the dependent constraint (zero up to rounding for a
    /// Galerkin solution).
    pub compatibility_residual: f64,
    /// Largest root mean square of `q^Δ_ν·n` over a constrained patch-boundary edge.
    pub trace_residual: f64,
}

impl PatchFlux {
    pub fn element_coeffs(&self, slot: usize, dim: usize) -> &[f64] {
        &self.coeffs[slot * dim..(slot + 1) * dim]
    }
}

/// Dense form of the local problem: minimize `cᵀ M c` subject to `B c = r`.
#[derive(Debug, Clone)]
pub struct LocalProblem {
    pub vertex: usize,
    pub elements: Vec<usize>,
    /// Block-diagonal mass matrix.
    pub mass: DMatrix<f64>,
    pub constraints: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Whether the vertex is interior (one constraint is then dependent).
    pub interior: bool,
}

/// Orthonormal Legendre polynomials on `[0, 1]`.
fn legendre(n: usize, s: f64, out: &mut [f64]) {
    let x = 2.0 * s - 1.0;
    let (mut p0, mut p1) = (1.0, x);
    for (j, o) in out.iter_mut().enumerate().take(n + 1) {
        let p = match j {
            0 => 1.0,
            1 => x,
            _ => {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        *o = p * (2.0 * j as f64 + 1.0).sqrt();
    }
}

struct ElementBlock {
    t: usize,
    area: f64,
    shape: Rc<ShapeData>,
    /// Divergence rows followed by zero-trace rows are
    /// `diag(row_scale) · (normalized rows of the shape)`.
    row_scale: Vec<f64>,
    /// Bit `i` set when the trace on local edge `i` is constrained.
    mask: u8,
    rhs: DVector<f64>,
    /// Size of the right-hand side before cancellation between its terms.
    gross: f64,
    /// Edges whose normal trace is constrained to vanish.
    trace_edges: Vec<usize>,
}

struct JumpRows {
    plus: (usize, DMatrix<f64>),
    minus: (usize, DMatrix<f64>),
    rhs: DVector<f64>,
    gross: f64,
}

struct Blocks {
    elements: Vec<usize>,
    blocks: Vec<ElementBlock>,
    jumps: Vec<JumpRows>,
    interior: bool,
    data_scale: f64,
}

/// Precomputed data shared by all patch problems of one discrete solution.
pub struct Equilibrator<'a> {
    mesh: Arc<Mesh>,
    u_h: &'a ScalarField,
    f: &'a dyn Fn(Point) -> f64,
    basis: RtLocalBasis,
    grad: BrokenRTField,
    shapes: RefCell<HashMap<[i64; 6], Rc<ShapeData>>>,
    /// Shape of each triangle, filled on first use.
    shape_of: RefCell<Vec<Option<Rc<ShapeData>>>>,
}

/// `∇u_h` written in the broken `RT^k` basis (exact: `∇u_h ∈ (P^{k−1})²`).
pub fn gradient_field(u_h: &ScalarField) -> BrokenRTField {
    let space = u_h.space();
    let mesh = space.mesh().clone();
    let k = space.degree();
    let nk = n_monomials(k);
    let tab = crate::galerkin::lagrange::tabulate(k, 2 * k);
    let mut q = BrokenRTField::zeros(mesh.clone(), k);
    let mut grads = Vec::new();
    let mut mv = Vec::new();
    for t in 0..mesh.n_triangles() {
        let geo = ElementGeometry::new(&mesh, t);
        let (c, h) = q.frame(t);
        u_h.gradients_at(t, &geo, tab, &mut grads);
        let mut gram = DMatrix::<f64>::zeros(nk, nk);
        let mut rhs = DMatrix::<f64>::zeros(nk, 2);
        for ((&lam, &w), g) in tab.rule.points.iter().zip(&tab.rule.weights).zip(&grads) {
            let p = geo.point(lam);
            monomial_values(k, (p[0] - c[0]) / h, (p[1] - c[1]) / h, &mut mv);
            for i in 0..nk {
                rhs[(i, 0)] += w * g[0] * mv[i];
                rhs[(i, 1)] += w * g[1] * mv[i];
                for j in 0..nk {
                    gram[(i, j)] += w * mv[i] * mv[j];
                }
            }
        }
        let sol = gram.cholesky().expect("monomial Gram matrix").solve(&rhs);
        let out = q.element_coeffs_mut(t);
        for i in 0..nk {
            out[i] = sol[(i, 0)];
            out[nk + i] = sol[(i, 1)];
        }
    }
    q
}

/// Shape-dependent element matrices, normalized so that they only depend
/// on the triangle up to translation and scaling.
struct ShapeData {
    /// `M_T / |T|`
    mass: DMatrix<f64>,
    /// Cholesky factor of `mass`.
    chol: DMatrix<f64>,
    /// `∫ div ψ_i m_b` scaled by `h / |T|`.
    div: DMatrix<f64>,
    /// `∫_E ψ_i·n p_j` on local edge `i`, traversed from local vertex
    /// `i+1` to `i+2`, scaled by `|E|^{-1/2}`.
    trace: [DMatrix<f64>; 3],
    /// Divergences (unit diameter) and monomials at the data-rule points.
    data_divs: Vec<f64>,
    data_mono: Vec<f64>,
    /// Eliminations indexed by the constrained-edge mask.
    eliminations: RefCell<[Option<Rc<Elimination>>; 8]>,
}

/// Per-triangle elimination of the divergence and trace rows in the
/// coordinates `z = L̂ᵀ c`, for one shape and one set of constrained edges.
struct Elimination {
    /// Pseudo-inverse of the normalized rows `Ĝ = Ĉ L̂^{-T}`.
    pinv: DMatrix<f64>,
    /// `L̂^{-T} Ĝ⁺`
    pinv_c: DMatrix<f64>,
    /// `L̂^{-T} Z` for an orthonormal basis `Z` of the null space of `Ĝ`.
    null_c: DMatrix<f64>,
    min_pivot: f64,
}

/// Quadrature point on an edge: position, weight times length, parameter.
type EdgePoint = (Point, f64, f64);

impl<'a> Equilibrator<'a> {
    pub fn new(u_h: &'a ScalarField, f: &'a dyn Fn(Point) -> f64) -> Self {
        let mesh = u_h.space().mesh().clone();
        let k = u_h.space().degree();
        Equilibrator {
            mesh,
            u_h,
            f,
            basis: RtLocalBasis::new(k),
            grad: gradient_field(u_h),
            shapes: RefCell::new(HashMap::new()),
            shape_of: RefCell::new(vec![None; u_h.space().mesh().n_triangles()]),
        }
    }

    pub fn gradient(&self) -> &BrokenRTField {
        &self.grad
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn u_h(&self) -> &ScalarField {
        self.u_h
    }

    fn local_edge(&self, t: usize, e: usize) -> usize {
        self.mesh.triangle_edges(t).iter().position(|&x| x == e).expect("edge of triangle")
    }

    fn outward_normal(&self, t: usize, e: usize) -> [f64; 2] {
        let tri = self.mesh.triangle(t);
        let i = self.local_edge(t, e);
        let p = self.mesh.vertex(tri.v[(i + 1) % 3]).point();
        let q = self.mesh.vertex(tri.v[(i + 2) % 3]).point();
        let l = self.mesh.edge_length(e);
        [(q[1] - p[1]) / l, (p[0] - q[0]) / l]
    }

    /// Quadrature on the segment `a → b` with the parameter `s` measured from `a`.
    fn segment_points(&self, a: Point, b: Point, out: &mut Vec<EdgePoint>) {
        let rule = LineRule::get(2 * self.degree() + 2);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        out.clear();
        out.extend(rule.points.iter().zip(&rule.weights).map(|(&s, &w)| {
            ([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])], w * len, s)
        }));
    }

    fn shape_key(&self, t: usize) -> [i64; 6] {
        let (c, h) = self.grad.frame(t);
        let p = self.mesh.coords(t);
        let q = |x: f64| (x * 1e10).round() as i64;
        [
            q((p[0][0] - c[0]) / h),
            q((p[0][1] - c[1]) / h),
            q((p[1][0] - c[0]) / h),
            q((p[1][1] - c[1]) / h),
            q((p[2][0] - c[0]) / h),
            q((p[2][1] - c[1]) / h),
        ]
    }

    fn shape(&self, t: usize) -> Rc<ShapeData> {
        if let Some(s) = &self.shape_of.borrow()[t] {
            return s.clone();
        }
        let key = self.shape_key(t);
        let cached = self.shapes.borrow().get(&key).cloned();
        let s = cached.unwrap_or_else(|| {
            let s = Rc::new(self.compute_shape(t));
            self.shapes.borrow_mut().insert(key, s.clone());
            s
        });
        self.shape_of.borrow_mut()[t] = Some(s.clone());
        s
    }

    fn compute_shape(&self, t: usize) -> ShapeData {
        let k = self.degree();
        let n = self.basis.dim();
        let nk = n_monomials(k);
        let geo = ElementGeometry::new(&self.mesh, t);
        let (c, h) = self.grad.frame(t);
        let mut scratch = Vec::new();
        let mut mv = Vec::new();
        let mut vals = vec![[0.0; 2]; n];
        let mut divs = vec![0.0; n];

        let mut mass = DMatrix::<f64>::zeros(n, n);
        let rule = QuadratureRule::triangle(2 * k + 2);
        for (&lam, &w) in rule.points.iter().zip(&rule.weights) {
            let p = geo.point(lam);
            self.basis.values((p[0] - c[0]) / h, (p[1] - c[1]) / h, &mut scratch, &mut vals);
            for i in 0..n {
                for j in 0..=i {
                    mass[(i, j)] += w * (vals[i][0] * vals[j][0] + vals[i][1] * vals[j][1]);
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                mass[(j, i)] = mass[(i, j)];
            }
        }

        let mut div = DMatrix::<f64>::zeros(nk, n);
        let rule = QuadratureRule::triangle(2 * k);
        for (&lam, &w) in rule.points.iter().zip(&rule.weights) {
            let p = geo.point(lam);
            let (xi, eta) = ((p[0] - c[0]) / h, (p[1] - c[1]) / h);
            // divergences on the unit-diameter triangle
            self.basis.divergences(xi, eta, 1.0, &mut scratch, &mut divs);
            monomial_values(k, xi, eta, &mut mv);
            for b in 0..nk {
                for i in 0..n {
                    div[(b, i)] += w * divs[i] * mv[b];
                }
            }
        }

        let tri = self.mesh.triangle(t);
        let mut pts = Vec::new();
        let mut leg = vec![0.0; k + 1];
        let trace = std::array::from_fn(|i| {
            let a = self.mesh.vertex(tri.v[(i + 1) % 3]).point();
            let b = self.mesh.vertex(tri.v[(i + 2) % 3]).point();
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            let normal = [(b[1] - a[1]) / len, (a[0] - b[0]) / len];
            self.segment_points(a, b, &mut pts);
            let mut rows = DMatrix::<f64>::zeros(k + 1, n);
            for &(x, wl, s) in &pts {
                self.basis.values((x[0] - c[0]) / h, (x[1] - c[1]) / h, &mut scratch, &mut vals);
                legendre(k, s, &mut leg);
                for i in 0..n {
                    let vn = vals[i][0] * normal[0] + vals[i][1] * normal[1];
                    for j in 0..=k {
                        rows[(j, i)] += wl * vn * leg[j] / len;
                    }
                }
            }
            rows
        });

        let rule = QuadratureRule::triangle(data_rule_degree(k));
        let mut data_divs = Vec::with_capacity(rule.len() * n);
        let mut data_mono = Vec::with_capacity(rule.len() * nk);
        for &lam in &rule.points {
            let p = geo.point(lam);
            let (xi, eta) = ((p[0] - c[0]) / h, (p[1] - c[1]) / h);
            self.basis.divergences(xi, eta, 1.0, &mut scratch, &mut divs);
            data_divs.extend_from_slice(&divs);
            monomial_values(k, xi, eta, &mut mv);
            data_mono.extend_from_slice(&mv);
        }

        let chol = mass.clone().cholesky().expect("RT mass matrix is positive definite").l();
        ShapeData {
            mass,
            chol,
            div,
            trace,
            data_divs,
            data_mono,
            eliminations: RefCell::new(Default::default()),
        }
    }

    fn elimination(&self, shape: &ShapeData, mask: u8) -> Rc<Elimination> {
        if let Some(e) = &shape.eliminations.borrow()[usize::from(mask)] {
            return e.clone();
        }
        let n = self.basis.dim();
        let mut blocks = vec![&shape.div];
        blocks.extend((0..3).filter(|i| mask & (1 << i) != 0).map(|i| &shape.trace[i]));
        let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut c = DMatrix::<f64>::zeros(rows, n);
        let mut r = 0;
        for b in blocks {
            c.view_mut((r, 0), (b.nrows(), n)).copy_from(b);
            r += b.nrows();
        }
        let g = shape
            .chol
            .solve_lower_triangular(&c.transpose())
            .expect("nonsingular factor")
            .transpose();
        let mut pinv = DMatrix::<f64>::zeros(n, rows);
        let mut null = DMatrix::<f64>::zeros(n, 0);
        let mut min_pivot = f64::INFINITY;
        for i in 0..rows {
            let sol = min_norm_solve(&g, &DVector::from_fn(rows, |j, _| f64::from(u8::from(i == j))), 0);
            pinv.set_column(i, &sol.x);
            null = sol.null;
            min_pivot = sol.min_pivot;
        }
        let e = Rc::new(Elimination {
            pinv_c: shape.chol.tr_solve_lower_triangular(&pinv).expect("nonsingular factor"),
            null_c: shape.chol.tr_solve_lower_triangular(&null).expect("nonsingular factor"),
            pinv,
            min_pivot,
        });
        shape.eliminations.borrow_mut()[usize::from(mask)] = Some(e.clone());
        e
    }

    /// `∫_E ψ_i·n p_j` for the basis of triangle `t`, with `p_j` the
    /// `L²(E)`-orthonormal Legendre polynomials in the parameter measured
    /// from the lower-id endpoint: `(k+1) × dim`.
    /// Row scaling taking the normalized trace rows of the local edge of `e`
    /// to the actual ones.
    fn trace_scale(&self, t: usize, e: usize, out: &mut Vec<f64>) {
        let i = self.local_edge(t, e);
        let tri = self.mesh.triangle(t);
        let reversed = tri.v[(i + 1) % 3] > tri.v[(i + 2) % 3];
        let s = self.mesh.edge_length(e).sqrt();
        out.extend((0..=self.degree()).map(|j| if reversed && j % 2 == 1 { -s } else { s }));
    }

    fn trace_rows(&self, shape: &ShapeData, t: usize, e: usize) -> DMatrix<f64> {
        let i = self.local_edge(t, e);
        let tri = self.mesh.triangle(t);
        let reversed = tri.v[(i + 1) % 3] > tri.v[(i + 2) % 3];
        let mut rows = &shape.trace[i] * self.mesh.edge_length(e).sqrt();
        if reversed {
            // p_j(1 − s) = (−1)^j p_j(s)
            for j in (1..rows.nrows()).step_by(2) {
                rows.row_mut(j).neg_mut();
            }
        }
        rows
    }

    fn grad_at(&self, t: usize, x: Point, scratch: &mut Vec<f64>) -> [f64; 2] {
        let k = self.degree();
        let nk = n_monomials(k);
        let (c, h) = self.grad.frame(t);
        monomial_values(k, (x[0] - c[0]) / h, (x[1] - c[1]) / h, scratch);
        let co = self.grad.element_coeffs(t);
        let mut g = [0.0; 2];
        for i in 0..nk {
            g[0] += co[i] * scratch[i];
            g[1] += co[nk + i] * scratch[i];
        }
        g
    }

    fn element_block(&self, vertex: usize, t: usize, interior: bool) -> ElementBlock {
        let k = self.degree();
        let n = self.basis.dim();
        let nk = n_monomials(k);
        let shape = self.shape(t);
        let geo = ElementGeometry::new(&self.mesh, t);
        let h = self.grad.frame(t).1;
        let tri = self.mesh.triangle(t);
        let local = tri.v.iter().position(|&v| v == vertex).expect("patch vertex");

        let trace_edges: Vec<usize> = self
            .mesh
            .triangle_edges(t)
            .iter()
            .copied()
            .filter(|&e| {
                let edge = self.mesh.edge(e);
                // edges through the vertex are jump edges or free boundary edges
                !edge.contains(vertex) && (interior || !edge.is_boundary())
            })
            .collect();
        let mut mask = 0u8;
        let mut row_scale = vec![geo.area / h; nk];
        for &e in &trace_edges {
            mask |= 1 << self.local_edge(t, e);
            self.trace_scale(t, e, &mut row_scale);
        }

        let mut rhs = DVector::<f64>::zeros(row_scale.len());
        let rule = QuadratureRule::triangle(data_rule_degree(k));
        let grad = self.grad.element_coeffs(t);
        let mut gross = 0.0;
        for (q, (&lam, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let p = geo.point(lam);
            let divs = &shape.data_divs[q * n..(q + 1) * n];
            let mv = &shape.data_mono[q * nk..(q + 1) * nk];
            let lap: f64 = grad.iter().zip(divs).map(|(a, b)| a * b).sum::<f64>() / h;
            let fp = (self.f)(p);
            let data = w * geo.area * lam[local] * (fp + lap);
            gross += w * geo.area * lam[local] * (fp.abs() + lap.abs());
            for b in 0..nk {
                rhs[b] -= data * mv[b];
            }
        }

        ElementBlock {
            t,
            area: geo.area,
            shape,
            row_scale,
            mask,
            rhs,
            gross,
            trace_edges,
        }
    }

    fn jump_rows(&self, vertex: usize, e: usize, slot_of: &dyn Fn(usize) -> usize) -> JumpRows {
        let k = self.degree();
        let edge = *self.mesh.edge(e);
        let (tp, tm) = (edge.first, edge.second.expect("interior edge"));
        let (np, nm) = (self.outward_normal(tp, e), self.outward_normal(tm, e));
        let (a, b) = (self.mesh.vertex(edge.v[0]).point(), self.mesh.vertex(edge.v[1]).point());
        let scale = 1.0 / self.mesh.edge_length(e).sqrt();
        let mut pts = Vec::new();
        self.segment_points(a, b, &mut pts);
        let mut rhs = DVector::<f64>::zeros(k + 1);
        let mut scratch = Vec::new();
        let mut leg = vec![0.0; k + 1];
        let mut gross = 0.0;
        for &(x, w, s) in &pts {
            let phi = if vertex == edge.v[0] { 1.0 - s } else { s };
            let gp = self.grad_at(tp, x, &mut scratch);
            let gm = self.grad_at(tm, x, &mut scratch);
            let (a, b) = (gp[0] * np[0] + gp[1] * np[1], gm[0] * nm[0] + gm[1] * nm[1]);
            gross += w * phi * (a.abs() + b.abs());
            legendre(k, s, &mut leg);
            for j in 0..=k {
                rhs[j] -= w * phi * (a + b) * leg[j] * scale;
            }
        }
        JumpRows {
            plus: (slot_of(tp), self.trace_rows(&self.shape(tp), tp, e)),
            minus: (slot_of(tm), self.trace_rows(&self.shape(tm), tm, e)),
            rhs,
            gross,
        }
    }

    fn blocks(&self, vertex: usize) -> Result<Blocks> {
        let patch = self.mesh.patch(vertex)?;
        let interior = !self.mesh.vertex(vertex).on_boundary;
        let blocks: Vec<ElementBlock> = patch
            .elements
            .iter()
            .map(|&t| self.element_block(vertex, t, interior))
            .collect();
        let elements = patch.elements.clone();
        let slot_of = |t: usize| elements.binary_search(&t).expect("patch triangle");
        let jumps: Vec<JumpRows> = patch
            .interior_edges
            .iter()
            .map(|&e| self.jump_rows(vertex, e, &slot_of))
            .collect();
        let data_scale = blocks.iter().map(|b| b.gross).sum::<f64>() + jumps.iter().map(|j| j.gross).sum::<f64>();
        Ok(Blocks {
            elements: patch.elements,
            blocks,
            jumps,
            interior,
            data_scale,
        })
    }

    /// Divergence and zero-trace rows of one triangle.
    fn block_rows(&self, blk: &ElementBlock) -> DMatrix<f64> {
        let (k, n) = (self.degree(), self.basis.dim());
        let nk = blk.shape.div.nrows();
        let mut rows = DMatrix::<f64>::zeros(blk.row_scale.len(), n);
        rows.view_mut((0, 0), (nk, n)).copy_from(&blk.shape.div);
        for (slot, &e) in blk.trace_edges.iter().enumerate() {
            let i = self.local_edge(blk.t, e);
            rows.view_mut((nk + slot * (k + 1), 0), (k + 1, n)).copy_from(&blk.shape.trace[i]);
        }
        for (mut row, s) in rows.row_iter_mut().zip(&blk.row_scale) {
            row *= *s;
        }
        rows
    }

    /// Dense form of the patch problem of `vertex`.
    pub fn problem(&self, vertex: usize) -> Result<LocalProblem> {
        let b = self.blocks(vertex)?;
        let n = self.basis.dim();
        let ne = b.elements.len();
        let n_rows: usize = b.blocks.iter().map(|x| x.row_scale.len()).sum::<usize>() + b.jumps.iter().map(|j| j.rhs.len()).sum::<usize>();
        let mut mass = DMatrix::<f64>::zeros(ne * n, ne * n);
        let mut cons = DMatrix::<f64>::zeros(n_rows, ne * n);
        let mut rhs = DVector::<f64>::zeros(n_rows);
        let mut row = 0;
        for (s, blk) in b.blocks.iter().enumerate() {
            mass.view_mut((s * n, s * n), (n, n)).copy_from(&(&blk.shape.mass * blk.area));
            let rows = self.block_rows(blk);
            let r = rows.nrows();
            cons.view_mut((row, s * n), (r, n)).copy_from(&rows);
            rhs.rows_mut(row, r).copy_from(&blk.rhs);
            row += r;
        }
        for j in &b.jumps {
            let r = j.rhs.len();
            cons.view_mut((row, j.plus.0 * n), (r, n)).copy_from(&j.plus.1);
            cons.view_mut((row, j.minus.0 * n), (r, n)).copy_from(&j.minus.1);
            rhs.rows_mut(row, r).copy_from(&j.rhs);
            row += r;
        }
        Ok(LocalProblem {
            vertex,
            elements: b.elements,
            mass,
            constraints: cons,
            rhs,
            interior: b.interior,
        })
    }

    /// Minimum-norm solution of the patch problem of `vertex`.
    pub fn solve(&self, vertex: usize) -> Result<PatchFlux> {
        let b = self.blocks(vertex)?;
        let n = self.basis.dim();
        let singular = |reason: String| Error::Equilibration { vertex, reason };

        // per triangle: c = w0 + W y, where Lᵀ w0 and Lᵀ W are the
        // minimum-norm particular solution and the null-space basis in z
        struct Reduced {
            w0: DVector<f64>,
            w: DMatrix<f64>,
            z0_norm2: f64,
        }
        let mut reduced = Vec::with_capacity(b.blocks.len());
        for blk in &b.blocks {
            let elim = self.elimination(&blk.shape, blk.mask);
            if elim.min_pivot <= RANK_TOLERANCE {
                return Err(singular(format!("constraints on triangle {} are rank deficient", blk.t)));
            }
            let dd = DVector::from_iterator(blk.rhs.len(), blk.rhs.iter().zip(&blk.row_scale).map(|(d, s)| d / s));
            let root = blk.area.sqrt();
            reduced.push(Reduced {
                w0: &elim.pinv_c * &dd,
                w: &elim.null_c / root,
                z0_norm2: blk.area * (&elim.pinv * &dd).norm_squared(),
            });
        }

        let offsets: Vec<usize> = reduced
            .iter()
            .scan(0, |acc, r| {
                let o = *acc;
                *acc += r.w.ncols();
                Some(o)
            })
            .collect();
        let n_free: usize = reduced.iter().map(|r| r.w.ncols()).sum();
        let m: usize = b.jumps.iter().map(|j| j.rhs.len()).sum();
        let mut a = DMatrix::<f64>::zeros(m, n_free);
        let mut r = DVector::<f64>::zeros(m);
        let mut row = 0;
        for j in &b.jumps {
            let len = j.rhs.len();
            r.rows_mut(row, len).copy_from(&j.rhs);
            for (slot, mat) in [&j.plus, &j.minus] {
                let red = &reduced[*slot];
                a.view_mut((row, offsets[*slot]), (len, red.w.ncols())).copy_from(&(mat * &red.w));
                let shift = mat * &red.w0;
                r.rows_mut(row, len).zip_apply(&shift, |x, s| *x -= s);
            }
            row += len;
        }

        let deficiency = usize::from(b.interior && m > 0);
        let sol = min_norm_particular(&a, &r, deficiency);
        if m > 0 && sol.min_pivot <= RANK_TOLERANCE {
            return Err(singular("inter-element jump constraints are rank deficient".into()));
        }
        let scale = b.data_scale.max(f64::MIN_POSITIVE);
        if b.interior && sol.residual > CONSISTENCY_TOLERANCE * scale {
            return Err(Error::Consistency {
                vertex,
                residual: sol.residual / scale,
            });
        }

        let mut coeffs = vec![0.0; b.blocks.len() * n];
        let mut norm2 = sol.x.norm_squared();
        for (s, red) in reduced.iter().enumerate() {
            let y = sol.x.rows(offsets[s], red.w.ncols());
            let c = &red.w0 + &red.w * y;
            coeffs[s * n..(s + 1) * n].copy_from_slice(c.as_slice());
            norm2 += red.z0_norm2;
        }

        // q·n ∈ P^k on an edge: its orthonormal Legendre moments give the RMS exactly
        let mut trace_residual: f64 = 0.0;
        for (s, blk) in b.blocks.iter().enumerate() {
            let c = DVector::from_column_slice(&coeffs[s * n..(s + 1) * n]);
            for &e in &blk.trace_edges {
                let rms = (&blk.shape.trace[self.local_edge(blk.t, e)] * &c).norm();
                trace_residual = trace_residual.max(rms);
            }
        }

        Ok(PatchFlux {
            vertex,
            elements: b.elements,
            coeffs,
            norm: norm2.sqrt(),
            compatibility_residual: sol.residual,
            trace_residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_is_orthonormal() {
        let rule = LineRule::get(12);
        let mut p = vec![0.0; 5];
        let mut gram = [[0.0; 5]; 5];
        for (&s, &w) in rule.points.iter().zip(&rule.weights) {
            legendre(4, s, &mut p);
            for i in 0..5 {
                for j in 0..5 {
                    gram[i][j] += w * p[i] * p[j];
                }
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i][j] - want).abs() < 1e-13);
            }
        }
    }
}
