use super::lagrange::{tabulate, ElementGeometry};
use super::space::FeSpace;
use super::data_rule_degree;
use crate::mesh::Point;

/// Compressed sparse row matrix with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; duplicates are summed in
    /// insertion order, so equal inputs give bitwise-equal matrices.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }
}

/// Element stiffness matrix `(∇φ_a, ∇φ_b)_T`, row-major.
pub fn element_stiffness(space: &FeSpace, t: usize) -> Vec<f64> {
    let k = space.degree();
    let tab = tabulate(k, 2 * k);
    let geo = ElementGeometry::new(space.mesh(), t);
    let nl = tab.n_local;
    let mut grads = vec![[0.0; 2]; nl];
    let mut a = vec![0.0; nl * nl];
    for (q, w) in tab.rule.weights.iter().enumerate() {
        for (n, g) in grads.iter_mut().enumerate() {
            *g = geo.gradient(tab.dlam[q * nl + n]);
        }
        let wq = w * geo.area;
        for i in 0..nl {
            for j in 0..nl {
                a[i * nl + j] += wq * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
            }
        }
    }
    // exact symmetry
    for i in 0..nl {
        for j in 0..i {
            let s = 0.5 * (a[i * nl + j] + a[j * nl + i]);
            a[i * nl + j] = s;
            a[j * nl + i] = s;
        }
    }
    a
}

/// Full stiffness matrix, boundary dofs included.
pub fn assemble_stiffness(space: &FeSpace) -> CsrMatrix {
    let nl = space.n_local();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); space.n_dofs()];
    for t in 0..space.mesh().n_triangles() {
        let a = element_stiffness(space, t);
        let dofs = space.element_dofs(t);
        for (i, &di) in dofs.iter().enumerate() {
            for (j, &dj) in dofs.iter().enumerate() {
                rows[di].push((dj, a[i * nl + j]));
            }
        }
    }
    CsrMatrix::from_rows(rows)
}

/// Load vector `(f, φ_a)` on the data rule.
pub fn assemble_load(space: &FeSpace, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let tab = tabulate(space.degree(), data_rule_degree(space.degree()));
    let nl = tab.n_local;
    let mut b = vec![0.0; space.n_dofs()];
    let mut local = vec![0.0; nl];
    for t in 0..space.mesh().n_triangles() {
        let geo = ElementGeometry::new(space.mesh(), t);
        local.fill(0.0);
        for (q, (&lam, w)) in tab.rule.points.iter().zip(&tab.rule.weights).enumerate() {
            let fq = w * geo.area * f(geo.point(lam));
            for (n, l) in local.iter_mut().enumerate() {
                *l += fq * tab.values[q * nl + n];
            }
        }
        for (&d, l) in space.element_dofs(t).iter().zip(&local) {
            b[d] += l;
        }
    }
    b
}

/// Restriction of a system to the free (non-boundary) dofs.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Global dof of each reduced unknown.
    pub free: Vec<usize>,
}

/// Eliminates homogeneous Dirichlet dofs by dropping their rows and columns.
pub fn reduce(space: &FeSpace, a: &CsrMatrix, b: &[f64]) -> ReducedSystem {
    let mut index = vec![usize::MAX; space.n_dofs()];
    let mut free = Vec::new();
    for d in 0..space.n_dofs() {
        if !space.is_boundary_dof(d) {
            index[d] = free.len();
            free.push(d);
        }
    }
    let rows = free
        .iter()
        .map(|&d| {
            a.row(d)
                .filter(|&(c, _)| index[c] != usize::MAX)
                .map(|(c, v)| (index[c], v))
                .collect()
        })
        .collect();
    ReducedSystem {
        matrix: CsrMatrix::from_rows(rows),
        rhs: free.iter().map(|&d| b[d]).collect(),
        free,
    }
}
