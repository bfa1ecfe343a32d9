use super::lagrange::LagrangeElement;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use std::sync::Arc;

/// Continuous `P^k` Lagrange space over a mesh.
///
/// Global dofs: one per vertex (vertex id), then `k−1` per edge ordered from
/// the endpoint with the smaller vertex id, then interior dofs per triangle.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    element: LagrangeElement,
    /// `dofs[t * n_local + n]`
    dofs: Vec<usize>,
    boundary: Vec<bool>,
    n_dofs: usize,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Arc<FeSpace>> {
        if !(1..=4).contains(&degree) {
            return Err(Error::Argument(format!("polynomial degree must be 1..=4, got {degree}")));
        }
        let k = degree;
        let element = LagrangeElement::new(k);
        let nl = element.n_local();
        let ni = element.n_interior();
        let (nv, ne) = (mesh.n_vertices(), mesh.n_edges());
        let edge_base = nv;
        let interior_base = nv + ne * (k - 1);
        let n_dofs = interior_base + mesh.n_triangles() * ni;

        let mut dofs = Vec::with_capacity(mesh.n_triangles() * nl);
        for t in mesh.triangles() {
            let v = t.v;
            dofs.extend_from_slice(&v);
            let te = mesh.triangle_edges(t.id);
            for i in 0..3 {
                let forward = v[(i + 1) % 3] < v[(i + 2) % 3];
                for s in 1..k {
                    let offset = if forward { s - 1 } else { k - 1 - s };
                    dofs.push(edge_base + te[i] * (k - 1) + offset);
                }
            }
            for j in 0..ni {
                dofs.push(interior_base + t.id * ni + j);
            }
        }

        let mut boundary = vec![false; n_dofs];
        for v in mesh.vertices() {
            boundary[v.id] = v.on_boundary;
        }
        for e in mesh.edges().iter().filter(|e| e.is_boundary()) {
            for s in 0..k - 1 {
                boundary[edge_base + e.id * (k - 1) + s] = true;
            }
        }

        Ok(Arc::new(FeSpace {
            mesh,
            element,
            dofs,
            boundary,
            n_dofs,
        }))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.element.degree
    }

    pub fn element(&self) -> &LagrangeElement {
        &self.element
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.element.n_local()
    }

    /// Global dofs of triangle `t` in local node order.
    pub fn element_dofs(&self, t: usize) -> &[usize] {
        let nl = self.n_local();
        &self.dofs[t * nl..(t + 1) * nl]
    }

    pub fn is_boundary_dof(&self, d: usize) -> bool {
        self.boundary[d]
    }

    pub fn boundary_dofs(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// Position of every global Lagrange node.
    pub fn dof_points(&self) -> Vec<Point> {
        let mut pts = vec![[f64::NAN; 2]; self.n_dofs];
        for t in 0..self.mesh.n_triangles() {
            for (n, &d) in self.element_dofs(t).iter().enumerate() {
                pts[d] = self.mesh.point_at(t, self.element.node_lambda(n));
            }
        }
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_counts() {
        let m = Arc::new(Mesh::uniform_square(3));
        for k in 1..=4 {
            let s = FeSpace::new(m.clone(), k).unwrap();
            let expect = m.n_vertices() + (k - 1) * m.n_edges() + m.n_triangles() * (k - 1) * k.saturating_sub(2) / 2;
            assert_eq!(s.n_dofs(), expect);
        }
        assert!(FeSpace::new(m, 5).is_err());
    }

    #[test]
    fn shared_edge_nodes_coincide() {
        let m = Arc::new(Mesh::l_shape().bisect(&[1, 4], 2).unwrap());
        for k in 2..=4 {
            let s = FeSpace::new(m.clone(), k).unwrap();
            // every dof sits at one physical point, whichever element names it
            let pts = s.dof_points();
            for t in 0..m.n_triangles() {
                for (n, &d) in s.element_dofs(t).iter().enumerate() {
                    let p = m.point_at(t, s.element().node_lambda(n));
                    assert!((p[0] - pts[d][0]).abs() < 1e-14 && (p[1] - pts[d][1]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn boundary_dofs_lie_on_the_boundary() {
        let m = Arc::new(Mesh::uniform_square(2));
        let s = FeSpace::new(m, 3).unwrap();
        let pts = s.dof_points();
        for (d, p) in pts.iter().enumerate() {
            let on = p[0].abs() < 1e-14 || p[1].abs() < 1e-14 || (p[0] - 1.0).abs() < 1e-14 || (p[1] - 1.0).abs() < 1e-14;
            assert_eq!(s.is_boundary_dof(d), on, "dof {d} at {p:?}");
        }
    }
}
