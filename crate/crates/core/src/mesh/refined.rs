use super::Mesh;
use crate::error::{Error, Result};

/// Coarse triangles all of whose fine descendants are at least `j`
/// generations younger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinedSet {
    pub j: usize,
    /// Coarse triangle ids, ascending.
    pub elements: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteriorNodeReport {
    pub checked: usize,
    /// Coarse triangles lacking a fine vertex inside themselves or inside one of their edges.
    pub failures: Vec<usize>,
}

impl InteriorNodeReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Errors unless `fine` was produced from `coarse` by bisection.
pub(crate) fn check_lineage(coarse: &Mesh, fine: &Mesh) -> Result<()> {
    let (c, f) = (coarse.history(), fine.history());
    let nested = coarse.lineage() == fine.lineage()
        && c.len() <= f.len()
        && c.iter().zip(f).all(|(a, b)| {
            a.v == b.v
                && a.parent == b.parent
                && a.generation == b.generation
                && (a.children.is_none() || a.children == b.children)
        });
    if nested {
        Ok(())
    } else {
        Err(Error::Lineage("fine mesh is not a bisection descendant of the coarse mesh".into()))
    }
}

/// For each history node, the minimum number of further bisections among its
/// leaves in `fine`.
fn min_depth(fine: &Mesh) -> Vec<usize> {
    let h = fine.history();
    let mut depth = vec![0usize; h.len()];
    // children always follow their parent in the history
    for i in (0..h.len()).rev() {
        if let Some([a, b]) = h[i].children {
            depth[i] = 1 + depth[a].min(depth[b]);
        }
    }
    depth
}

/// The coarse triangle containing each fine triangle.
pub fn ancestors(coarse: &Mesh, fine: &Mesh) -> Result<Vec<usize>> {
    check_lineage(coarse, fine)?;
    let h = fine.history();
    let mut owner = vec![usize::MAX; h.len()];
    for t in coarse.triangles() {
        owner[t.node] = t.id;
    }
    for i in 0..h.len() {
        if owner[i] == usize::MAX {
            if let Some(p) = h[i].parent {
                owner[i] = owner[p];
            }
        }
    }
    Ok(fine.triangles().iter().map(|t| owner[t.node]).collect())
}

/// `R^j`: coarse triangles every fine descendant of which has gained at
/// least `j` generations.
pub fn refined_set(coarse: &Mesh, fine: &Mesh, j: usize) -> Result<RefinedSet> {
    if j == 0 {
        return Err(Error::Argument("refined-set order must be at least 1".into()));
    }
    check_lineage(coarse, fine)?;
    let depth = min_depth(fine);
    let elements = coarse
        .triangles()
        .iter()
        .filter(|t| depth[t.node] >= j)
        .map(|t| t.id)
        .collect();
    Ok(RefinedSet { j, elements })
}

/// Checks geometrically that each listed coarse triangle and each of its
/// edges contain a fine vertex in their relative interior.
pub fn interior_node_property(coarse: &Mesh, fine: &Mesh, elements: &[usize]) -> Result<InteriorNodeReport> {
    let owner = ancestors(coarse, fine)?;
    let mut vertices_in: Vec<Vec<usize>> = vec![Vec::new(); coarse.n_triangles()];
    for t in fine.triangles() {
        vertices_in[owner[t.id]].extend_from_slice(&t.v);
    }
    let mut failures = Vec::new();
    for &c in elements {
        if c >= coarse.n_triangles() {
            return Err(Error::Argument(format!("triangle {c} out of range")));
        }
        let corners = coarse.triangle(c).v;
        let mut list = std::mem::take(&mut vertices_in[c]);
        list.sort_unstable();
        list.dedup();
        let tol = 1e-12;
        let mut inside = false;
        let mut on_edge = [false; 3];
        for &w in &list {
            // vertex ids survive bisection, so coarse corners keep their ids
            if corners.contains(&w) {
                continue;
            }
            let lam = coarse.barycentric(c, fine.vertex(w).point());
            let zeros: Vec<usize> = (0..3).filter(|&i| lam[i].abs() <= tol).collect();
            match zeros.as_slice() {
                [] if lam.iter().all(|&l| l > tol) => inside = true,
                [i] => on_edge[*i] = true,
                _ => {}
            }
        }
        if !(inside && on_edge.iter().all(|&e| e)) {
            failures.push(c);
        }
    }
    Ok(InteriorNodeReport {
        checked: elements.len(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_refinement_gives_empty_set() {
        let m = Mesh::l_shape();
        assert!(refined_set(&m, &m, 1).unwrap().elements.is_empty());
    }

    #[test]
    fn uniform_refinement_gives_all_then_none() {
        let m = Mesh::criss_cross_square();
        let f = m.refine_uniform().unwrap();
        assert_eq!(refined_set(&m, &f, 1).unwrap().elements, vec![0, 1, 2, 3]);
        assert!(refined_set(&m, &f, 2).unwrap().elements.is_empty());
    }

    #[test]
    fn unrelated_meshes_are_rejected() {
        let a = Mesh::l_shape();
        let b = Mesh::l_shape();
        assert!(matches!(refined_set(&a, &b, 1), Err(Error::Lineage(_))));
        // reversed order is not a descendant either
        let f = a.refine_uniform().unwrap();
        assert!(matches!(refined_set(&f, &a, 1), Err(Error::Lineage(_))));
    }

    #[test]
    fn ancestors_cover_coarse_areas() {
        let m = Mesh::l_shape();
        let f = m.bisect(&[0, 5], 3).unwrap();
        let owner = ancestors(&m, &f).unwrap();
        let mut area = vec![0.0; m.n_triangles()];
        for t in f.triangles() {
            area[owner[t.id]] += t.area;
        }
        for t in m.triangles() {
            assert!((area[t.id] - t.area).abs() < 1e-14);
        }
    }

    #[test]
    fn one_bisection_has_no_interior_node() {
        let m = Mesh::criss_cross_square();
        let f = m.bisect(&[0], 1).unwrap();
        let r = interior_node_property(&m, &f, &[0]).unwrap();
        assert_eq!(r.failures, vec![0]);
    }

    #[test]
    fn three_bisections_on_an_edge_free_triangle() {
        // two rounds cut every edge of a triangle; the third puts a vertex inside
        let m = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[1, 2, 0]]).unwrap();
        let f = m.bisect(&[0], 3).unwrap();
        assert!(interior_node_property(&m, &f, &[0]).unwrap().ok());
        let g = m.bisect(&[0], 2).unwrap();
        assert!(!interior_node_property(&m, &g, &[0]).unwrap().ok());
    }
}
