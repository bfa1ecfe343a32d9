use super::{angles, Mesh};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// More than two triangles share the edge.
    OverfullEdge { edge: usize, triangle: usize },
    /// Both incident triangles traverse the edge in the same direction (overlap).
    EdgeOrientation { edge: usize },
    /// A vertex lies in the relative interior of an edge with one incident triangle.
    HangingNode { edge: usize, vertex: usize },
    /// Triangle areas do not sum to the domain area.
    AreaMismatch { total: f64, domain: f64 },
    NonPositiveArea { triangle: usize },
    BoundaryFlag { vertex: usize },
    MinAngle { triangle: usize, angle: f64 },
    Generation { triangle: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OverfullEdge { edge, triangle } => {
                write!(f, "edge {edge} has a third incident triangle {triangle}")
            }
            Violation::EdgeOrientation { edge } => {
                write!(f, "edge {edge} is traversed in the same direction by both triangles")
            }
            Violation::HangingNode { edge, vertex } => {
                write!(f, "hanging node: vertex {vertex} lies inside edge {edge}")
            }
            Violation::AreaMismatch { total, domain } => {
                write!(f, "triangle areas sum to {total}, domain area is {domain}")
            }
            Violation::NonPositiveArea { triangle } => write!(f, "triangle {triangle} has non-positive area"),
            Violation::BoundaryFlag { vertex } => {
                write!(f, "vertex {vertex} boundary flag disagrees with the boundary edges")
            }
            Violation::MinAngle { triangle, angle } => {
                write!(f, "triangle {triangle} has angle {angle} below the NVB floor")
            }
            Violation::Generation { triangle } => {
                write!(f, "triangle {triangle} generation disagrees with its parent chain")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformityReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl Mesh {
    /// Checks conformity, tiling, boundary flags, shape regularity and
    /// generation bookkeeping.
    pub fn conformity_check(&self) -> ConformityReport {
        let mut violations = Vec::new();

        for &(edge, triangle) in &self.overfull {
            violations.push(Violation::OverfullEdge { edge, triangle });
        }

        for e in self.edges() {
            if let Some(s) = e.second {
                let dir = |t: usize| {
                    let v = self.triangle(t).v;
                    let i = v.iter().position(|&x| x == e.v[0]).unwrap();
                    v[(i + 1) % 3] == e.v[1]
                };
                if dir(e.first) == dir(s) {
                    violations.push(Violation::EdgeOrientation { edge: e.id });
                }
            }
        }

        self.find_hanging_nodes(&mut violations);

        let total: f64 = self.triangles().iter().map(|t| t.area).sum();
        if (total - self.domain_area()).abs() > 1e-12 * self.domain_area().abs().max(1e-300) {
            violations.push(Violation::AreaMismatch {
                total,
                domain: self.domain_area(),
            });
        }

        let mut touched = vec![false; self.n_vertices()];
        for e in self.edges().iter().filter(|e| e.is_boundary()) {
            touched[e.v[0]] = true;
            touched[e.v[1]] = true;
        }
        for v in self.vertices() {
            if v.on_boundary != touched[v.id] {
                violations.push(Violation::BoundaryFlag { vertex: v.id });
            }
        }

        let floor = self.angle_floor() - 1e-12;
        for t in self.triangles() {
            if t.area <= 0.0 {
                violations.push(Violation::NonPositiveArea { triangle: t.id });
            }
            let [p, q, r] = self.coords(t.id);
            let a = angles(p, q, r).into_iter().fold(f64::INFINITY, f64::min);
            if a < floor {
                violations.push(Violation::MinAngle { triangle: t.id, angle: a });
            }
            let mut depth = 0;
            let mut n = t.node;
            while let Some(p) = self.history()[n].parent {
                let (child, parent) = (&self.history()[n], &self.history()[p]);
                if child.generation != parent.generation + 1 {
                    break;
                }
                depth += 1;
                n = p;
            }
            let root = &self.history()[n];
            if root.parent.is_some() || depth + root.generation != t.generation {
                violations.push(Violation::Generation { triangle: t.id });
            }
        }

        ConformityReport {
            ok: violations.is_empty(),
            violations,
        }
    }

    fn find_hanging_nodes(&self, violations: &mut Vec<Violation>) {
        let boundary: Vec<usize> = self.edges().iter().filter(|e| e.is_boundary()).map(|e| e.id).collect();
        if boundary.is_empty() || self.n_vertices() == 0 {
            return;
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in self.vertices() {
            lo = [lo[0].min(v.x), lo[1].min(v.y)];
            hi = [hi[0].max(v.x), hi[1].max(v.y)];
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300);
        let cells = (self.n_vertices() as f64).sqrt().ceil().max(1.0);
        let size = span / cells;
        let cell = |x: f64, y: f64| (((x - lo[0]) / size) as i64, ((y - lo[1]) / size) as i64);
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for v in self.vertices() {
            grid.entry(cell(v.x, v.y)).or_default().push(v.id);
        }
        for e in boundary {
            let [a, b] = self.edge(e).v;
            let (p, q) = (self.vertex(a).point(), self.vertex(b).point());
            let len = self.edge_length(e);
            let tol = 1e-12 * len;
            let (c0, c1) = (cell(p[0].min(q[0]), p[1].min(q[1])), cell(p[0].max(q[0]), p[1].max(q[1])));
            let mut found: Vec<usize> = Vec::new();
            for i in (c0.0 - 1)..=(c1.0 + 1) {
                for j in (c0.1 - 1)..=(c1.1 + 1) {
                    let Some(list) = grid.get(&(i, j)) else { continue };
                    for &w in list {
                        if w == a || w == b {
                            continue;
                        }
                        let r = self.vertex(w).point();
                        let d = [q[0] - p[0], q[1] - p[1]];
                        let s = ((r[0] - p[0]) * d[0] + (r[1] - p[1]) * d[1]) / (len * len);
                        let off = ((r[0] - p[0]) * d[1] - (r[1] - p[1]) * d[0]).abs() / len;
                        if s > 0.0 && s < 1.0 && off <= tol {
                            found.push(w);
                        }
                    }
                }
            }
            found.sort_unstable();
            for vertex in found {
                violations.push(Violation::HangingNode { edge: e, vertex });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_meshes_conform() {
        for m in [
            Mesh::criss_cross_square(),
            Mesh::l_shape(),
            Mesh::uniform_square(4),
            Mesh::union_jack_square(4),
        ] {
            let r = m.conformity_check();
            assert!(r.ok, "{:?}", r.violations);
        }
    }

    #[test]
    fn hanging_node_is_reported_with_its_edge() {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let m = Mesh::new(pts, vec![[0, 2, 3], [0, 1, 4], [1, 2, 4]]).unwrap();
        let r = m.conformity_check();
        assert!(!r.ok);
        let diag = m.edges().iter().find(|e| e.v == [0, 2]).unwrap().id;
        assert!(r
            .violations
            .contains(&Violation::HangingNode { edge: diag, vertex: 4 }));
    }

    #[test]
    fn overlapping_triangles_break_the_area_sum() {
        let pts = vec![[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [0.5, 0.5], [1.5, 0.5], [0.5, 1.5]];
        // the union of these two triangles is the big one, area 2
        let m = Mesh::new(pts, vec![[0, 1, 2], [3, 4, 5]])
            .unwrap()
            .with_domain_area(2.0);
        let r = m.conformity_check();
        let total: f64 = m.triangles().iter().map(|t| t.area).sum();
        assert!((total - 2.5).abs() < 1e-15);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::AreaMismatch { .. })));
    }

    #[test]
    fn messages_name_the_offender() {
        let v = Violation::HangingNode { edge: 7, vertex: 3 };
        assert!(v.to_string().contains("edge 7"));
    }
}
