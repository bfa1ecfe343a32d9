use super::{edge_key, Mesh, Node, Point};
use crate::error::{Error, Result};
use std::collections::HashMap;

const EMPTY: usize = usize::MAX;

/// Closure chains longer than this indicate a labeling for which recursive
/// bisection does not terminate.
const MAX_CLOSURE_DEPTH: usize = 10_000;

struct Refiner {
    points: Vec<Point>,
    flags: Vec<bool>,
    history: Vec<Node>,
    /// Leaf nodes incident to each edge of the current (transient) mesh.
    edge_leaves: HashMap<(usize, usize), [usize; 2]>,
    midpoints: HashMap<(usize, usize), usize>,
}

impl Refiner {
    fn new(mesh: &Mesh) -> Self {
        let mut edge_leaves = HashMap::with_capacity(2 * mesh.n_edges());
        for e in mesh.edges() {
            let first = mesh.triangle(e.first).node;
            let second = e.second.map_or(EMPTY, |t| mesh.triangle(t).node);
            edge_leaves.insert((e.v[0], e.v[1]), [first, second]);
        }
        Refiner {
            points: mesh.vertices().iter().map(|v| v.point()).collect(),
            flags: mesh.vertices().iter().map(|v| v.on_boundary).collect(),
            history: mesh.history().to_vec(),
            edge_leaves,
            midpoints: HashMap::new(),
        }
    }

    fn attach(&mut self, key: (usize, usize), node: usize) {
        let slots = self.edge_leaves.entry(key).or_insert([EMPTY, EMPTY]);
        if slots[0] == EMPTY {
            slots[0] = node;
        } else {
            slots[1] = node;
        }
    }

    fn detach(&mut self, key: (usize, usize), node: usize) {
        if let Some(slots) = self.edge_leaves.get_mut(&key) {
            for s in slots.iter_mut() {
                if *s == node {
                    *s = EMPTY;
                }
            }
            if slots[0] == EMPTY && slots[1] == EMPTY {
                self.edge_leaves.remove(&key);
            }
        }
    }

    fn neighbor(&self, key: (usize, usize), node: usize) -> Option<usize> {
        self.edge_leaves
            .get(&key)
            .and_then(|s| s.iter().copied().find(|&n| n != EMPTY && n != node))
    }

    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = edge_key(a, b);
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let on_boundary = self
            .edge_leaves
            .get(&key)
            .is_some_and(|s| s.iter().filter(|&&n| n != EMPTY).count() == 1);
        let (p, q) = (self.points[a], self.points[b]);
        let m = self.points.len();
        self.points.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        self.flags.push(on_boundary);
        self.midpoints.insert(key, m);
        m
    }

    /// Bisects a leaf through the midpoint of its refinement edge.
    fn split(&mut self, t: usize) {
        let [a, b, c] = self.history[t].v;
        let m = self.midpoint(a, b);
        let generation = self.history[t].generation + 1;
        let first = self.history.len();
        let children = [[c, a, m], [b, c, m]];
        for v in children {
            self.history.push(Node {
                v,
                parent: Some(t),
                generation,
                children: None,
            });
        }
        self.history[t].children = Some([first, first + 1]);
        for key in [edge_key(a, b), edge_key(b, c), edge_key(c, a)] {
            self.detach(key, t);
        }
        for (offset, v) in children.iter().enumerate() {
            for i in 0..3 {
                self.attach(edge_key(v[i], v[(i + 1) % 3]), first + offset);
            }
        }
    }

    /// Bisects `start`, first bisecting neighbors whose refinement edge differs
    /// so that the result stays conforming.
    fn refine(&mut self, start: usize) -> Result<()> {
        let mut stack = vec![start];
        while let Some(&t) = stack.last() {
            if self.history[t].children.is_some() {
                stack.pop();
                continue;
            }
            let [a, b, _] = self.history[t].v;
            let key = edge_key(a, b);
            match self.neighbor(key, t) {
                None => {
                    self.split(t);
                    stack.pop();
                }
                Some(n) => {
                    let nv = self.history[n].v;
                    if edge_key(nv[0], nv[1]) == key {
                        self.split(t);
                        self.split(n);
                        stack.pop();
                    } else if stack.contains(&n) || stack.len() > MAX_CLOSURE_DEPTH {
                        return Err(Error::Mesh(
                            "refinement-edge labeling admits no terminating bisection closure".into(),
                        ));
                    } else {
                        stack.push(n);
                    }
                }
            }
        }
        Ok(())
    }
}

impl Mesh {
    /// Newest-vertex bisection: each marked triangle is bisected `b` times
    /// (its full `b`-level descendant tree is created), followed by the
    /// closure bisections needed for conformity. `self` is left untouched.
    pub fn bisect(&self, marked: &[usize], b: usize) -> Result<Mesh> {
        if b == 0 {
            return Err(Error::Argument("number of bisections must be at least 1".into()));
        }
        if let Some(&bad) = marked.iter().find(|&&t| t >= self.n_triangles()) {
            return Err(Error::Argument(format!(
                "triangle {bad} out of range (mesh has {})",
                self.n_triangles()
            )));
        }
        let mut frontier: Vec<usize> = marked.iter().map(|&t| self.triangle(t).node).collect();
        frontier.sort_unstable();
        frontier.dedup();

        let mut refiner = Refiner::new(self);
        for _ in 0..b {
            let mut next = Vec::with_capacity(2 * frontier.len());
            for &node in &frontier {
                if refiner.history[node].children.is_none() {
                    refiner.refine(node)?;
                }
                next.extend(refiner.history[node].children.expect("bisected"));
            }
            frontier = next;
        }

        let leaves: Vec<usize> = refiner
            .history
            .iter()
            .enumerate()
            .filter(|(_, n)| n.children.is_none())
            .map(|(i, _)| i)
            .collect();
        let level = if marked.is_empty() { self.level() } else { self.level() + 1 };
        let mesh = Mesh::assemble(
            refiner.points,
            Some(refiner.flags),
            refiner.history,
            &leaves,
            self.lineage(),
            level,
            self.angle_floor(),
        )?;
        Ok(mesh.with_domain_area(self.domain_area()))
    }

    /// One bisection of every triangle.
    pub fn refine_uniform(&self) -> Result<Mesh> {
        let all: Vec<usize> = (0..self.n_triangles()).collect();
        self.bisect(&all, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle_bisects_into_two() {
        let m = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[1, 2, 0]]).unwrap();
        let f = m.bisect(&[0], 1).unwrap();
        assert_eq!(f.n_triangles(), 2);
        assert!(f.triangles().iter().all(|t| t.generation == 1));
        assert!(f.triangles().iter().all(|t| t.parent == Some(0)));
        assert_eq!(f.n_vertices(), 4);
        assert_eq!(f.vertex(3).point(), [0.5, 0.5]);
        assert!(f.vertex(3).on_boundary);
        // input unchanged
        assert_eq!(m.n_triangles(), 1);
    }

    #[test]
    fn closure_bisects_compatible_neighbor() {
        // two triangles sharing the diagonal, which is the refinement edge of both
        let m = Mesh::uniform_square(1);
        assert_eq!(m.n_triangles(), 2);
        let f = m.bisect(&[0], 1).unwrap();
        assert_eq!(f.n_triangles(), 4);
        assert!(f.conformity_check().ok);
    }

    #[test]
    fn closure_recurses_through_incompatible_neighbor() {
        // hand-executed closure: refining T0 across the shared edge (1,2)
        // requires first bisecting T1 along its own refinement edge (2,3).
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.2, 1.2]];
        // T0: refinement edge (1,2), newest vertex 0
        // T1: refinement edge (2,3) opposite vertex 1 -- not shared with T0
        let m = Mesh::new(pts, vec![[1, 2, 0], [2, 3, 1]]).unwrap();
        let f = m.bisect(&[0], 1).unwrap();
        // T1 -> 2 children; the child containing (1,2) is bisected again; T0 -> 2
        assert_eq!(f.n_triangles(), 5);
        assert!(f.conformity_check().ok, "{:?}", f.conformity_check().violations);
        let gens: Vec<u32> = f.triangles().iter().map(|t| t.generation).collect();
        assert_eq!(gens.iter().filter(|&&g| g == 2).count(), 2);
    }

    #[test]
    fn uniform_marking_doubles() {
        for m in [Mesh::criss_cross_square(), Mesh::l_shape(), Mesh::uniform_square(3)] {
            let f = m.refine_uniform().unwrap();
            assert_eq!(f.n_triangles(), 2 * m.n_triangles());
            assert!(f.triangles().iter().all(|t| t.generation == 1));
            let g = f.refine_uniform().unwrap();
            assert_eq!(g.n_triangles(), 4 * m.n_triangles());
        }
    }

    #[test]
    fn b_levels_create_full_subtree() {
        let m = Mesh::l_shape();
        let f = m.bisect(&[3], 3).unwrap();
        let desc = f
            .triangles()
            .iter()
            .filter(|t| {
                let mut n = t.node;
                while let Some(p) = f.history()[n].parent {
                    n = p;
                }
                n == m.triangle(3).node
            })
            .count();
        assert!(desc >= 8);
        assert!(f.conformity_check().ok);
    }

    #[test]
    fn rejects_bad_arguments() {
        let m = Mesh::criss_cross_square();
        assert!(matches!(m.bisect(&[7], 1), Err(Error::Argument(_))));
        assert!(matches!(m.bisect(&[0], 0), Err(Error::Argument(_))));
    }

    #[test]
    fn empty_marking_returns_same_mesh() {
        let m = Mesh::l_shape();
        let f = m.bisect(&[], 2).unwrap();
        assert_eq!(f.n_triangles(), m.n_triangles());
        assert_eq!(f.level(), m.level());
    }
}
