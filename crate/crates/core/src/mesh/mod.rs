//! Conforming triangle meshes refined by newest-vertex bisection.
//!
//! Every triangle stores its vertices as `[v0, v1, v2]` in counterclockwise
//! order; the refinement edge is `(v0, v1)`, opposite the newest vertex `v2`.
//! Local edge `i` is the edge opposite local vertex `i`.
//!
//! A mesh carries its complete bisection history (a forest rooted at the
//! initial triangulation), which is what makes generations, refined sets and
//! prolongation between nested meshes computable.

mod bisect;
mod builtin;
mod check;
pub mod io;
mod refined;

pub use check::{ConformityReport, Violation};
pub use refined::{ancestors, interior_node_property, refined_set, InteriorNodeReport, RefinedSet};

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub on_boundary: bool,
}

impl Vertex {
    pub fn point(&self) -> Point {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub id: usize,
    /// Counterclockwise vertex ids; the refinement edge is `(v[0], v[1])`.
    pub v: [usize; 3],
    /// Number of bisections separating this triangle from the initial mesh.
    pub generation: u32,
    /// History node of the parent triangle.
    pub parent: Option<usize>,
    /// History node of this triangle.
    pub node: usize,
    pub area: f64,
    /// Longest edge length.
    pub diameter: f64,
}

/// A mesh edge with its incident triangles ordered by triangle id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub id: usize,
    /// Vertex ids, smaller first.
    pub v: [usize; 2],
    /// Incident triangle with the smaller id (`T⁺`).
    pub first: usize,
    /// Second incident triangle (`T⁻`); `None` on the boundary.
    pub second: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.second.is_none()
    }

    pub fn contains(&self, vertex: usize) -> bool {
        self.v[0] == vertex || self.v[1] == vertex
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Node {
    pub v: [usize; 3],
    pub parent: Option<usize>,
    pub generation: u32,
    pub children: Option<[usize; 2]>,
}

/// The vertex patch `ω_ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub vertex: usize,
    /// Triangles having `vertex` as a corner, ascending ids.
    pub elements: Vec<usize>,
    /// Edges shared by two patch triangles.
    pub interior_edges: Vec<usize>,
    /// Edges on `∂ω_ν`.
    pub boundary_edges: Vec<usize>,
}

static NEXT_LINEAGE: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vertex>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    vertex_offsets: Vec<usize>,
    vertex_triangles: Vec<usize>,
    /// Incidences beyond the second one on an edge, kept for diagnostics.
    overfull: Vec<(usize, usize)>,
    history: Vec<Node>,
    lineage: u64,
    level: usize,
    domain_area: f64,
    angle_floor: f64,
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn signed_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Interior angles of the triangle `(p, q, r)`.
pub(crate) fn angles(p: Point, q: Point, r: Point) -> [f64; 3] {
    let angle = |a: Point, b: Point, c: Point| {
        let u = [b[0] - a[0], b[1] - a[1]];
        let w = [c[0] - a[0], c[1] - a[1]];
        let cross = u[0] * w[1] - u[1] * w[0];
        let dot = u[0] * w[0] + u[1] * w[1];
        cross.abs().atan2(dot)
    };
    [angle(p, q, r), angle(q, r, p), angle(r, p, q)]
}

/// Smallest angle found among the NVB descendants of `(p, q, r)` (refinement
/// edge `pq`) down to `depth` generations.
fn nvb_min_angle(p: Point, q: Point, r: Point, depth: usize) -> f64 {
    let here = angles(p, q, r).into_iter().fold(f64::INFINITY, f64::min);
    if depth == 0 {
        return here;
    }
    let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    here.min(nvb_min_angle(r, p, m, depth - 1))
        .min(nvb_min_angle(q, r, m, depth - 1))
}

impl Mesh {
    /// Builds a mesh from coordinates and vertex triples, keeping the given
    /// refinement-edge labels (edge opposite the third vertex). Clockwise
    /// triangles are reoriented by swapping their first two vertices.
    pub fn new(points: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(points, None, None, triangles)
    }

    /// Builds a mesh whose refinement edges are the longest edges of each
    /// triangle (ties broken by the smallest opposite vertex id).
    pub fn with_longest_edge_labels(points: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut relabeled = Vec::with_capacity(triangles.len());
        for t in &triangles {
            for &i in t {
                if i >= points.len() {
                    return Err(Error::Argument(format!("vertex id {i} out of range")));
                }
            }
            // choose the opposite vertex of the longest edge
            let mut best = 0;
            let mut best_len = -1.0;
            for k in 0..3 {
                let a = points[t[(k + 1) % 3]];
                let b = points[t[(k + 2) % 3]];
                let len = dist(a, b);
                let better = len > best_len * (1.0 + 1e-12)
                    || ((len - best_len).abs() <= 1e-12 * len && t[k] < t[best]);
                if better {
                    best = k;
                    best_len = len;
                }
            }
            relabeled.push([t[(best + 1) % 3], t[(best + 2) % 3], t[best]]);
        }
        Self::build(points, None, None, relabeled)
    }

    /// Builds a mesh with explicit boundary flags and generations (as read
    /// from a file); the flags are checked by [`Mesh::conformity_check`], not
    /// recomputed.
    pub(crate) fn with_flags(
        points: Vec<Point>,
        flags: Vec<bool>,
        triangles: Vec<[usize; 3]>,
        generations: Vec<u32>,
    ) -> Result<Self> {
        Self::build(points, Some(flags), Some(generations), triangles)
    }

    fn build(
        points: Vec<Point>,
        flags: Option<Vec<bool>>,
        generations: Option<Vec<u32>>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self> {
        let mut history = Vec::with_capacity(triangles.len());
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= points.len()) {
                return Err(Error::Argument(format!("triangle {i} references a missing vertex")));
            }
            let a = signed_area(points[t[0]], points[t[1]], points[t[2]]);
            if a == 0.0 || !a.is_finite() {
                return Err(Error::Mesh(format!("triangle {i} is degenerate")));
            }
            let v = if a > 0.0 { *t } else { [t[1], t[0], t[2]] };
            history.push(Node {
                v,
                parent: None,
                generation: generations.as_ref().map_or(0, |g| g[i]),
                children: None,
            });
        }
        let angle_floor = history
            .iter()
            .map(|n| nvb_min_angle(points[n.v[0]], points[n.v[1]], points[n.v[2]], 4))
            .fold(f64::INFINITY, f64::min);
        let leaves: Vec<usize> = (0..history.len()).collect();
        let mut mesh = Self::assemble(points, flags, history, &leaves, 0, 0, angle_floor)?;
        mesh.lineage = NEXT_LINEAGE.fetch_add(1, Ordering::Relaxed);
        mesh.domain_area = mesh.boundary_enclosed_area();
        Ok(mesh)
    }

    /// Rebuilds all derived connectivity from coordinates and leaf nodes.
    pub(crate) fn assemble(
        points: Vec<Point>,
        flags: Option<Vec<bool>>,
        history: Vec<Node>,
        leaves: &[usize],
        lineage: u64,
        level: usize,
        angle_floor: f64,
    ) -> Result<Self> {
        let nv = points.len();
        let mut triangles = Vec::with_capacity(leaves.len());
        for (id, &node) in leaves.iter().enumerate() {
            let n = &history[node];
            let [p, q, r] = n.v.map(|i| points[i]);
            let area = signed_area(p, q, r);
            let diameter = dist(p, q).max(dist(q, r)).max(dist(r, p));
            triangles.push(Triangle {
                id,
                v: n.v,
                generation: n.generation,
                parent: n.parent,
                node,
                area,
                diameter,
            });
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len() / 2 + 8);
        let mut edges: Vec<Edge> = Vec::with_capacity(3 * triangles.len() / 2 + 8);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        let mut overfull = Vec::new();
        for t in &triangles {
            let mut te = [0usize; 3];
            for (i, slot) in te.iter_mut().enumerate() {
                let key = edge_key(t.v[(i + 1) % 3], t.v[(i + 2) % 3]);
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        id: edges.len(),
                        v: [key.0, key.1],
                        first: t.id,
                        second: None,
                    });
                    edges.len() - 1
                });
                if edges[e].first != t.id {
                    if edges[e].second.is_none() {
                        edges[e].second = Some(t.id);
                    } else {
                        overfull.push((e, t.id));
                    }
                }
                *slot = e;
            }
            triangle_edges.push(te);
        }

        let mut counts = vec![0usize; nv + 1];
        for t in &triangles {
            for &v in &t.v {
                counts[v + 1] += 1;
            }
        }
        for i in 0..nv {
            counts[i + 1] += counts[i];
        }
        let vertex_offsets = counts.clone();
        let mut fill = counts;
        let mut vertex_triangles = vec![0usize; vertex_offsets[nv]];
        for t in &triangles {
            for &v in &t.v {
                vertex_triangles[fill[v]] = t.id;
                fill[v] += 1;
            }
        }

        let on_boundary = match flags {
            Some(f) => f,
            None => {
                let mut f = vec![false; nv];
                for e in edges.iter().filter(|e| e.is_boundary()) {
                    f[e.v[0]] = true;
                    f[e.v[1]] = true;
                }
                f
            }
        };
        let vertices = points
            .iter()
            .zip(on_boundary)
            .enumerate()
            .map(|(id, (p, b))| Vertex {
                id,
                x: p[0],
                y: p[1],
                on_boundary: b,
            })
            .collect();

        Ok(Mesh {
            vertices,
            triangles,
            edges,
            triangle_edges,
            vertex_offsets,
            vertex_triangles,
            overfull,
            history,
            lineage,
            level,
            domain_area: 0.0,
            angle_floor,
        })
    }

    /// Area enclosed by the boundary edges, oriented by their triangles.
    fn boundary_enclosed_area(&self) -> f64 {
        let mut twice = 0.0;
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            let t = &self.triangles[e.first];
            let i = self.triangle_edges[t.id].iter().position(|&x| x == e.id).unwrap();
            let a = self.vertices[t.v[(i + 1) % 3]].point();
            let b = self.vertices[t.v[(i + 2) % 3]].point();
            twice += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * twice
    }

    /// Overrides the reference domain area used by the conformity check.
    pub fn with_domain_area(mut self, area: f64) -> Self {
        self.domain_area = area;
        self
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn domain_area(&self) -> f64 {
        self.domain_area
    }

    /// Lower bound on the minimum angle of every NVB descendant of the
    /// initial mesh.
    pub fn angle_floor(&self) -> f64 {
        self.angle_floor
    }

    pub fn vertex(&self, id: usize) -> &Vertex {
        &self.vertices[id]
    }

    pub fn triangle(&self, id: usize) -> &Triangle {
        &self.triangles[id]
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    /// Edge ids of a triangle; entry `i` is the edge opposite local vertex `i`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn coords(&self, t: usize) -> [Point; 3] {
        self.triangles[t].v.map(|i| self.vertices[i].point())
    }

    /// Triangles incident to a vertex, ascending ids.
    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[self.vertex_offsets[v]..self.vertex_offsets[v + 1]]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].v;
        dist(self.vertices[a].point(), self.vertices[b].point())
    }

    pub fn min_angle(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [p, q, r] = self.coords(t.id);
                angles(p, q, r).into_iter().fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn history(&self) -> &[Node] {
        &self.history
    }

    pub(crate) fn lineage(&self) -> u64 {
        self.lineage
    }

    /// The vertex patch `ω_ν` with its interior/boundary edge partition.
    pub fn patch(&self, vertex: usize) -> Result<Patch> {
        if vertex >= self.vertices.len() {
            return Err(Error::Argument(format!(
                "vertex {vertex} out of range (mesh has {})",
                self.vertices.len()
            )));
        }
        let elements = self.vertex_triangles(vertex).to_vec();
        let mut seen: Vec<(usize, usize)> = Vec::with_capacity(3 * elements.len());
        for &t in &elements {
            for &e in &self.triangle_edges[t] {
                match seen.iter_mut().find(|(id, _)| *id == e) {
                    Some(entry) => entry.1 += 1,
                    None => seen.push((e, 1)),
                }
            }
        }
        seen.sort_unstable();
        let interior_edges = seen.iter().filter(|(_, c)| *c >= 2).map(|(e, _)| *e).collect();
        let boundary_edges = seen.iter().filter(|(_, c)| *c == 1).map(|(e, _)| *e).collect();
        Ok(Patch {
            vertex,
            elements,
            interior_edges,
            boundary_edges,
        })
    }

    /// Largest patch size `n★ = max_ν |ω_ν|`.
    pub fn max_patch_size(&self) -> usize {
        (0..self.vertices.len())
            .map(|v| self.vertex_offsets[v + 1] - self.vertex_offsets[v])
            .max()
            .unwrap_or(0)
    }

    /// Bisection depth `j★ = ⌈3 n★ / 4⌉` after which refined triangles and
    /// their patches carry interior nodes.
    pub fn interior_node_depth(&self) -> usize {
        (3 * self.max_patch_size()).div_ceil(4).max(1)
    }

    /// Barycentric coordinates of a point with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.coords(t);
        let area = signed_area(a, b, c);
        [
            signed_area(p, b, c) / area,
            signed_area(a, p, c) / area,
            signed_area(a, b, p) / area,
        ]
    }

    /// Physical point of barycentric coordinates `lam` in triangle `t`.
    pub fn point_at(&self, t: usize, lam: [f64; 3]) -> Point {
        let [a, b, c] = self.coords(t);
        [
            lam[0] * a[0] + lam[1] * b[0] + lam[2] * c[0],
            lam[0] * a[1] + lam[1] * b[1] + lam[2] * c[1],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criss_cross_patches() {
        let m = Mesh::criss_cross_square();
        assert_eq!(m.n_triangles(), 4);
        let center = (0..m.n_vertices()).find(|&v| !m.vertex(v).on_boundary).unwrap();
        let p = m.patch(center).unwrap();
        assert_eq!(p.elements.len(), 4);
        assert_eq!(p.interior_edges.len(), 4);
        assert_eq!(p.boundary_edges.len(), 4);
        let corner = (0..m.n_vertices())
            .find(|&v| m.vertex(v).x == 0.0 && m.vertex(v).y == 0.0)
            .unwrap();
        // each corner is shared by the two triangles on its adjacent sides
        let p = m.patch(corner).unwrap();
        assert_eq!(p.elements.len(), 2);
        assert!(m.patch(99).is_err());
        let single = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[1, 2, 0]]).unwrap();
        assert_eq!(single.patch(0).unwrap().elements, vec![0]);
    }

    #[test]
    fn interior_vertex_of_uniform_grid_has_six_triangles() {
        let m = Mesh::uniform_square(4);
        let v = (0..m.n_vertices())
            .find(|&v| (m.vertex(v).x - 0.5).abs() < 1e-14 && (m.vertex(v).y - 0.5).abs() < 1e-14)
            .unwrap();
        // adjacency-scan oracle independent of the CSR incidence table
        let scan = m.triangles().iter().filter(|t| t.v.contains(&v)).count();
        assert_eq!(scan, 6);
        assert_eq!(m.patch(v).unwrap().elements.len(), scan);
    }

    #[test]
    fn interior_node_depth_values() {
        assert_eq!(Mesh::criss_cross_square().interior_node_depth(), 3);
        let single = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        assert_eq!(single.interior_node_depth(), 1);
        // valence-8 grid: alternate diagonals (union-jack pattern)
        let m = Mesh::union_jack_square(2);
        let nstar = (0..m.n_vertices())
            .map(|v| m.triangles().iter().filter(|t| t.v.contains(&v)).count())
            .max()
            .unwrap();
        assert_eq!(nstar, 8);
        assert_eq!(m.interior_node_depth(), 6);
        assert_eq!(Mesh::l_shape().interior_node_depth(), 5);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let m = Mesh::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![[0, 1, 2]]).unwrap();
        let t = m.triangle(0);
        assert!(t.area > 0.0);
        assert_eq!(t.v[2], 2);
        assert!(Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn longest_edge_labels() {
        let m = Mesh::with_longest_edge_labels(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        // hypotenuse (1,2) is the refinement edge, so vertex 0 is newest
        assert_eq!(m.triangle(0).v[2], 0);
    }

    #[test]
    fn barycentric_round_trip() {
        let m = Mesh::l_shape();
        for t in 0..m.n_triangles() {
            let lam = [0.2, 0.3, 0.5];
            let p = m.point_at(t, lam);
            let back = m.barycentric(t, p);
            for i in 0..3 {
                assert!((back[i] - lam[i]).abs() < 1e-14);
            }
        }
    }
}
