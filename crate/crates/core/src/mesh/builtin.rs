use super::{Mesh, Point};

/// Splits each unit cell into four triangles through its center, appending
/// vertices to `points` and triangles to `tris`. Corner ids are looked up in
/// `corner`.
fn criss_cross_cell(
    points: &mut Vec<Point>,
    tris: &mut Vec<[usize; 3]>,
    corners: [usize; 4],
) {
    let [a, b, c, d] = corners; // counterclockwise from lower-left
    let cx = 0.25 * (points[a][0] + points[b][0] + points[c][0] + points[d][0]);
    let cy = 0.25 * (points[a][1] + points[b][1] + points[c][1] + points[d][1]);
    let m = points.len();
    points.push([cx, cy]);
    tris.push([a, b, m]);
    tris.push([b, c, m]);
    tris.push([c, d, m]);
    tris.push([d, a, m]);
}

impl Mesh {
    /// Unit square split by both diagonals into four triangles.
    pub fn criss_cross_square() -> Mesh {
        let mut points = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let mut tris = Vec::new();
        criss_cross_cell(&mut points, &mut tris, [0, 1, 2, 3]);
        Mesh::with_longest_edge_labels(points, tris)
            .expect("static mesh")
            .with_domain_area(1.0)
    }

    /// `n × n` grid of the unit square, each cell cut by its rising diagonal.
    pub fn uniform_square(n: usize) -> Mesh {
        Self::structured_square(n, |_, _| true)
    }

    /// `n × n` grid with alternating diagonals, so interior vertices have
    /// valence 4 or 8.
    pub fn union_jack_square(n: usize) -> Mesh {
        Self::structured_square(n, |i, j| (i + j) % 2 == 0)
    }

    fn structured_square(n: usize, rising: impl Fn(usize, usize) -> bool) -> Mesh {
        let h = 1.0 / n as f64;
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut points = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                points.push([i as f64 * h, j as f64 * h]);
            }
        }
        let mut tris = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                if rising(i, j) {
                    tris.push([a, b, c]);
                    tris.push([a, c, d]);
                } else {
                    tris.push([a, b, d]);
                    tris.push([b, c, d]);
                }
            }
        }
        Mesh::with_longest_edge_labels(points, tris)
            .expect("static mesh")
            .with_domain_area(1.0)
    }

    /// L-shaped domain `(-1,1)² \ [0,1)×(-1,0)`: three unit squares, each
    /// split into four triangles through its center (12 triangles).
    pub fn l_shape() -> Mesh {
        let mut points: Vec<Point> = vec![
            [-1.0, -1.0],
            [0.0, -1.0],
            [-1.0, 0.0],
            [0.0, 0.0],
            [1.0, 0.0],
            [-1.0, 1.0],
            [0.0, 1.0],
            [1.0, 1.0],
        ];
        let mut tris = Vec::new();
        criss_cross_cell(&mut points, &mut tris, [0, 1, 3, 2]);
        criss_cross_cell(&mut points, &mut tris, [2, 3, 6, 5]);
        criss_cross_cell(&mut points, &mut tris, [3, 4, 7, 6]);
        Mesh::with_longest_edge_labels(points, tris)
            .expect("static mesh")
            .with_domain_area(3.0)
    }
}
