//! ASCII `.tri` meshes and legacy VTK export.
//!
//! `.tri` layout: a header line `nv nt`, then `nv` lines `x y boundary_flag`,
//! then `nt` lines `v0 v1 v2 generation`. The refinement edge of each
//! triangle is the edge opposite `v2`.

use super::Mesh;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

pub fn to_tri_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", mesh.n_vertices(), mesh.n_triangles());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", v.x, v.y, u8::from(v.on_boundary));
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {} {}", t.v[0], t.v[1], t.v[2], t.generation);
    }
    s
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        context: format!(".tri line {line}"),
        message: message.into(),
    }
}

fn fields<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, n: usize) -> Result<(usize, Vec<&'a str>)> {
    loop {
        let Some((i, line)) = lines.next() else {
            return Err(parse_err(0, "unexpected end of file"));
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        if f.len() != n {
            return Err(parse_err(i + 1, format!("expected {n} fields, found {}", f.len())));
        }
        return Ok((i + 1, f));
    }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| parse_err(line, format!("cannot parse `{s}`")))
}

/// Parses a `.tri` mesh, keeping the refinement-edge labels and generations
/// of the file. The result is a fresh initial mesh for refinement purposes.
pub fn parse_tri(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate();
    let (l, head) = fields(&mut lines, 2)?;
    let (nv, nt): (usize, usize) = (num(l, head[0])?, num(l, head[1])?);
    let mut points = Vec::with_capacity(nv);
    let mut flags = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, f) = fields(&mut lines, 3)?;
        points.push([num(l, f[0])?, num(l, f[1])?]);
        flags.push(match f[2] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(l, format!("boundary flag must be 0 or 1, found `{other}`"))),
        });
    }
    let mut tris = Vec::with_capacity(nt);
    let mut generations = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (l, f) = fields(&mut lines, 4)?;
        tris.push([num(l, f[0])?, num(l, f[1])?, num(l, f[2])?]);
        generations.push(num(l, f[3])?);
    }
    if let Some((i, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(i + 1, format!("trailing content `{}`", line.trim())));
    }
    Mesh::with_flags(points, flags, tris, generations)
}

pub fn write_tri(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_tri_string(mesh))?;
    Ok(())
}

pub fn read_tri(path: impl AsRef<Path>) -> Result<Mesh> {
    parse_tri(&std::fs::read_to_string(path)?)
}

/// Legacy ASCII VTK unstructured grid with the generation and any extra
/// per-triangle fields as cell data.
pub fn to_vtk_string(mesh: &Mesh, cell_data: &[(&str, &[f64])]) -> Result<String> {
    for (name, values) in cell_data {
        if values.len() != mesh.n_triangles() {
            return Err(Error::Argument(format!(
                "cell field `{name}` has {} values for {} triangles",
                values.len(),
                mesh.n_triangles()
            )));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::Argument(format!("invalid VTK field name `{name}`")));
        }
    }
    let (nv, nt) = (mesh.n_vertices(), mesh.n_triangles());
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "triangulation level {}", mesh.level());
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} 0", v.x, v.y);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t.v[0], t.v[1], t.v[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {nt}");
    s.push_str("SCALARS generation int 1\nLOOKUP_TABLE default\n");
    for t in mesh.triangles() {
        let _ = writeln!(s, "{}", t.generation);
    }
    for (name, values) in cell_data {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in *values {
            let _ = writeln!(s, "{x}");
        }
    }
    Ok(s)
}

pub fn write_vtk(mesh: &Mesh, path: impl AsRef<Path>, cell_data: &[(&str, &[f64])]) -> Result<()> {
    std::fs::write(path, to_vtk_string(mesh, cell_data)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tri_round_trip_preserves_labels() {
        let m = Mesh::l_shape().bisect(&[2, 7], 2).unwrap();
        let back = parse_tri(&to_tri_string(&m)).unwrap();
        assert_eq!(back.n_triangles(), m.n_triangles());
        for (a, b) in m.triangles().iter().zip(back.triangles()) {
            assert_eq!(a.v, b.v);
            assert_eq!(a.generation, b.generation);
        }
        for (a, b) in m.vertices().iter().zip(back.vertices()) {
            assert_eq!(a, b);
        }
        assert!(back.conformity_check().ok);
        assert_eq!(to_tri_string(&back), to_tri_string(&m));
    }

    #[test]
    fn malformed_tri_is_rejected() {
        assert!(matches!(parse_tri("1 0\n0 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_tri("1 0\n0 0 2\n"), Err(Error::Parse { .. })));
        assert!(parse_tri("3 1\n0 0 1\n1 0 1\n0 1 1\n0 1 2 0\n").is_ok());
        assert!(matches!(
            parse_tri("3 1\n0 0 1\n1 0 1\n0 1 1\n0 1 2 0\nextra\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn vtk_layout() {
        let m = Mesh::criss_cross_square();
        let s = to_vtk_string(&m, &[("eta", &[1.0, 2.0, 3.0, 4.0])]).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[2], "ASCII");
        assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
        assert!(s.contains("CELLS 4 16\n"));
        let at = lines.iter().position(|l| *l == "CELL_TYPES 4").unwrap();
        assert!(lines[at + 1..at + 5].iter().all(|l| *l == "5"));
        assert!(to_vtk_string(&m, &[("eta", &[1.0])]).is_err());
    }
}
