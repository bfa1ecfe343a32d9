//! Newest-vertex bisection of marked triangles and the interior-node depth.

use hypercircle::mesh::{interior_node_property, refined_set};
use hypercircle::{Mesh, Result};

fn main() -> Result<()> {
    let mesh = Mesh::l_shape();
    let j_star = mesh.interior_node_depth();
    println!("initial: {} triangles, {} vertices, j* = {j_star}", mesh.n_triangles(), mesh.n_vertices());

    for b in 1..=j_star {
        let fine = mesh.bisect(&[0, 3], b)?;
        let report = interior_node_property(&mesh, &fine, &[0, 3])?;
        let r_b = refined_set(&mesh, &fine, b)?;
        println!(
            "b = {b}: {} triangles, R^b = {:?}, interior nodes in every marked triangle: {}",
            fine.n_triangles(),
            r_b.elements,
            report.ok()
        );
    }

    let uniform = mesh.refine_uniform()?.refine_uniform()?;
    println!("two uniform bisections: {} triangles, min angle {:.4} rad", uniform.n_triangles(), uniform.min_angle());
    Ok(())
}
