//! Legacy VTK ASCII export (`UNSTRUCTURED_GRID` of linear triangles).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::NodalField;
use crate::mesh::TriMesh;

const VTK_TRIANGLE: u8 = 5;

/// Writes the mesh and, optionally, a nodal field as point-data vectors
/// named `u` (2-component fields are padded with a zero third component).
pub fn to_vtk(mesh: &TriMesh, field: Option<&NodalField>, title: &str) -> Result<String> {
    let mut s = String::new();
    let title = title.lines().next().unwrap_or("");
    let _ = writeln!(
        s,
        "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID"
    );
    let _ = writeln!(s, "POINTS {} double", mesh.n_nodes());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let ne = mesh.n_elements();
    let _ = writeln!(s, "CELLS {ne} {}", 4 * ne);
    for t in mesh.elements() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(s, "{VTK_TRIANGLE}");
    }
    if let Some(u) = field {
        u.check_on(mesh)?;
        if u.n_components() > 3 {
            return Err(Error::UnsupportedDimension(u.n_components()));
        }
        let _ = writeln!(s, "POINT_DATA {}\nVECTORS u double", mesh.n_nodes());
        for v in u.iter_nodes() {
            let z = if v.len() == 3 { v[2] } else { 0.0 };
            let _ = writeln!(s, "{} {} {}", v[0], v[1], z);
        }
    }
    Ok(s)
}

pub fn write_vtk(
    path: &Path,
    mesh: &TriMesh,
    field: Option<&NodalField>,
    title: &str,
) -> Result<()> {
    std::fs::write(path, to_vtk(mesh, field, title)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rect_mesh;

    #[test]
    fn layout() {
        let m = build_rect_mesh(1, 1, 1.0, 1.0).unwrap();
        let u = NodalField::constant(4, &[1.0, 0.0]);
        let s = to_vtk(&m, Some(&u), "t").unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(
            &lines[..5],
            &[
                "# vtk DataFile Version 3.0",
                "t",
                "ASCII",
                "DATASET UNSTRUCTURED_GRID",
                "POINTS 4 double"
            ]
        );
        assert!(s.contains("CELLS 2 8\n3 0 1 3\n3 0 3 2\nCELL_TYPES 2\n5\n5\n"));
        assert!(s.ends_with("POINT_DATA 4\nVECTORS u double\n1 0 0\n1 0 0\n1 0 0\n1 0 0\n"));
        assert!(!to_vtk(&m, None, "mesh").unwrap().contains("POINT_DATA"));
    }
}
