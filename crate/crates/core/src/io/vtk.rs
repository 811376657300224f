//! Legacy ASCII VTK (version 2.0) unstructured-grid writer.

use std::fmt::Write as _;
use std::path::Path;

use super::{write_text, OutputError};
use crate::mesh::Mesh;
use crate::Vec2;

const VTK_TRIANGLE: u8 = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Field<'a> {
    PointScalar(&'a str, &'a [f64]),
    PointVector(&'a str, &'a [Vec2]),
    CellScalar(&'a str, &'a [f64]),
    CellVector(&'a str, &'a [Vec2]),
}

impl Field<'_> {
    fn name(&self) -> &str {
        match self {
            Field::PointScalar(n, _) | Field::PointVector(n, _) | Field::CellScalar(n, _) | Field::CellVector(n, _) => n,
        }
    }

    fn on_points(&self) -> bool {
        matches!(self, Field::PointScalar(..) | Field::PointVector(..))
    }

    fn len(&self) -> usize {
        match self {
            Field::PointScalar(_, v) | Field::CellScalar(_, v) => v.len(),
            Field::PointVector(_, v) | Field::CellVector(_, v) => v.len(),
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders the file contents; the output depends only on the inputs.
pub fn render_vtk(mesh: &Mesh, title: &str, fields: &[Field]) -> Result<String, OutputError> {
    for f in fields {
        let expected = if f.on_points() { mesh.n_nodes() } else { mesh.n_elements() };
        if f.len() != expected {
            return Err(OutputError::InvalidInput(format!(
                "field '{}' has {} values, expected {expected}",
                f.name(),
                f.len()
            )));
        }
        if f.name().is_empty() || f.name().contains(char::is_whitespace) {
            return Err(OutputError::InvalidInput(format!("field name '{}' must be a single word", f.name())));
        }
    }
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 2.0");
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.n_nodes());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {} {}", num(p.x), num(p.y), num(0.0));
    }
    let ne = mesh.n_elements();
    let _ = writeln!(s, "CELLS {ne} {}", 4 * ne);
    for e in &mesh.elements {
        let _ = writeln!(s, "3 {} {} {}", e[0], e[1], e[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(s, "{VTK_TRIANGLE}");
    }
    for (on_points, header) in [(true, format!("POINT_DATA {}", mesh.n_nodes())), (false, format!("CELL_DATA {ne}"))] {
        let group: Vec<_> = fields.iter().filter(|f| f.on_points() == on_points).collect();
        if group.is_empty() {
            continue;
        }
        let _ = writeln!(s, "{header}");
        for f in group {
            match f {
                Field::PointScalar(name, v) | Field::CellScalar(name, v) => {
                    let _ = writeln!(s, "SCALARS {name} double 1");
                    let _ = writeln!(s, "LOOKUP_TABLE default");
                    for x in v.iter() {
                        let _ = writeln!(s, "{}", num(*x));
                    }
                }
                Field::PointVector(name, v) | Field::CellVector(name, v) => {
                    let _ = writeln!(s, "VECTORS {name} double");
                    for x in v.iter() {
                        let _ = writeln!(s, "{} {} {}", num(x.x), num(x.y), num(0.0));
                    }
                }
            }
        }
    }
    Ok(s)
}

pub fn write_vtk(mesh: &Mesh, title: &str, fields: &[Field], path: &Path) -> Result<(), OutputError> {
    write_text(path, &render_vtk(mesh, title, fields)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_rect_mesh;

    #[test]
    fn layout_counts_match_the_mesh() {
        let mesh = generate_rect_mesh(2.0, 1.0, 2, 1).unwrap();
        let p: Vec<f64> = (0..mesh.n_nodes()).map(|i| i as f64).collect();
        let u = vec![Vec2::new(1.0, -1.0); mesh.n_nodes()];
        let c = vec![0.5; mesh.n_elements()];
        let text = render_vtk(&mesh, "t", &[Field::PointScalar("p", &p), Field::PointVector("u", &u), Field::CellScalar("chi", &c)]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 2.0");
        assert!(lines.contains(&"POINTS 6 double"));
        assert!(lines.contains(&"CELLS 4 16"));
        assert!(lines.contains(&"POINT_DATA 6"));
        assert!(lines.contains(&"CELL_DATA 4"));
        assert!(lines.contains(&"5.0000000000000000e-1"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn wrong_length_is_rejected() {
        let mesh = generate_rect_mesh(1.0, 1.0, 1, 1).unwrap();
        assert!(render_vtk(&mesh, "t", &[Field::PointScalar("p", &[1.0])]).is_err());
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let mesh = generate_rect_mesh(1.0, 1.0, 1, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = write_vtk(&mesh, "t", &[], &blocker.join("sub").join("a.vtk")).unwrap_err();
        assert!(matches!(err, OutputError::Io { .. }));
    }
}
