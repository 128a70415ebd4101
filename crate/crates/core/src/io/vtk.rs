//! Legacy ASCII VTK unstructured grids with cell data.

use super::IoError;
use crate::mesh::Mesh;
use crate::{Tensor, Vec3};
use std::io::Write;
use std::path::Path;

pub const VTK_POLYGON: u8 = 7;
pub const VTK_QUAD: u8 = 9;
pub const VTK_HEXAHEDRON: u8 = 12;
pub const VTK_POLYHEDRON: u8 = 42;

/// Cell fields written as `CELL_DATA`. Every present field must have one
/// entry per cell.
#[derive(Debug, Clone, Copy, Default)]
pub struct VtkFields<'a> {
    pub displacement: Option<&'a [Vec3]>,
    pub velocity: Option<&'a [Vec3]>,
    pub stress: Option<&'a [Tensor]>,
}

enum CellRecord {
    Points(u8, Vec<usize>),
    Polyhedron(Vec<Vec<usize>>),
}

impl CellRecord {
    fn code(&self) -> u8 {
        match self {
            CellRecord::Points(c, _) => *c,
            CellRecord::Polyhedron(_) => VTK_POLYHEDRON,
        }
    }
    fn size(&self) -> usize {
        match self {
            CellRecord::Points(_, p) => 1 + p.len(),
            CellRecord::Polyhedron(f) => 2 + f.iter().map(|f| 1 + f.len()).sum::<usize>(),
        }
    }
}

/// Orders the edges of a 2-D cell into a closed vertex loop.
fn polygon_loop(mesh: &Mesh, cell: usize) -> Result<Vec<usize>, IoError> {
    let edges: Vec<[usize; 2]> = mesh
        .cell_faces(cell)
        .iter()
        .map(|&f| {
            let e = &mesh.faces()[f];
            if mesh.owner()[f] == cell { [e[0], e[1]] } else { [e[1], e[0]] }
        })
        .collect();
    let mut order = vec![edges[0][0]];
    let mut current = edges[0][1];
    while current != order[0] {
        if order.len() > edges.len() {
            return Err(IoError::Length(format!("cell {cell} edges do not form a closed loop")));
        }
        order.push(current);
        current = edges
            .iter()
            .find(|e| e[0] == current)
            .ok_or_else(|| IoError::Length(format!("cell {cell} edges do not form a closed loop")))?[1];
    }
    Ok(order)
}

fn cell_records(mesh: &Mesh) -> Result<Vec<CellRecord>, IoError> {
    if let Some(shapes) = mesh.cell_shapes() {
        return Ok(shapes
            .iter()
            .zip(0..)
            .map(|(s, c)| match (mesh.dim(), s.len()) {
                (2, 4) => CellRecord::Points(VTK_QUAD, s.clone()),
                (2, _) => CellRecord::Points(VTK_POLYGON, s.clone()),
                (_, 8) => CellRecord::Points(VTK_HEXAHEDRON, s.clone()),
                _ => CellRecord::Polyhedron(mesh.cell_faces(c).iter().map(|&f| mesh.faces()[f].clone()).collect()),
            })
            .collect());
    }
    (0..mesh.n_cells())
        .map(|c| {
            if mesh.dim() == 2 {
                let p = polygon_loop(mesh, c)?;
                Ok(CellRecord::Points(if p.len() == 4 { VTK_QUAD } else { VTK_POLYGON }, p))
            } else {
                Ok(CellRecord::Polyhedron(mesh.cell_faces(c).iter().map(|&f| mesh.faces()[f].clone()).collect()))
            }
        })
        .collect()
}

fn check_len(name: &str, got: usize, cells: usize) -> Result<(), IoError> {
    if got != cells {
        return Err(IoError::Length(format!("{name} has {got} entries for {cells} cells")));
    }
    Ok(())
}

pub fn write_vtk<W: Write>(mut w: W, mesh: &Mesh, fields: &VtkFields, title: &str) -> Result<(), IoError> {
    let nc = mesh.n_cells();
    for (name, len) in [
        ("displacement", fields.displacement.map(<[_]>::len)),
        ("velocity", fields.velocity.map(<[_]>::len)),
        ("stress", fields.stress.map(<[_]>::len)),
    ] {
        if let Some(len) = len {
            check_len(name, len, nc)?;
        }
    }
    let cells = cell_records(mesh)?;
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(w, "# vtk DataFile Version 4.2")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.points().len())?;
    for p in mesh.points() {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    writeln!(w, "CELLS {} {}", nc, cells.iter().map(CellRecord::size).sum::<usize>())?;
    for c in &cells {
        let mut line = Vec::new();
        match c {
            CellRecord::Points(_, p) => {
                line.push(p.len());
                line.extend(p);
            }
            CellRecord::Polyhedron(faces) => {
                line.push(c.size() - 1);
                line.push(faces.len());
                for f in faces {
                    line.push(f.len());
                    line.extend(f);
                }
            }
        }
        writeln!(w, "{}", line.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))?;
    }
    writeln!(w, "CELL_TYPES {nc}")?;
    for c in &cells {
        writeln!(w, "{}", c.code())?;
    }
    if fields.displacement.is_none() && fields.velocity.is_none() && fields.stress.is_none() {
        return Ok(());
    }
    writeln!(w, "CELL_DATA {nc}")?;
    for (name, data) in [("displacement", fields.displacement), ("velocity", fields.velocity)] {
        if let Some(v) = data {
            writeln!(w, "VECTORS {name} double")?;
            for x in v {
                writeln!(w, "{} {} {}", x.x, x.y, x.z)?;
            }
        }
    }
    if let Some(s) = fields.stress {
        writeln!(w, "TENSORS stress double")?;
        for t in s {
            for r in 0..3 {
                writeln!(w, "{} {} {}", t[(r, 0)], t[(r, 1)], t[(r, 2)])?;
            }
        }
    }
    Ok(())
}

pub fn write_vtk_file(path: &Path, mesh: &Mesh, fields: &VtkFields, title: &str) -> Result<(), IoError> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_vtk(f, mesh, fields, title)
}
