//! ASCII mesh files.
//!
//! ```text
//! FVMESH 1
//! DIM 3
//! POINTS <n>
//! <index> <x> <y> <z>
//! FACES <n>
//! <index>: <point> <point> ...
//! OWNER <n>
//! <face> <cell>
//! NEIGHBOUR <n>
//! <face> <cell>
//! PATCHES <n>
//! <name> <kind> <start> <len>
//! SHAPES <n>                      (optional, VTK-ordered cell vertices)
//! <cell>: <point> <point> ...
//! END
//! ```
//!
//! Indices are zero-based and must appear in order. Lines starting with
//! `#` are ignored.

use super::IoError;
use crate::mesh::{Mesh, Patch, PatchKind};
use crate::Vec3;
use std::io::{BufRead, Write};
use std::path::Path;

pub const FVMESH_VERSION: u32 = 1;

pub fn write_fvmesh<W: Write>(mut w: W, mesh: &Mesh) -> Result<(), IoError> {
    writeln!(w, "FVMESH {FVMESH_VERSION}")?;
    writeln!(w, "DIM {}", mesh.dim())?;
    writeln!(w, "POINTS {}", mesh.points().len())?;
    for (i, p) in mesh.points().iter().enumerate() {
        writeln!(w, "{i} {} {} {}", p.x, p.y, p.z)?;
    }
    writeln!(w, "FACES {}", mesh.n_faces())?;
    for (i, f) in mesh.faces().iter().enumerate() {
        writeln!(w, "{i}: {}", join(f))?;
    }
    writeln!(w, "OWNER {}", mesh.owner().len())?;
    for (i, o) in mesh.owner().iter().enumerate() {
        writeln!(w, "{i} {o}")?;
    }
    writeln!(w, "NEIGHBOUR {}", mesh.neighbour().len())?;
    for (i, n) in mesh.neighbour().iter().enumerate() {
        writeln!(w, "{i} {n}")?;
    }
    writeln!(w, "PATCHES {}", mesh.patches().len())?;
    for p in mesh.patches() {
        writeln!(w, "{} {} {} {}", p.name, p.kind, p.start, p.len)?;
    }
    if let Some(shapes) = mesh.cell_shapes() {
        writeln!(w, "SHAPES {}", shapes.len())?;
        for (i, s) in shapes.iter().enumerate() {
            writeln!(w, "{i}: {}", join(s))?;
        }
    }
    writeln!(w, "END")?;
    Ok(())
}

pub fn write_fvmesh_file(path: &Path, mesh: &Mesh) -> Result<(), IoError> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_fvmesh(f, mesh)
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Line cursor that skips blanks and comments and reports 1-based lines.
struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<Option<(usize, String)>, IoError> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Ok(Some((self.line, t.to_string())));
            }
        }
        Ok(None)
    }

    fn expect(&mut self, what: &str) -> Result<(usize, String), IoError> {
        self.next()?.ok_or_else(|| IoError::Format { line: self.line, message: format!("unexpected end of file, expected {what}") })
    }

    fn header(&mut self, name: &str) -> Result<(usize, String), IoError> {
        let (line, t) = self.expect(name)?;
        let mut parts = t.split_whitespace();
        if parts.next() != Some(name) {
            return Err(IoError::Format { line, message: format!("expected '{name}', got '{t}'") });
        }
        let rest = parts.collect::<Vec<_>>().join(" ");
        Ok((line, rest))
    }

    fn count(&mut self, name: &str) -> Result<usize, IoError> {
        let (line, rest) = self.header(name)?;
        num(&rest, line, &format!("{name} count"))
    }
}

fn num<T: std::str::FromStr>(t: &str, line: usize, what: &str) -> Result<T, IoError> {
    t.parse().map_err(|_| IoError::Format { line, message: format!("invalid {what} '{t}'") })
}

fn indexed(line: usize, t: &str, expected: usize, colon: bool) -> Result<Vec<String>, IoError> {
    let (idx, rest) = if colon {
        t.split_once(':').ok_or_else(|| IoError::Format { line, message: format!("expected '<index>: ...', got '{t}'") })?
    } else {
        t.split_once(char::is_whitespace).unwrap_or((t, ""))
    };
    let idx: usize = num(idx.trim(), line, "index")?;
    if idx != expected {
        return Err(IoError::Format { line, message: format!("expected index {expected}, got {idx}") });
    }
    Ok(rest.split_whitespace().map(str::to_string).collect())
}

fn index_list(line: usize, tokens: &[String]) -> Result<Vec<usize>, IoError> {
    tokens.iter().map(|t| num(t, line, "index")).collect()
}

pub fn read_fvmesh<R: BufRead>(reader: R) -> Result<Mesh, IoError> {
    let mut lines = Lines { inner: reader.lines(), line: 0 };
    let (line, version) = lines.header("FVMESH")?;
    let v: u32 = num(&version, line, "version")?;
    if v != FVMESH_VERSION {
        return Err(IoError::Format { line, message: format!("unsupported FVMESH version {v}") });
    }
    let dim = lines.count("DIM")?;

    let n = lines.count("POINTS")?;
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let (line, t) = lines.expect("a point")?;
        let xs = indexed(line, &t, i, false)?;
        if xs.len() != 3 {
            return Err(IoError::Format { line, message: format!("point {i} needs 3 coordinates") });
        }
        let c: Vec<f64> = xs.iter().map(|x| num(x, line, "coordinate")).collect::<Result<_, _>>()?;
        points.push(Vec3::new(c[0], c[1], c[2]));
    }

    let n = lines.count("FACES")?;
    let mut faces = Vec::with_capacity(n);
    for i in 0..n {
        let (line, t) = lines.expect("a face")?;
        faces.push(index_list(line, &indexed(line, &t, i, true)?)?);
    }

    let cells_of = |lines: &mut Lines<R>, name: &str| -> Result<Vec<usize>, IoError> {
        let n = lines.count(name)?;
        (0..n)
            .map(|i| {
                let (line, t) = lines.expect(name)?;
                let xs = indexed(line, &t, i, false)?;
                if xs.len() != 1 {
                    return Err(IoError::Format { line, message: format!("{name} entry {i} needs one cell index") });
                }
                num(&xs[0], line, "cell index")
            })
            .collect()
    };
    let owner = cells_of(&mut lines, "OWNER")?;
    let neighbour = cells_of(&mut lines, "NEIGHBOUR")?;

    let n = lines.count("PATCHES")?;
    let mut patches = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, t) = lines.expect("a patch")?;
        let xs: Vec<&str> = t.split_whitespace().collect();
        if xs.len() != 4 {
            return Err(IoError::Format { line, message: format!("expected '<name> <kind> <start> <len>', got '{t}'") });
        }
        let kind: PatchKind = xs[1].parse().map_err(|e| IoError::Format { line, message: format!("{e}") })?;
        patches.push(Patch {
            name: xs[0].to_string(),
            kind,
            start: num(xs[2], line, "patch start")?,
            len: num(xs[3], line, "patch length")?,
        });
    }

    let (line, t) = lines.expect("SHAPES or END")?;
    let mut shapes = None;
    if let Some(count) = t.strip_prefix("SHAPES") {
        let n: usize = num(count.trim(), line, "SHAPES count")?;
        let mut s = Vec::with_capacity(n);
        for i in 0..n {
            let (line, t) = lines.expect("a cell shape")?;
            s.push(index_list(line, &indexed(line, &t, i, true)?)?);
        }
        shapes = Some(s);
        lines.header("END")?;
    } else if t != "END" {
        return Err(IoError::Format { line, message: format!("expected 'END', got '{t}'") });
    }
    if let Some((line, t)) = lines.next()? {
        return Err(IoError::Format { line, message: format!("unexpected content after END: '{t}'") });
    }

    let max_point = points.len();
    for (f, face) in faces.iter().enumerate() {
        if let Some(&p) = face.iter().find(|&&p| p >= max_point) {
            return Err(IoError::Mesh(crate::mesh::MeshError::Topology(format!("face {f} references missing point {p}"))));
        }
    }
    let mesh = Mesh::new(dim, points, faces, owner, neighbour, patches)?;
    match shapes {
        Some(s) => {
            if s.iter().flatten().any(|&p| p >= max_point) {
                return Err(IoError::Mesh(crate::mesh::MeshError::Topology("cell shape references a missing point".into())));
            }
            Ok(mesh.with_cell_shapes(s)?)
        }
        None => Ok(mesh),
    }
}

pub fn read_fvmesh_file(path: &Path) -> Result<Mesh, IoError> {
    read_fvmesh(std::io::BufReader::new(std::fs::File::open(path)?))
}
