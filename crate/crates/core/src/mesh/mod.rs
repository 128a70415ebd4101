//! Mesh topology, built-in generators and precomputed geometry.
//!
//! Faces are stored OpenFOAM-style: internal faces first (each with an owner
//! and a neighbour), then boundary faces grouped into contiguous patches. The
//! point ordering of every face is such that its area vector points out of the
//! owner cell. In 2-D a face is an edge with two points and areas and volumes
//! are per unit thickness.

mod distort;
mod generate;
mod geometry;

pub use distort::distort_mesh;
pub use generate::{generate_box_hex, generate_cook_quad, generate_quad, BoxPatches};
pub use geometry::{compute_geometry, reflection_tensor, MeshGeometry};

use crate::Vec3;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("degenerate face {face}: zero area")]
    DegenerateFace { face: usize },
    #[error("cell {cell} has non-positive volume {volume:e}")]
    NonPositiveVolume { cell: usize, volume: f64 },
    #[error("distortion produced non-positive volume in cell {cell}; retry with a smaller factor")]
    DistortionFailure { cell: usize },
}

/// Boundary condition family attached to a patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatchKind {
    Displacement,
    Traction,
    Symmetry,
}

impl fmt::Display for PatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatchKind::Displacement => "displacement",
            PatchKind::Traction => "traction",
            PatchKind::Symmetry => "symmetry",
        })
    }
}

impl FromStr for PatchKind {
    type Err = MeshError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "displacement" => Ok(PatchKind::Displacement),
            "traction" => Ok(PatchKind::Traction),
            "symmetry" => Ok(PatchKind::Symmetry),
            other => Err(MeshError::InvalidArgument(format!("unknown patch kind '{other}'"))),
        }
    }
}

/// A named, contiguous range of boundary faces.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub name: String,
    pub kind: PatchKind,
    pub start: usize,
    pub len: usize,
}

impl Patch {
    pub fn faces(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    points: Vec<Vec3>,
    faces: Vec<Vec<usize>>,
    owner: Vec<usize>,
    neighbour: Vec<usize>,
    patches: Vec<Patch>,
    n_cells: usize,
    cell_faces: Vec<Vec<usize>>,
    /// Per-face patch index (`None` for internal faces).
    face_patch: Vec<Option<usize>>,
    /// Optional VTK-ordered vertex list per cell (quads and hexahedra from the
    /// generators). Absent for imported meshes.
    cell_shapes: Option<Vec<Vec<usize>>>,
}

impl Mesh {
    /// Builds a mesh and checks its topological invariants.
    ///
    /// `neighbour.len()` is the number of internal faces; those faces must come
    /// first. Patches must tile the remaining faces contiguously and in order.
    pub fn new(
        dim: usize,
        points: Vec<Vec3>,
        faces: Vec<Vec<usize>>,
        owner: Vec<usize>,
        neighbour: Vec<usize>,
        patches: Vec<Patch>,
    ) -> Result<Self, MeshError> {
        if dim != 2 && dim != 3 {
            return Err(MeshError::InvalidArgument(format!("dim must be 2 or 3, got {dim}")));
        }
        if owner.len() != faces.len() {
            return Err(MeshError::Topology(format!(
                "{} owners for {} faces",
                owner.len(),
                faces.len()
            )));
        }
        if neighbour.len() > faces.len() {
            return Err(MeshError::Topology("more neighbours than faces".into()));
        }
        for (f, face) in faces.iter().enumerate() {
            let need = if dim == 2 { 2 } else { 3 };
            if (dim == 2 && face.len() != 2) || face.len() < need {
                return Err(MeshError::Topology(format!(
                    "face {f} has {} points (dim {dim})",
                    face.len()
                )));
            }
            if let Some(&p) = face.iter().find(|&&p| p >= points.len()) {
                return Err(MeshError::Topology(format!("face {f} references missing point {p}")));
            }
        }
        if dim == 2 && points.iter().any(|p| p.z != 0.0) {
            return Err(MeshError::Topology("2-D meshes must have z = 0 for every point".into()));
        }
        let n_cells = owner
            .iter()
            .chain(neighbour.iter())
            .max()
            .map_or(0, |&m| m + 1);
        for (f, (&o, &n)) in owner.iter().zip(neighbour.iter()).enumerate() {
            if o == n {
                return Err(MeshError::Topology(format!("internal face {f} has owner == neighbour")));
            }
        }
        let mut next = neighbour.len();
        for p in &patches {
            if p.start != next {
                return Err(MeshError::Topology(format!(
                    "patch '{}' starts at {} but {} expected",
                    p.name, p.start, next
                )));
            }
            next += p.len;
        }
        if next != faces.len() {
            return Err(MeshError::Topology(format!(
                "patches cover faces up to {next}, mesh has {}",
                faces.len()
            )));
        }
        let mut names: Vec<&str> = patches.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(MeshError::Topology("duplicate patch names".into()));
        }

        let mut cell_faces = vec![Vec::new(); n_cells];
        for (f, &o) in owner.iter().enumerate() {
            cell_faces[o].push(f);
        }
        for (f, &n) in neighbour.iter().enumerate() {
            cell_faces[n].push(f);
        }
        for cf in &mut cell_faces {
            cf.sort_unstable();
        }
        if let Some(c) = cell_faces.iter().position(|cf| cf.len() < dim + 1) {
            return Err(MeshError::Topology(format!("cell {c} has too few faces")));
        }
        let mut face_patch = vec![None; faces.len()];
        for (pi, p) in patches.iter().enumerate() {
            for f in p.faces() {
                face_patch[f] = Some(pi);
            }
        }
        Ok(Self {
            dim,
            points,
            faces,
            owner,
            neighbour,
            patches,
            n_cells,
            cell_faces,
            face_patch,
            cell_shapes: None,
        })
    }

    /// Attaches VTK-ordered cell vertex lists (used by the VTK writer).
    pub fn with_cell_shapes(mut self, shapes: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        if shapes.len() != self.n_cells {
            return Err(MeshError::InvalidArgument(format!(
                "{} cell shapes for {} cells",
                shapes.len(),
                self.n_cells
            )));
        }
        self.cell_shapes = Some(shapes);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn points(&self) -> &[Vec3] {
        &self.points
    }
    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }
    pub fn owner(&self) -> &[usize] {
        &self.owner
    }
    pub fn neighbour(&self) -> &[usize] {
        &self.neighbour
    }
    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_internal_faces(&self) -> usize {
        self.neighbour.len()
    }
    pub fn n_boundary_faces(&self) -> usize {
        self.faces.len() - self.neighbour.len()
    }
    pub fn cell_faces(&self, cell: usize) -> &[usize] {
        &self.cell_faces[cell]
    }
    pub fn cell_shapes(&self) -> Option<&[Vec<usize>]> {
        self.cell_shapes.as_deref()
    }
    pub fn is_internal(&self, face: usize) -> bool {
        face < self.neighbour.len()
    }
    /// Patch index of a boundary face.
    pub fn face_patch(&self, face: usize) -> Option<usize> {
        self.face_patch[face]
    }
    pub fn face_kind(&self, face: usize) -> Option<PatchKind> {
        self.face_patch[face].map(|p| self.patches[p].kind)
    }
    pub fn patch_index(&self, name: &str) -> Option<usize> {
        self.patches.iter().position(|p| p.name == name)
    }

    /// Returns a copy with different patch kinds (e.g. to match a set of
    /// boundary conditions). Unknown names are rejected.
    pub fn with_patch_kinds(mut self, kinds: &[(&str, PatchKind)]) -> Result<Self, MeshError> {
        for (name, kind) in kinds {
            let p = self
                .patch_index(name)
                .ok_or_else(|| MeshError::InvalidArgument(format!("no patch named '{name}'")))?;
            self.patches[p].kind = *kind;
        }
        Ok(self)
    }

    /// Shifts every point by `offset` (which must have `z = 0` in 2-D).
    pub fn translated(mut self, offset: Vec3) -> Self {
        for p in &mut self.points {
            *p += offset;
        }
        self
    }

    /// Replaces point positions, keeping topology. Used by the distortion
    /// routine.
    pub(crate) fn with_points(mut self, points: Vec<Vec3>) -> Self {
        debug_assert_eq!(points.len(), self.points.len());
        self.points = points;
        self
    }
}
