//! Cell fields, time history and boundary conditions.

use crate::mesh::{Mesh, PatchKind};
use crate::{Tensor, Vec3};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("patch '{0}' has no boundary condition")]
    MissingCondition(String),
    #[error("patch '{0}' has more than one boundary condition")]
    DuplicateCondition(String),
    #[error("boundary condition names unknown patch '{0}'")]
    UnknownPatch(String),
    #[error("patch '{patch}' is a {mesh} patch but its condition is {bc}")]
    KindMismatch { patch: String, mesh: PatchKind, bc: PatchKind },
    #[error("field has {got} entries, expected {expected}")]
    Length { got: usize, expected: usize },
}

/// A vector-valued function of position and time.
pub type VectorFn = Arc<dyn Fn(&Vec3, f64) -> Vec3 + Send + Sync>;

/// Prescribed boundary data `ū(x, t)` or `T̄(x, t)`.
#[derive(Clone)]
pub enum Prescribed {
    Constant(Vec3),
    /// `value · min(t / duration, 1)`; used for load incrementation.
    Ramp { value: Vec3, duration: f64 },
    Function(VectorFn),
}

impl Prescribed {
    pub fn zero() -> Self {
        Prescribed::Constant(Vec3::zeros())
    }

    pub fn function(f: impl Fn(&Vec3, f64) -> Vec3 + Send + Sync + 'static) -> Self {
        Prescribed::Function(Arc::new(f))
    }

    pub fn eval(&self, x: &Vec3, t: f64) -> Vec3 {
        match self {
            Prescribed::Constant(v) => *v,
            Prescribed::Ramp { value, duration } => value * (t / duration).clamp(0.0, 1.0),
            Prescribed::Function(f) => f(x, t),
        }
    }
}

impl fmt::Debug for Prescribed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prescribed::Constant(v) => write!(f, "Constant({}, {}, {})", v.x, v.y, v.z),
            Prescribed::Ramp { value, duration } => {
                write!(f, "Ramp({}, {}, {}; over {duration})", value.x, value.y, value.z)
            }
            Prescribed::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum BoundaryKind {
    Displacement(Prescribed),
    Traction(Prescribed),
    Symmetry,
}

impl BoundaryKind {
    pub fn patch_kind(&self) -> PatchKind {
        match self {
            BoundaryKind::Displacement(_) => PatchKind::Displacement,
            BoundaryKind::Traction(_) => PatchKind::Traction,
            BoundaryKind::Symmetry => PatchKind::Symmetry,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryCondition {
    pub patch: String,
    pub kind: BoundaryKind,
}

impl BoundaryCondition {
    pub fn displacement(patch: &str, value: Prescribed) -> Self {
        Self { patch: patch.into(), kind: BoundaryKind::Displacement(value) }
    }
    pub fn traction(patch: &str, value: Prescribed) -> Self {
        Self { patch: patch.into(), kind: BoundaryKind::Traction(value) }
    }
    pub fn symmetry(patch: &str) -> Self {
        Self { patch: patch.into(), kind: BoundaryKind::Symmetry }
    }
}

/// One condition per mesh patch, indexed like `Mesh::patches()`.
#[derive(Debug, Clone)]
pub struct BoundaryConditions {
    per_patch: Vec<BoundaryKind>,
}

impl BoundaryConditions {
    pub fn new(mesh: &Mesh, conditions: Vec<BoundaryCondition>) -> Result<Self, FieldError> {
        let mut slots: Vec<Option<BoundaryKind>> = vec![None; mesh.patches().len()];
        for bc in conditions {
            let p = mesh
                .patch_index(&bc.patch)
                .ok_or_else(|| FieldError::UnknownPatch(bc.patch.clone()))?;
            let mesh_kind = mesh.patches()[p].kind;
            if mesh_kind != bc.kind.patch_kind() {
                return Err(FieldError::KindMismatch {
                    patch: bc.patch,
                    mesh: mesh_kind,
                    bc: bc.kind.patch_kind(),
                });
            }
            if slots[p].is_some() {
                return Err(FieldError::DuplicateCondition(bc.patch));
            }
            slots[p] = Some(bc.kind);
        }
        let per_patch = slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| FieldError::MissingCondition(mesh.patches()[i].name.clone())))
            .collect::<Result<_, _>>()?;
        Ok(Self { per_patch })
    }

    pub fn patch(&self, index: usize) -> &BoundaryKind {
        &self.per_patch[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &BoundaryKind> {
        self.per_patch.iter()
    }
}

/// Flat unknown vector layout: entry `cell * dim + component`.
pub fn to_flat(values: &[Vec3], dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() * dim);
    for v in values {
        out.extend_from_slice(&v.as_slice()[..dim]);
    }
    out
}

pub fn from_flat(flat: &[f64], dim: usize) -> Vec<Vec3> {
    flat.chunks_exact(dim)
        .map(|c| Vec3::new(c[0], c[1], if dim == 3 { c[2] } else { 0.0 }))
        .collect()
}

/// A cell-centred vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub values: Vec<Vec3>,
}

impl VectorField {
    pub fn zeros(n_cells: usize) -> Self {
        Self { values: vec![Vec3::zeros(); n_cells] }
    }

    pub fn from_fn(centres: &[Vec3], f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self { values: centres.iter().map(f).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_flat(&self, dim: usize) -> Vec<f64> {
        to_flat(&self.values, dim)
    }

    pub fn from_flat(flat: &[f64], dim: usize) -> Self {
        Self { values: from_flat(flat, dim) }
    }
}

/// Displacement and velocity at the two previous time levels, plus the last
/// acceleration (for the step predictor).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeHistory {
    pub u_t: Vec<Vec3>,
    pub u_tm1: Vec<Vec3>,
    pub v_t: Vec<Vec3>,
    pub v_tm1: Vec<Vec3>,
    pub a_t: Vec<Vec3>,
}

impl TimeHistory {
    /// First-step seeding: `u^{t−1} = u^t = u0`, `v^t = v^{t−1} = v0`.
    pub fn seeded(u0: Vec<Vec3>, v0: Vec<Vec3>) -> Result<Self, FieldError> {
        if u0.len() != v0.len() {
            return Err(FieldError::Length { got: v0.len(), expected: u0.len() });
        }
        let n = u0.len();
        Ok(Self { u_tm1: u0.clone(), u_t: u0, v_tm1: v0.clone(), v_t: v0, a_t: vec![Vec3::zeros(); n] })
    }

    pub fn at_rest(n_cells: usize) -> Self {
        let z = vec![Vec3::zeros(); n_cells];
        Self { u_t: z.clone(), u_tm1: z.clone(), v_t: z.clone(), v_tm1: z.clone(), a_t: z }
    }

    pub fn len(&self) -> usize {
        self.u_t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_t.is_empty()
    }

    /// Shifts the levels after a converged step.
    pub fn advance(&mut self, u: Vec<Vec3>, v: Vec<Vec3>, a: Vec<Vec3>) {
        self.u_tm1 = std::mem::replace(&mut self.u_t, u);
        self.v_tm1 = std::mem::replace(&mut self.v_t, v);
        self.a_t = a;
    }
}

/// `w φ_P + (1 − w) φ_N`.
pub fn face_interpolate<T>(phi_p: T, phi_n: T, w: f64) -> T
where
    T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    phi_p * w + phi_n * (1.0 - w)
}

/// `u_P + d·∇u_P` with `(∇u)_ij = ∂_i u_j`.
pub fn traction_face_displacement(u_p: &Vec3, grad_u_p: &Tensor, d: &Vec3) -> Vec3 {
    u_p + grad_u_p.transpose() * d
}

/// `(I − n⊗n)·u_P`.
pub fn symmetry_face_value(u_p: &Vec3, n: &Vec3) -> Vec3 {
    u_p - n * n.dot(u_p)
}
