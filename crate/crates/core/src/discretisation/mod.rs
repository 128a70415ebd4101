//! Residual assembly and the compact approximate Jacobian.
//!
//! The residual of cell `P` is the net force
//!
//! ```text
//! R_P = Σ_int Γ·σ_f + Σ_disp Γ·σ_P + Σ_symm Γ·σ_s + Σ_trac |Γ| T̄
//!     + D_P(Rhie-Chow) + f_b Ω_P − ρ a_P Ω_P
//! ```
//!
//! and the approximate Jacobian is the derivative of the compact part of
//! the stabilisation plus the inertia term, which makes it symmetric and
//! negative semi-definite.

mod jacobian;
mod stencil;

pub use jacobian::{assemble_approximate_jacobian, scalar_component_matrices};
pub use stencil::{bdf2_acceleration, bdf2_velocity, cell_gradients, rhie_chow_face, rhie_chow_jump_face};

use crate::fields::{from_flat, BoundaryConditions, BoundaryKind, TimeHistory, VectorFn};
use crate::laws::{LawError, MechanicalLaw, PlasticState};
use crate::mesh::{Mesh, MeshGeometry};
use crate::{Tensor, Vec3};
use rayon::prelude::*;
use std::fmt;
use thiserror::Error;

/// Cell count above which per-cell work runs on the rayon pool.
const PARALLEL_CELLS: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretisationError {
    #[error("invalid discretisation settings: {0}")]
    InvalidConfig(String),
    #[error("vector has {got} entries, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("least-squares gradient failed in cell {cell}: singular G tensor")]
    GradientFailure { cell: usize },
    #[error("mechanical law failed in cell {cell}: {source}")]
    Law { cell: usize, source: LawError },
    #[error("residual is not finite in cell {cell}")]
    ResidualNan { cell: usize },
    #[error("transient residual requires a time history")]
    MissingHistory,
    #[error("plastic law requires committed internal state")]
    MissingPlasticState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Formulation {
    #[default]
    LinearGeometry,
    /// Momentum balance on the reference configuration with face area
    /// vectors `J F⁻ᵀ·Γ`; tractions are per reference area.
    TotalLagrangian,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::LinearGeometry => "linear-geometry",
            Formulation::TotalLagrangian => "total-lagrangian",
        })
    }
}

impl std::str::FromStr for Formulation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear-geometry" | "linear" => Ok(Formulation::LinearGeometry),
            "total-lagrangian" | "tl" => Ok(Formulation::TotalLagrangian),
            _ => Err(format!("unknown formulation '{s}' (linear-geometry, total-lagrangian)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Dynamics {
    /// Inertia omitted.
    #[default]
    Static,
    Transient { dt: f64, rho: f64 },
}

/// Body force per unit volume.
#[derive(Clone, Default)]
pub enum BodyForce {
    #[default]
    None,
    Uniform(Vec3),
    Field(VectorFn),
}

impl fmt::Debug for BodyForce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyForce::None => f.write_str("None"),
            BodyForce::Uniform(g) => write!(f, "Uniform({}, {}, {})", g.x, g.y, g.z),
            BodyForce::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl BodyForce {
    pub fn eval(&self, x: &Vec3, t: f64) -> Vec3 {
        match self {
            BodyForce::None => Vec3::zeros(),
            BodyForce::Uniform(g) => *g,
            BodyForce::Field(f) => f(x, t),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscretisationConfig {
    /// Global Rhie-Chow scaling in the residual.
    pub alpha: f64,
    pub formulation: Formulation,
    pub dynamics: Dynamics,
    pub body_force: BodyForce,
}

impl Default for DiscretisationConfig {
    fn default() -> Self {
        Self { alpha: 1.0, formulation: Formulation::default(), dynamics: Dynamics::Static, body_force: BodyForce::None }
    }
}

impl DiscretisationConfig {
    pub fn validate(&self) -> Result<(), DiscretisationError> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(DiscretisationError::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if let Dynamics::Transient { dt, rho } = self.dynamics {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(DiscretisationError::InvalidConfig(format!("time step must be positive, got {dt}")));
            }
            if !(rho > 0.0) {
                return Err(DiscretisationError::InvalidConfig(format!("density must be positive, got {rho}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if n >= PARALLEL_CELLS {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Boundary data of one boundary face, evaluated once per evaluator.
#[derive(Debug, Clone, Copy)]
enum FaceData {
    Displacement(Vec3),
    Traction(Vec3),
    Symmetry,
}

/// Evaluates `R(u)` for fixed mesh, boundary data, law, time level and
/// committed internal state. Evaluation is a pure function of `u`.
pub struct ResidualEvaluator<'a> {
    mesh: &'a Mesh,
    geom: &'a MeshGeometry,
    law: &'a MechanicalLaw,
    config: &'a DiscretisationConfig,
    history: Option<&'a TimeHistory>,
    committed: Option<&'a [PlasticState]>,
    kbar: f64,
    time: f64,
    boundary: Vec<FaceData>,
    body: Vec<Vec3>,
}

/// Per-cell quantities shared by the face loop.
struct CellState {
    grad: Vec<Tensor>,
    sigma: Vec<Tensor>,
    trial: Option<Vec<PlasticState>>,
}

impl<'a> ResidualEvaluator<'a> {
    /// Evaluates boundary and body-force data at time `time`.
    pub fn new(
        mesh: &'a Mesh,
        geom: &'a MeshGeometry,
        bcs: &BoundaryConditions,
        law: &'a MechanicalLaw,
        config: &'a DiscretisationConfig,
        time: f64,
    ) -> Result<Self, DiscretisationError> {
        config.validate()?;
        let ni = mesh.n_internal_faces();
        let boundary = (ni..mesh.n_faces())
            .map(|f| {
                let x = geom.face_centre[f];
                match bcs.patch(mesh.face_patch(f).expect("boundary face has a patch")) {
                    BoundaryKind::Displacement(p) => FaceData::Displacement(p.eval(&x, time)),
                    BoundaryKind::Traction(p) => FaceData::Traction(p.eval(&x, time)),
                    BoundaryKind::Symmetry => FaceData::Symmetry,
                }
            })
            .collect();
        let body = (0..mesh.n_cells())
            .map(|c| config.body_force.eval(&geom.cell_centre[c], time) * geom.volume[c])
            .collect();
        Ok(Self {
            mesh,
            geom,
            law,
            config,
            history: None,
            committed: None,
            kbar: law.stiffness(),
            time,
            boundary,
            body,
        })
    }

    pub fn with_history(mut self, history: &'a TimeHistory) -> Result<Self, DiscretisationError> {
        if history.len() != self.mesh.n_cells() {
            return Err(DiscretisationError::Length { got: history.len(), expected: self.mesh.n_cells() });
        }
        self.history = Some(history);
        Ok(self)
    }

    pub fn with_plastic_state(mut self, committed: &'a [PlasticState]) -> Result<Self, DiscretisationError> {
        if committed.len() != self.mesh.n_cells() {
            return Err(DiscretisationError::Length { got: committed.len(), expected: self.mesh.n_cells() });
        }
        self.committed = Some(committed);
        Ok(self)
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }
    pub fn geometry(&self) -> &MeshGeometry {
        self.geom
    }
    pub fn law(&self) -> &MechanicalLaw {
        self.law
    }
    pub fn config(&self) -> &DiscretisationConfig {
        self.config
    }
    pub fn time(&self) -> f64 {
        self.time
    }
    /// Stabilisation stiffness `K̄ = 2μ + λ`.
    pub fn kbar(&self) -> f64 {
        self.kbar
    }
    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }
    pub fn n_unknowns(&self) -> usize {
        self.mesh.n_cells() * self.mesh.dim()
    }

    fn unpack(&self, u_flat: &[f64]) -> Result<Vec<Vec3>, DiscretisationError> {
        if u_flat.len() != self.n_unknowns() {
            return Err(DiscretisationError::Length { got: u_flat.len(), expected: self.n_unknowns() });
        }
        Ok(from_flat(u_flat, self.dim()))
    }

    fn cell_state(&self, u: &[Vec3]) -> Result<CellState, DiscretisationError> {
        let (mesh, geom) = (self.mesh, self.geom);
        let plastic = self.law.is_plastic();
        if plastic && self.committed.is_none() {
            return Err(DiscretisationError::MissingPlasticState);
        }
        let per_cell = par_map(mesh.n_cells(), |c| {
            let grad = stencil::cell_gradient(mesh, geom, u, c)?;
            let state = self.committed.map(|s| &s[c]);
            let (sigma, trial) = self.law.stress(&grad, state).map_err(|source| DiscretisationError::Law { cell: c, source })?;
            Ok((grad, sigma, trial))
        });
        let n = mesh.n_cells();
        let mut grad = Vec::with_capacity(n);
        let mut sigma = Vec::with_capacity(n);
        let mut trial = plastic.then(|| Vec::with_capacity(n));
        for r in per_cell {
            let (g, s, t) = r?;
            grad.push(g);
            sigma.push(s);
            if let (Some(v), Some(t)) = (trial.as_mut(), t) {
                v.push(t);
            }
        }
        Ok(CellState { grad, sigma, trial })
    }

    /// Cell displacement gradients for a flat unknown vector.
    pub fn gradients(&self, u_flat: &[f64]) -> Result<Vec<Tensor>, DiscretisationError> {
        cell_gradients(self.mesh, self.geom, &self.unpack(u_flat)?)
    }

    /// Cell stresses and, for the plastic law, the trial internal state.
    pub fn stresses(&self, u_flat: &[f64]) -> Result<(Vec<Tensor>, Option<Vec<PlasticState>>), DiscretisationError> {
        let s = self.cell_state(&self.unpack(u_flat)?)?;
        Ok((s.sigma, s.trial))
    }

    fn area_vector(&self, f: &Tensor, area: &Vec3, cell: usize) -> Result<Vec3, DiscretisationError> {
        match self.config.formulation {
            Formulation::LinearGeometry => Ok(*area),
            Formulation::TotalLagrangian => {
                let j = f.determinant();
                let inv = f.try_inverse();
                match inv {
                    Some(inv) if j > 0.0 => Ok(j * inv.transpose() * area),
                    _ => Err(DiscretisationError::Law { cell, source: LawError::InvertedElement(j) }),
                }
            }
        }
    }

    /// Net force through face `f` on its owner: stress flux plus
    /// stabilisation, or only stabilisation when `stress` is false.
    fn face_flux(&self, f: usize, u: &[Vec3], s: &CellState, stress: bool) -> Result<Vec3, DiscretisationError> {
        let (mesh, g) = (self.mesh, self.geom);
        let ak = self.config.alpha * self.kbar;
        let p = mesh.owner()[f];
        let up = u[p];
        let id = Tensor::identity();
        if mesh.is_internal(f) {
            let n = mesh.neighbour()[f];
            let w = g.w[f];
            let grad_f = s.grad[p] * w + s.grad[n] * (1.0 - w);
            let mut flux = stencil::rhie_chow_face(ak, &g.delta[f], g.d_mag[f], g.area_mag[f], &up, &u[n], &grad_f);
            if stress {
                let sigma_f = s.sigma[p] * w + s.sigma[n] * (1.0 - w);
                let a = self.area_vector(&(id + grad_f.transpose()), &g.area[f], p)?;
                flux += sigma_f.transpose() * a;
            }
            return Ok(flux);
        }
        match self.boundary[f - mesh.n_internal_faces()] {
            FaceData::Traction(t) => Ok(if stress { t * g.area_mag[f] } else { Vec3::zeros() }),
            FaceData::Displacement(ub) => {
                let mut flux =
                    stencil::rhie_chow_face(ak, &g.delta[f], g.d_mag[f], g.area_mag[f], &up, &ub, &s.grad[p]);
                if stress {
                    let a = self.area_vector(&(id + s.grad[p].transpose()), &g.area[f], p)?;
                    flux += s.sigma[p].transpose() * a;
                }
                Ok(flux)
            }
            FaceData::Symmetry => {
                let r = g.reflection(f);
                let grad_s = 0.5 * (s.grad[p] + r * s.grad[p] * r);
                let mut flux =
                    stencil::rhie_chow_face(ak, &g.delta[f], g.d_mag[f], g.area_mag[f], &up, &(r * up), &grad_s);
                if stress {
                    let sigma_s = 0.5 * (s.sigma[p] + r * s.sigma[p] * r);
                    let a = self.area_vector(&(id + grad_s.transpose()), &g.area[f], p)?;
                    flux += sigma_s.transpose() * a;
                }
                Ok(flux)
            }
        }
    }

    fn assemble(&self, u: &[Vec3], s: &CellState, stress: bool, sources: bool) -> Result<Vec<Vec3>, DiscretisationError> {
        let mesh = self.mesh;
        let fluxes: Vec<Result<Vec3, DiscretisationError>> =
            par_map(mesh.n_faces(), |f| self.face_flux(f, u, s, stress));
        let fluxes: Vec<Vec3> = fluxes.into_iter().collect::<Result<_, _>>()?;
        let inertia = match (sources, self.config.dynamics) {
            (true, Dynamics::Transient { dt, rho }) => Some((dt, rho, self.history.ok_or(DiscretisationError::MissingHistory)?)),
            _ => None,
        };
        let r = par_map(mesh.n_cells(), |c| {
            let mut acc = Vec3::zeros();
            for &f in mesh.cell_faces(c) {
                if mesh.owner()[f] == c {
                    acc += fluxes[f];
                } else {
                    acc -= fluxes[f];
                }
            }
            if sources {
                acc += self.body[c];
            }
            if let Some((dt, rho, h)) = inertia {
                let a = stencil::bdf2_acceleration_at(&u[c], &h.u_t[c], &h.u_tm1[c], &h.v_t[c], &h.v_tm1[c], dt);
                acc -= rho * self.geom.volume[c] * a;
            }
            acc
        });
        Ok(r)
    }

    fn pack(&self, r: &[Vec3]) -> Result<Vec<f64>, DiscretisationError> {
        let d = self.dim();
        let mut out = Vec::with_capacity(r.len() * d);
        for (c, v) in r.iter().enumerate() {
            if !v.as_slice()[..d].iter().all(|x| x.is_finite()) {
                return Err(DiscretisationError::ResidualNan { cell: c });
            }
            out.extend_from_slice(&v.as_slice()[..d]);
        }
        Ok(out)
    }

    /// `R(u)` as a flat vector (`cell * dim + component`).
    pub fn residual(&self, u_flat: &[f64]) -> Result<Vec<f64>, DiscretisationError> {
        Ok(self.residual_with_state(u_flat)?.0)
    }

    /// `R(u)` together with the trial internal state of the plastic law.
    pub fn residual_with_state(
        &self,
        u_flat: &[f64],
    ) -> Result<(Vec<f64>, Option<Vec<PlasticState>>), DiscretisationError> {
        let u = self.unpack(u_flat)?;
        let s = self.cell_state(&u)?;
        let r = self.assemble(&u, &s, true, true)?;
        Ok((self.pack(&r)?, s.trial))
    }

    /// The Rhie-Chow term alone.
    pub fn stabilisation(&self, u_flat: &[f64]) -> Result<Vec<f64>, DiscretisationError> {
        let u = self.unpack(u_flat)?;
        let grad = cell_gradients(self.mesh, self.geom, &u)?;
        let s = CellState { grad, sigma: Vec::new(), trial: None };
        let r = self.assemble(&u, &s, false, false)?;
        self.pack(&r)
    }

    /// BDF2 velocity and acceleration of a candidate solution; zero in
    /// static mode.
    pub fn velocity_acceleration(&self, u_flat: &[f64]) -> Result<(Vec<Vec3>, Vec<Vec3>), DiscretisationError> {
        let u = self.unpack(u_flat)?;
        match self.config.dynamics {
            Dynamics::Static => Ok((vec![Vec3::zeros(); u.len()], vec![Vec3::zeros(); u.len()])),
            Dynamics::Transient { dt, .. } => {
                let h = self.history.ok_or(DiscretisationError::MissingHistory)?;
                Ok((bdf2_velocity(&u, h, dt)?, bdf2_acceleration(&u, h, dt)?))
            }
        }
    }
}
