//! Outer solution algorithms: segregated quasi-Newton and Jacobian-free
//! Newton-Krylov, with shared convergence checks, line search and the
//! time-step predictor.

mod report;
mod simulation;
mod solvers;

pub use report::{IterationRecord, SolveReport, SolveStatus, StepReport};
pub use simulation::{Problem, Schedule, Simulation};
pub use solvers::{
    component_preconditioners, jfnk_preconditioner, jfnk_solve, negated_components, segregated_solve, Outcome,
};

use crate::discretisation::DiscretisationError;
use crate::fields::FieldError;
use crate::laws::LawError;
use crate::linalg::{norm, LinalgError, PreconditionerKind};
use crate::mesh::MeshError;
use crate::Vec3;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearError {
    #[error(transparent)]
    Discretisation(#[from] DiscretisationError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error("Jacobian-vector product produced a non-finite value")]
    JvpNan,
    #[error("invalid solver settings: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    Segregated,
    #[default]
    Jfnk,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Segregated => "segregated",
            Algorithm::Jfnk => "jfnk",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "segregated" | "seg" => Ok(Algorithm::Segregated),
            "jfnk" | "newton-krylov" => Ok(Algorithm::Jfnk),
            _ => Err(format!("unknown algorithm '{s}' (segregated, jfnk)")),
        }
    }
}

/// Outer-solver settings. `None` fields take the algorithm default.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub a_tol: f64,
    pub r_tol: f64,
    pub s_tol: f64,
    /// Default 2000 (segregated) or 50 (JFNK).
    pub max_iters: Option<usize>,
    /// Inner relative residual reduction; default 0.9 (segregated CG) or
    /// 1e-3 (GMRES).
    pub inner_reduction: Option<f64>,
    pub restart: usize,
    /// Inner iteration cap per linear solve.
    pub inner_max_iters: usize,
    /// Default IC(0) for the segregated CG and LU for JFNK.
    pub preconditioner: Option<PreconditionerKind>,
    pub line_search: bool,
    pub right_preconditioning: bool,
    /// Segregated under-relaxation of the displacement update.
    pub relaxation: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::default(),
            a_tol: 1e-50,
            r_tol: 1e-6,
            s_tol: 0.0,
            max_iters: None,
            inner_reduction: None,
            restart: 30,
            inner_max_iters: 1000,
            preconditioner: None,
            line_search: true,
            right_preconditioning: false,
            relaxation: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        Self { algorithm, ..Default::default() }
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters.unwrap_or(match self.algorithm {
            Algorithm::Segregated => 2000,
            Algorithm::Jfnk => 50,
        })
    }

    pub fn inner_reduction(&self) -> f64 {
        self.inner_reduction.unwrap_or(match self.algorithm {
            Algorithm::Segregated => 0.9,
            Algorithm::Jfnk => 1e-3,
        })
    }

    pub fn preconditioner(&self) -> PreconditionerKind {
        self.preconditioner.unwrap_or(match self.algorithm {
            Algorithm::Segregated => PreconditionerKind::Ic0,
            Algorithm::Jfnk => PreconditionerKind::Lu,
        })
    }

    pub fn validate(&self) -> Result<(), NonlinearError> {
        let bad = |m: String| Err(NonlinearError::InvalidConfig(m));
        if !(self.a_tol >= 0.0 && self.r_tol >= 0.0 && self.s_tol >= 0.0) {
            return bad("tolerances must be non-negative".into());
        }
        if !(self.r_tol < 1.0) {
            return bad(format!("r_tol must be below 1, got {}", self.r_tol));
        }
        let red = self.inner_reduction();
        if !(red > 0.0 && red < 1.0) {
            return bad(format!("inner reduction must lie in (0, 1), got {red}"));
        }
        if self.restart == 0 || self.inner_max_iters == 0 || self.max_iters() == 0 {
            return bad("iteration limits must be positive".into());
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return bad(format!("relaxation must lie in (0, 1], got {}", self.relaxation));
        }
        Ok(())
    }
}

/// Satisfied convergence criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    Absolute,
    Relative,
    Step,
    NotConverged,
}

impl Convergence {
    pub fn is_converged(self) -> bool {
        self != Convergence::NotConverged
    }
}

/// Absolute, relative and step tests on Euclidean norms. The step test is
/// inert when `s_tol = 0`.
pub fn check_convergence(r_norm: f64, r_norm0: f64, du_norm: f64, u_norm: f64, cfg: &SolverConfig) -> Convergence {
    if r_norm <= cfg.a_tol {
        Convergence::Absolute
    } else if r_norm <= cfg.r_tol * r_norm0 {
        Convergence::Relative
    } else if cfg.s_tol > 0.0 && du_norm <= cfg.s_tol * u_norm {
        Convergence::Step
    } else {
        Convergence::NotConverged
    }
}

/// A residual as a function of the flat unknown vector.
pub type ResidualFn<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>, NonlinearError> + 'a;

/// Step size `√eps · √(1 + ‖u‖) / ‖v‖` for a forward difference.
pub fn jvp_epsilon(u_norm: f64, v_norm: f64) -> f64 {
    f64::EPSILON.sqrt() * (1.0 + u_norm).sqrt() / v_norm
}

/// Forward-difference `J·v ≈ (R(u + εv) − R(u)) / ε` with the cached `R(u)`.
pub fn jacobian_vector_product(
    residual: &ResidualFn,
    u: &[f64],
    r_u: &[f64],
    v: &[f64],
) -> Result<Vec<f64>, NonlinearError> {
    let v_norm = norm(v);
    if v_norm == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    let eps = jvp_epsilon(norm(u), v_norm);
    let up: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + eps * b).collect();
    let rp = residual(&up)?;
    let out: Vec<f64> = rp.iter().zip(r_u).map(|(p, q)| (p - q) / eps).collect();
    if out.iter().all(|x| x.is_finite()) {
        Ok(out)
    } else {
        Err(NonlinearError::JvpNan)
    }
}

/// Backtracking step lengths tried by [`line_search`].
pub const LINE_SEARCH_STEPS: [f64; 6] = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125];

#[derive(Debug, Clone, PartialEq)]
pub enum LineSearch {
    Accepted { s: f64, u: Vec<f64>, r: Vec<f64>, r_norm: f64 },
    Failed,
}

/// Accepts the first `s` in [`LINE_SEARCH_STEPS`] with
/// `‖R(u + s δu)‖ < ‖R(u)‖`. Trial points where the residual cannot be
/// evaluated count as rejections.
pub fn line_search(residual: &ResidualFn, u: &[f64], du: &[f64], r_norm0: f64) -> LineSearch {
    for s in LINE_SEARCH_STEPS {
        let trial: Vec<f64> = u.iter().zip(du).map(|(a, b)| a + s * b).collect();
        if let Ok(r) = residual(&trial) {
            let r_norm = norm(&r);
            if r_norm < r_norm0 {
                return LineSearch::Accepted { s, u: trial, r, r_norm };
            }
        }
    }
    LineSearch::Failed
}

/// Start value for a step: `u^t + Δt v^t + ½Δt² a^t`, or `u^t` when static.
pub fn predict_step_start(u_t: &[Vec3], v_t: &[Vec3], a_t: &[Vec3], dt: Option<f64>) -> Vec<Vec3> {
    match dt {
        None => u_t.to_vec(),
        Some(dt) => (0..u_t.len()).map(|i| u_t[i] + dt * v_t[i] + 0.5 * dt * dt * a_t[i]).collect(),
    }
}

#[cfg(test)]
mod tests;
