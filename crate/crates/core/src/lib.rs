//! Cell-centred finite-volume solid mechanics.
//!
//! The crate discretises the linear momentum balance on collocated
//! polyhedral (3-D) or polygonal (2-D) meshes and offers two outer solution
//! algorithms over the same residual:
//!
//! - a segregated quasi-Newton method that solves one Cartesian component at
//!   a time with a compact-stencil diffusion matrix, and
//! - a Jacobian-free Newton-Krylov method that uses the same compact matrix
//!   as a preconditioner for matrix-free GMRES.
//!
//! Module map:
//!
//! - [`mesh`]: topology, generators and precomputed geometry
//! - [`fields`]: cell fields, time history and boundary conditions
//! - [`laws`]: constitutive laws (Hooke, St. Venant-Kirchhoff, neo-Hookean,
//!   Guccione, neo-Hookean J2 plasticity)
//! - [`discretisation`]: residual assembly, Rhie-Chow stabilisation, BDF2 and
//!   the approximate Jacobian
//! - [`linalg`]: sparse storage, CG, GMRES, IC(0), ILU(k), LU
//! - [`nonlinear`]: the outer solvers and their reporting
//! - [`cases`]: built-in verification cases and order-of-accuracy studies
//! - [`io`]: configuration files, VTK output, CSV metrics and the mesh file
//!   format

// Negated comparisons reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cases;
pub mod discretisation;
pub mod fields;
pub mod io;
pub mod laws;
pub mod linalg;
pub mod mesh;
pub mod nonlinear;

/// Position, displacement and force vectors. 2-D problems keep `z = 0`.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Second-order tensors (gradients, stresses, deformation gradients).
pub type Tensor = nalgebra::Matrix3<f64>;

pub use discretisation::{DiscretisationConfig, Dynamics, Formulation, ResidualEvaluator};
pub use fields::{BoundaryCondition, BoundaryConditions, Prescribed};
pub use laws::MechanicalLaw;
pub use mesh::{Mesh, MeshGeometry, PatchKind};
pub use nonlinear::{Problem, SolveReport, SolverConfig};
