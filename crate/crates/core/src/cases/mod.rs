//! Built-in verification and benchmark cases with their exact solutions,
//! error norms and order-of-accuracy studies.

mod exact;
mod study;

pub use exact::{
    cavity_exact, mms_body_force, mms_exact_displacement, mms_exact_gradient, mms_exact_stress, CavityParams,
    MMS_AMPLITUDE,
};
pub use study::{
    error_norms, first_mode_period, observed_order, run_order_study, ErrorNorms, OrderStudy, StudyOptions, StudyRow,
    STUDY_CSV_HEADER,
};

use crate::discretisation::{BodyForce, DiscretisationConfig, Dynamics, Formulation};
use crate::fields::{to_flat, BoundaryCondition, BoundaryConditions, FieldError, Prescribed};
use crate::laws::{ElasticConstants, Hardening, MechanicalLaw};
use crate::mesh::{distort_mesh, generate_box_hex, generate_cook_quad, BoxPatches, Mesh, MeshError, PatchKind};
use crate::nonlinear::{NonlinearError, Problem, Schedule, Simulation};
use crate::{Tensor, Vec3};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseError {
    #[error("unknown case '{0}' (mms, cavity-probe, cook-i, cook-ii, cook-iii, cantilever)")]
    UnknownCase(String),
    #[error("invalid case option: {0}")]
    InvalidOption(String),
    #[error("outside the solution domain: {0}")]
    Domain(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Nonlinear(#[from] NonlinearError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseName {
    Mms,
    CavityProbe,
    CookI,
    CookII,
    CookIII,
    Cantilever,
}

impl CaseName {
    pub const ALL: [CaseName; 6] =
        [CaseName::Mms, CaseName::CavityProbe, CaseName::CookI, CaseName::CookII, CaseName::CookIII, CaseName::Cantilever];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseName::Mms => "mms",
            CaseName::CavityProbe => "cavity-probe",
            CaseName::CookI => "cook-i",
            CaseName::CookII => "cook-ii",
            CaseName::CookIII => "cook-iii",
            CaseName::Cantilever => "cantilever",
        }
    }

    /// Refinement level used when none is requested.
    pub fn default_level(self) -> u32 {
        match self {
            CaseName::CookI | CaseName::CookII | CaseName::CookIII => 3,
            _ => 0,
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseName {
    type Err = CaseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseName::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| CaseError::UnknownCase(s.to_string()))
    }
}

/// Knobs shared by all built-in cases.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseOptions {
    /// Refinement level; `None` takes [`CaseName::default_level`]. Each level
    /// halves the spacing.
    pub level: Option<u32>,
    /// Random point perturbation as a fraction of the local minimum edge.
    pub distortion: f64,
    pub seed: u64,
    pub alpha: f64,
    /// Multiplies the applied traction.
    pub load_scale: f64,
}

impl Default for CaseOptions {
    fn default() -> Self {
        Self { level: None, distortion: 0.0, seed: 0, alpha: 1.0, load_scale: 1.0 }
    }
}

pub type DisplacementFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
pub type StressFn = Arc<dyn Fn(&Vec3) -> Tensor + Send + Sync>;

/// Exact displacement and stress fields, evaluable anywhere in the domain.
#[derive(Clone)]
pub struct ExactSolution {
    pub displacement: DisplacementFn,
    pub stress: StressFn,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ExactSolution(..)")
    }
}

/// Displacement component sampled at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub name: String,
    pub point: Vec3,
    pub component: usize,
    pub expected: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CaseDefinition {
    pub name: CaseName,
    pub level: u32,
    pub problem: Problem,
    pub exact: Option<ExactSolution>,
    pub probes: Vec<Probe>,
}

impl CaseDefinition {
    /// Exact displacement sampled at the cell centres.
    pub fn exact_cell_displacement(&self) -> Option<Vec<Vec3>> {
        let ex = self.exact.as_ref()?;
        Some(self.problem.geometry.cell_centre.iter().map(|x| (ex.displacement)(x)).collect())
    }
}

pub const MMS_E: f64 = 200e9;
pub const MMS_NU: f64 = 0.3;
pub const MMS_SIDE: f64 = 0.2;

/// Yield curve of the elastoplastic membrane, in Pa.
pub fn cook_iii_hardening() -> Hardening {
    Hardening::Exponential { y0: 0.45e6, h: 0.12924e6, y_inf: 0.715e6, delta: 16.93 }
}

pub fn build_case(name: &str, opts: &CaseOptions) -> Result<CaseDefinition, CaseError> {
    let name: CaseName = name.parse()?;
    if !(opts.distortion >= 0.0 && opts.distortion < 0.5) {
        return Err(CaseError::InvalidOption(format!("distortion must lie in [0, 0.5), got {}", opts.distortion)));
    }
    if !(opts.alpha >= 0.0 && opts.alpha.is_finite()) || !opts.load_scale.is_finite() {
        return Err(CaseError::InvalidOption("alpha and load scale must be finite, alpha non-negative".into()));
    }
    let level = opts.level.unwrap_or(name.default_level());
    let def = match name {
        CaseName::Mms => mms(level, opts)?,
        CaseName::CavityProbe => cavity_probe(level, opts)?,
        CaseName::CookI | CaseName::CookII | CaseName::CookIII => cook(name, level, opts)?,
        CaseName::Cantilever => cantilever(level, opts)?,
    };
    Ok(def)
}

fn maybe_distort(mesh: Mesh, opts: &CaseOptions) -> Result<Mesh, CaseError> {
    if opts.distortion > 0.0 {
        Ok(distort_mesh(&mesh, opts.distortion, opts.seed)?)
    } else {
        Ok(mesh)
    }
}

fn cells_at(base: usize, level: u32) -> Result<usize, CaseError> {
    if level > 8 {
        return Err(CaseError::InvalidOption(format!("refinement level {level} is too fine")));
    }
    Ok(base << level)
}

fn mms(level: u32, opts: &CaseOptions) -> Result<CaseDefinition, CaseError> {
    let n = cells_at(5, level)?;
    let mesh = generate_box_hex([MMS_SIDE; 3], [n; 3], BoxPatches::all(PatchKind::Displacement))?;
    let mesh = maybe_distort(mesh, opts)?;
    let k = ElasticConstants::from_young(MMS_E, MMS_NU);
    let conds = BoxPatches::NAMES
        .iter()
        .map(|p| BoundaryCondition::displacement(p, Prescribed::function(|x, _| mms_exact_displacement(x))))
        .collect();
    let bcs = BoundaryConditions::new(&mesh, conds)?;
    let (mu, lambda) = (k.mu, k.lambda);
    let disc = DiscretisationConfig {
        alpha: opts.alpha,
        formulation: Formulation::LinearGeometry,
        dynamics: Dynamics::Static,
        body_force: BodyForce::Field(Arc::new(move |x, _| mms_body_force(x, mu, lambda))),
    };
    let problem = Problem::new(mesh, bcs, MechanicalLaw::Hooke { mu, lambda }, disc, Schedule::increments(1))?;
    let exact = ExactSolution {
        displacement: Arc::new(mms_exact_displacement),
        stress: Arc::new(move |x| mms_exact_stress(x, mu, lambda)),
    };
    let centre = Vec3::from([0.5 * MMS_SIDE; 3]);
    let probes = vec![Probe {
        name: "centre-uz".into(),
        point: centre,
        component: 2,
        expected: Some(mms_exact_displacement(&centre).z),
    }];
    Ok(CaseDefinition { name: CaseName::Mms, level, problem, exact: Some(exact), probes })
}

/// Lower x bound of the cavity probe block; the block stays clear of the
/// cavity so no curved boundary is needed.
pub const CAVITY_BLOCK_X0: f64 = 0.25;

fn cavity_probe(level: u32, opts: &CaseOptions) -> Result<CaseDefinition, CaseError> {
    let p = CavityParams { t: CavityParams::default().t * opts.load_scale, ..CavityParams::default() };
    let n = cells_at(3, level)?;
    let kinds = [
        PatchKind::Displacement,
        PatchKind::Traction,
        PatchKind::Symmetry,
        PatchKind::Traction,
        PatchKind::Symmetry,
        PatchKind::Traction,
    ];
    let mesh = generate_box_hex([1.0 - CAVITY_BLOCK_X0, 1.0, 1.0], [n, 4 * n / 3, 4 * n / 3], BoxPatches(kinds))?
        .translated(Vec3::new(CAVITY_BLOCK_X0, 0.0, 0.0));
    let mesh = maybe_distort(mesh, opts)?;
    let sigma = move |x: &Vec3| cavity_exact(x, &p).map(|s| s.0).unwrap_or_else(|_| Tensor::from_element(f64::NAN));
    let disp = move |x: &Vec3| cavity_exact(x, &p).map(|s| s.1).unwrap_or_else(|_| Vec3::from_element(f64::NAN));
    let traction = |n: Vec3| Prescribed::function(move |x, _| sigma(x) * n);
    let bcs = BoundaryConditions::new(
        &mesh,
        vec![
            BoundaryCondition::displacement("xmin", Prescribed::function(move |x, _| disp(x))),
            BoundaryCondition::traction("xmax", traction(Vec3::x())),
            BoundaryCondition::symmetry("ymin"),
            BoundaryCondition::traction("ymax", traction(Vec3::y())),
            BoundaryCondition::symmetry("zmin"),
            BoundaryCondition::traction("zmax", traction(Vec3::z())),
        ],
    )?;
    let disc = DiscretisationConfig { alpha: opts.alpha, ..Default::default() };
    let law = MechanicalLaw::hooke(p.e, p.nu);
    let problem = Problem::new(mesh, bcs, law, disc, Schedule::increments(1))?;
    let exact = ExactSolution { displacement: Arc::new(disp), stress: Arc::new(sigma) };
    let corner = Vec3::new(CAVITY_BLOCK_X0, 0.0, 0.0);
    let probes = vec![Probe { name: "near-cavity-ux".into(), point: corner, component: 0, expected: Some(disp(&corner).x) }];
    Ok(CaseDefinition { name: CaseName::CavityProbe, level, problem, exact: Some(exact), probes })
}

fn cook(name: CaseName, level: u32, opts: &CaseOptions) -> Result<CaseDefinition, CaseError> {
    if !(1..=10).contains(&level) {
        return Err(CaseError::InvalidOption(format!("membrane refinement level must lie in 1..=10, got {level}")));
    }
    let mesh = maybe_distort(generate_cook_quad(level)?, opts)?;
    let mm = 1e-3;
    let (law, formulation, tau, steps, probe_y) = match name {
        CaseName::CookI => (MechanicalLaw::hooke(70e6, 1.0 / 3.0), Formulation::LinearGeometry, 6.25e3, 1, 60.0),
        CaseName::CookII => (MechanicalLaw::neo_hookean(1.0985e6, 0.3), Formulation::TotalLagrangian, 62.5e3, 30, 52.0),
        _ => {
            let k = ElasticConstants::from_young(206.9e6, 0.29);
            let law = MechanicalLaw::J2Plastic { mu: k.mu, kappa: k.kappa, hardening: cook_iii_hardening() };
            (law, Formulation::TotalLagrangian, 312.5e3, 30, 60.0)
        }
    };
    let load = Vec3::new(0.0, tau * opts.load_scale, 0.0);
    let right = if steps == 1 { Prescribed::Constant(load) } else { Prescribed::Ramp { value: load, duration: 1.0 } };
    let bcs = BoundaryConditions::new(
        &mesh,
        vec![
            BoundaryCondition::traction("bottom", Prescribed::zero()),
            BoundaryCondition::traction("right", right),
            BoundaryCondition::traction("top", Prescribed::zero()),
            BoundaryCondition::displacement("left", Prescribed::zero()),
        ],
    )?;
    let disc = DiscretisationConfig { alpha: opts.alpha, formulation, ..Default::default() };
    let problem = Problem::new(mesh, bcs, law, disc, Schedule::increments(steps))?;
    let probes =
        vec![Probe { name: "reference-uy".into(), point: Vec3::new(48.0 * mm, probe_y * mm, 0.0), component: 1, expected: None }];
    Ok(CaseDefinition { name, level, problem, exact: None, probes })
}

pub const CANTILEVER_DT: f64 = 1e-3;
pub const CANTILEVER_DURATION: f64 = 1.0;
pub const CANTILEVER_RHO: f64 = 1000.0;

/// Column along y, clamped at `y = 0`, with a sudden constant traction on
/// the upper face `y = 2`.
fn cantilever(level: u32, opts: &CaseOptions) -> Result<CaseDefinition, CaseError> {
    let n = cells_at(3, level)?;
    let mut kinds = [PatchKind::Traction; 6];
    kinds[2] = PatchKind::Displacement;
    let mesh = maybe_distort(generate_box_hex([0.2, 2.0, 0.2], [n, 10 * n, n], BoxPatches(kinds))?, opts)?;
    let load = Vec3::new(50e3, 50e3, 0.0) * opts.load_scale;
    let conds = BoxPatches::NAMES
        .iter()
        .map(|&p| match p {
            "ymin" => BoundaryCondition::displacement(p, Prescribed::zero()),
            "ymax" => BoundaryCondition::traction(p, Prescribed::Constant(load)),
            _ => BoundaryCondition::traction(p, Prescribed::zero()),
        })
        .collect();
    let bcs = BoundaryConditions::new(&mesh, conds)?;
    let disc = DiscretisationConfig {
        alpha: opts.alpha,
        formulation: Formulation::TotalLagrangian,
        dynamics: Dynamics::Transient { dt: CANTILEVER_DT, rho: CANTILEVER_RHO },
        body_force: BodyForce::None,
    };
    let steps = (CANTILEVER_DURATION / CANTILEVER_DT).round() as usize;
    let law = MechanicalLaw::neo_hookean(15.293e6, 0.3);
    let problem = Problem::new(mesh, bcs, law, disc, Schedule { steps, dt: CANTILEVER_DT })?;
    let probes = vec![Probe { name: "tip-ux".into(), point: Vec3::new(0.1, 2.0, 0.1), component: 0, expected: None }];
    Ok(CaseDefinition { name: CaseName::Cantilever, level, problem, exact: None, probes })
}

/// Displacement at an arbitrary point, extrapolated from the nearest cell
/// centre with the cell gradient.
pub fn probe_displacement(sim: &Simulation, point: &Vec3) -> Result<Vec3, CaseError> {
    let g = &sim.problem().geometry;
    let nearest = (0..g.cell_centre.len())
        .min_by(|&a, &b| (g.cell_centre[a] - point).norm().total_cmp(&(g.cell_centre[b] - point).norm()))
        .ok_or_else(|| CaseError::Domain("empty mesh".into()))?;
    let ev = sim.evaluator(sim.time())?;
    let u = sim.displacement();
    let grad = ev.gradients(&to_flat(u, sim.problem().mesh.dim())).map_err(NonlinearError::from)?;
    Ok(u[nearest] + grad[nearest].transpose() * (point - g.cell_centre[nearest]))
}

pub fn probe_value(sim: &Simulation, probe: &Probe) -> Result<f64, CaseError> {
    Ok(probe_displacement(sim, &probe.point)?[probe.component])
}
