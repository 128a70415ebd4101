use super::solvers::{component_preconditioners, jfnk_solve, negated_components, segregated_solve};
use super::{predict_step_start, Algorithm, NonlinearError, SolveReport, SolverConfig, StepReport};
use crate::discretisation::{assemble_approximate_jacobian, DiscretisationConfig, Dynamics, ResidualEvaluator};
use crate::fields::{from_flat, to_flat, BoundaryConditions, TimeHistory};
use crate::laws::{MechanicalLaw, PlasticField};
use crate::linalg::{BlockSparseMatrix, ComponentSplitRef, CsrMatrix, Preconditioner, PreconditionerKind};
use crate::mesh::{compute_geometry, Mesh, MeshGeometry};
use crate::{Tensor, Vec3};
use std::time::Instant;

/// Uniform stepping: step `k` ends at `t = k·dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub steps: usize,
    pub dt: f64,
}

impl Schedule {
    /// `n` equal load increments over unit pseudo-time.
    pub fn increments(n: usize) -> Self {
        Self { steps: n, dt: 1.0 / n as f64 }
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.steps)
    }
}

/// Everything needed to march a boundary-value problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: Mesh,
    pub geometry: MeshGeometry,
    pub bcs: BoundaryConditions,
    pub law: MechanicalLaw,
    pub discretisation: DiscretisationConfig,
    pub schedule: Schedule,
    pub initial_displacement: Option<Vec<Vec3>>,
    pub initial_velocity: Option<Vec<Vec3>>,
}

impl Problem {
    pub fn new(
        mesh: Mesh,
        bcs: BoundaryConditions,
        law: MechanicalLaw,
        discretisation: DiscretisationConfig,
        schedule: Schedule,
    ) -> Result<Self, NonlinearError> {
        let geometry = compute_geometry(&mesh)?;
        let p = Self {
            mesh,
            geometry,
            bcs,
            law,
            discretisation,
            schedule,
            initial_displacement: None,
            initial_velocity: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), NonlinearError> {
        self.law.validate()?;
        self.discretisation.validate()?;
        let bad = |m: String| Err(NonlinearError::InvalidConfig(m));
        if self.schedule.steps == 0 || !(self.schedule.dt > 0.0 && self.schedule.dt.is_finite()) {
            return bad("the schedule needs at least one step of positive length".into());
        }
        if let Dynamics::Transient { dt, .. } = self.discretisation.dynamics {
            if (dt - self.schedule.dt).abs() > 1e-12 * dt {
                return bad(format!("transient dt {dt} differs from the schedule dt {}", self.schedule.dt));
            }
        }
        let n = self.mesh.n_cells();
        for (what, field) in [("displacement", &self.initial_displacement), ("velocity", &self.initial_velocity)] {
            if let Some(f) = field {
                if f.len() != n {
                    return bad(format!("initial {what} has {} values for {n} cells", f.len()));
                }
            }
        }
        Ok(())
    }

    pub fn transient_dt(&self) -> Option<f64> {
        match self.discretisation.dynamics {
            Dynamics::Static => None,
            Dynamics::Transient { dt, .. } => Some(dt),
        }
    }
}

/// Marches a [`Problem`] step by step, carrying displacement history and
/// committed plastic state between steps.
pub struct Simulation {
    problem: Problem,
    jtilde: BlockSparseMatrix,
    history: TimeHistory,
    plastic: Option<PlasticField>,
    /// `−J̃_c` per component.
    neg: Vec<CsrMatrix>,
    /// `J̃` is fixed for the whole run, so factorisations are kept.
    factored: Option<(PreconditionerKind, Vec<Box<dyn Preconditioner>>)>,
    step: usize,
    last_iterate: Option<Vec<Vec3>>,
}

impl Simulation {
    pub fn new(problem: Problem) -> Result<Self, NonlinearError> {
        problem.validate()?;
        let n = problem.mesh.n_cells();
        let u0 = problem.initial_displacement.clone().unwrap_or_else(|| vec![Vec3::zeros(); n]);
        let v0 = problem.initial_velocity.clone().unwrap_or_else(|| vec![Vec3::zeros(); n]);
        let history = TimeHistory::seeded(u0, v0)?;
        let jtilde = assemble_approximate_jacobian(
            &problem.mesh,
            &problem.geometry,
            problem.law.stiffness(),
            problem.discretisation.dynamics,
        );
        let plastic = problem.law.is_plastic().then(|| PlasticField::new(n));
        let neg = negated_components(&jtilde);
        Ok(Self { problem, jtilde, history, plastic, neg, factored: None, step: 0, last_iterate: None })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    /// The compact approximate Jacobian `J̃`.
    pub fn approximate_jacobian(&self) -> &BlockSparseMatrix {
        &self.jtilde
    }

    /// Converged displacement at the current time.
    pub fn displacement(&self) -> &[Vec3] {
        &self.history.u_t
    }

    /// Last outer iterate of a step that failed to converge.
    pub fn last_iterate(&self) -> Option<&[Vec3]> {
        self.last_iterate.as_deref()
    }

    pub fn velocity(&self) -> &[Vec3] {
        &self.history.v_t
    }

    pub fn history(&self) -> &TimeHistory {
        &self.history
    }

    pub fn plastic_state(&self) -> Option<&PlasticField> {
        self.plastic.as_ref()
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.problem.schedule.time(self.step)
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.problem.schedule.steps
    }

    /// Evaluator for the step ending at `time`, bound to the stored history
    /// and committed plastic state.
    pub fn evaluator(&self, time: f64) -> Result<ResidualEvaluator<'_>, NonlinearError> {
        let p = &self.problem;
        let mut ev = ResidualEvaluator::new(&p.mesh, &p.geometry, &p.bcs, &p.law, &p.discretisation, time)?;
        if p.transient_dt().is_some() {
            ev = ev.with_history(&self.history)?;
        }
        if let Some(pl) = &self.plastic {
            ev = ev.with_plastic_state(&pl.committed)?;
        }
        Ok(ev)
    }

    /// Cell stresses of the converged displacement at the current time.
    pub fn stresses(&self) -> Result<Vec<Tensor>, NonlinearError> {
        let ev = self.evaluator(self.time())?;
        Ok(ev.stresses(&to_flat(&self.history.u_t, self.problem.mesh.dim()))?.0)
    }

    /// Solves the next step. On convergence the history advances and the
    /// plastic state is committed; otherwise the state is left unchanged.
    pub fn run_step(&mut self, cfg: &SolverConfig) -> Result<StepReport, NonlinearError> {
        cfg.validate()?;
        if self.is_finished() {
            return Err(NonlinearError::InvalidConfig("the schedule is already complete".into()));
        }
        let clock = Instant::now();
        let k = self.step + 1;
        let time = self.problem.schedule.time(k);
        let dim = self.problem.mesh.dim();
        let dt = self.problem.transient_dt();
        let h = &self.history;
        let start = to_flat(&predict_step_start(&h.u_t, &h.v_t, &h.a_t, dt), dim);
        let kind = cfg.preconditioner();
        if self.factored.as_ref().map(|f| f.0) != Some(kind) {
            self.factored = Some((kind, component_preconditioners(&self.neg, kind)?));
        }
        let parts = &self.factored.as_ref().expect("factored above").1;

        let ev = self.evaluator(time)?;
        let residual = |x: &[f64]| ev.residual(x).map_err(NonlinearError::from);
        let outcome = match cfg.algorithm {
            Algorithm::Jfnk => jfnk_solve(&residual, start, &ComponentSplitRef(parts), cfg)?,
            Algorithm::Segregated => segregated_solve(&residual, start, &self.neg, parts, cfg)?,
        };
        let accepted = if outcome.status.is_converged() {
            let (v, a) = ev.velocity_acceleration(&outcome.u)?;
            let trial = if self.plastic.is_some() { ev.residual_with_state(&outcome.u)?.1 } else { None };
            Some((v, a, trial))
        } else {
            None
        };
        drop(ev);

        let u = from_flat(&outcome.u, dim);
        match accepted {
            Some((v, a, trial)) => {
                self.history.advance(u, v, a);
                if let (Some(pl), Some(trial)) = (self.plastic.as_mut(), trial) {
                    pl.trial = trial;
                    pl.commit();
                }
                self.step = k;
                self.last_iterate = None;
            }
            None => self.last_iterate = Some(u),
        }
        Ok(StepReport {
            step: k,
            time,
            status: outcome.status,
            records: outcome.records,
            wall_seconds: clock.elapsed().as_secs_f64(),
        })
    }

    /// Runs the remaining steps, stopping after the first step that does
    /// not converge.
    pub fn run(&mut self, cfg: &SolverConfig) -> Result<SolveReport, NonlinearError> {
        self.run_with(cfg, |_, _| {})
    }

    /// As [`Simulation::run`], calling `observer` after every step.
    pub fn run_with(
        &mut self,
        cfg: &SolverConfig,
        mut observer: impl FnMut(&Simulation, &StepReport),
    ) -> Result<SolveReport, NonlinearError> {
        let clock = Instant::now();
        let mut report = SolveReport::new(cfg.algorithm);
        while !self.is_finished() {
            let step = self.run_step(cfg)?;
            observer(self, &step);
            let stop = !step.status.is_converged();
            report.steps.push(step);
            if stop {
                break;
            }
        }
        report.wall_seconds = clock.elapsed().as_secs_f64();
        Ok(report)
    }
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation")
            .field("step", &self.step)
            .field("time", &self.time())
            .field("cells", &self.problem.mesh.n_cells())
            .finish()
    }
}
