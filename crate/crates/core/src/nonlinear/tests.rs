use super::*;
use crate::discretisation::{DiscretisationConfig, Dynamics, ResidualEvaluator};
use crate::fields::{to_flat, BoundaryCondition, BoundaryConditions, Prescribed};
use crate::laws::MechanicalLaw;
use crate::linalg::{CsrMatrix, Identity, Preconditioner};
use crate::mesh::{compute_geometry, generate_box_hex, generate_cook_quad, BoxPatches, Mesh, MeshGeometry, PatchKind};
use crate::Tensor;
use approx::assert_relative_eq;

fn cfg(algorithm: Algorithm) -> SolverConfig {
    SolverConfig::with_algorithm(algorithm)
}

fn boxed(kinds: [PatchKind; 6], div: [usize; 3]) -> (Mesh, MeshGeometry) {
    let m = generate_box_hex([1.0, 1.0, 1.0], div, BoxPatches(kinds)).unwrap();
    let g = compute_geometry(&m).unwrap();
    (m, g)
}

fn zero_bcs(mesh: &Mesh) -> BoundaryConditions {
    let conds = mesh
        .patches()
        .iter()
        .map(|p| match p.kind {
            PatchKind::Displacement => BoundaryCondition::displacement(&p.name, Prescribed::zero()),
            PatchKind::Traction => BoundaryCondition::traction(&p.name, Prescribed::zero()),
            PatchKind::Symmetry => BoundaryCondition::symmetry(&p.name),
        })
        .collect();
    BoundaryConditions::new(mesh, conds).unwrap()
}

/// Two cells along x: clamped at xmin, loaded at xmax, symmetric sides.
fn pulled_pair(load: Vec3) -> (Mesh, MeshGeometry, BoundaryConditions) {
    use PatchKind::*;
    let (m, g) = boxed([Displacement, Traction, Symmetry, Symmetry, Symmetry, Symmetry], [2, 1, 1]);
    let bcs = BoundaryConditions::new(
        &m,
        vec![
            BoundaryCondition::displacement("xmin", Prescribed::zero()),
            BoundaryCondition::traction("xmax", Prescribed::Constant(load)),
            BoundaryCondition::symmetry("ymin"),
            BoundaryCondition::symmetry("ymax"),
            BoundaryCondition::symmetry("zmin"),
            BoundaryCondition::symmetry("zmax"),
        ],
    )
    .unwrap();
    (m, g, bcs)
}

#[test]
fn convergence_criteria_examples() {
    let c = SolverConfig { a_tol: 1e-10, r_tol: 1e-3, s_tol: 1e-6, ..Default::default() };
    assert_eq!(check_convergence(1e-11, 1.0, 1.0, 1.0, &c), Convergence::Absolute);
    assert_eq!(check_convergence(5e-4, 1.0, 1.0, 1.0, &c), Convergence::Relative);
    assert_eq!(check_convergence(0.5, 1.0, 1e-7, 1.0, &c), Convergence::Step);
    assert_eq!(check_convergence(0.5, 1.0, 1e-5, 1.0, &c), Convergence::NotConverged);
    let inert = SolverConfig { s_tol: 0.0, ..c };
    assert_eq!(check_convergence(0.5, 1.0, 0.0, 1.0, &inert), Convergence::NotConverged);
}

#[test]
fn defaults_follow_the_algorithm() {
    let s = cfg(Algorithm::Segregated);
    assert_eq!((s.max_iters(), s.inner_reduction(), s.preconditioner()), (2000, 0.9, PreconditionerKind::Ic0));
    let j = cfg(Algorithm::Jfnk);
    assert_eq!((j.max_iters(), j.inner_reduction(), j.preconditioner()), (50, 1e-3, PreconditionerKind::Lu));
    assert_eq!("seg".parse::<Algorithm>().unwrap(), Algorithm::Segregated);
    assert!("newton".parse::<Algorithm>().is_err());
    assert!(SolverConfig { r_tol: 1.0, ..Default::default() }.validate().is_err());
    assert!(SolverConfig { relaxation: 0.0, ..Default::default() }.validate().is_err());
    assert!(SolverConfig { inner_reduction: Some(1.0), ..Default::default() }.validate().is_err());
}

#[test]
fn jvp_of_an_affine_map_is_the_matrix_product() {
    let a = [[4.0, -1.0, 0.5], [2.0, 3.0, -2.0], [0.0, 1.0, 5.0]];
    let b = [1.0, -2.0, 0.5];
    let res = move |u: &[f64]| -> Result<Vec<f64>, NonlinearError> {
        Ok((0..3).map(|i| (0..3).map(|j| a[i][j] * u[j]).sum::<f64>() - b[i]).collect())
    };
    let u = [0.3, -0.7, 1.1];
    let v = [1.0, 2.0, -0.5];
    let ru = res(&u).unwrap();
    let jv = jacobian_vector_product(&res, &u, &ru, &v).unwrap();
    // `R(v) − R(0)` is the exact product for an affine map.
    let oracle: Vec<f64> = res(&v).unwrap().iter().zip(res(&[0.0; 3]).unwrap()).map(|(p, q)| p - q).collect();
    for (x, y) in jv.iter().zip(&oracle) {
        assert_relative_eq!(*x, *y, max_relative = 1e-6);
    }
    assert_eq!(jacobian_vector_product(&res, &u, &ru, &[0.0; 3]).unwrap(), vec![0.0; 3]);
}

#[test]
fn jvp_rejects_non_finite_results() {
    let res = |u: &[f64]| -> Result<Vec<f64>, NonlinearError> {
        Ok(vec![if u[0] > 0.0 { f64::NAN } else { 0.0 }])
    };
    let r0 = res(&[0.0]).unwrap();
    assert_eq!(jacobian_vector_product(&res, &[0.0], &r0, &[1.0]), Err(NonlinearError::JvpNan));
}

#[test]
fn jvp_matches_central_differences_for_neo_hookean() {
    let (m, g, bcs) = pulled_pair(Vec3::new(0.05, 0.02, 0.0));
    let law = MechanicalLaw::NeoHookean { mu: 1.0, kappa: 2.0 };
    for formulation in [crate::discretisation::Formulation::LinearGeometry, crate::discretisation::Formulation::TotalLagrangian] {
        let dc = DiscretisationConfig { formulation, ..Default::default() };
        let ev = ResidualEvaluator::new(&m, &g, &bcs, &law, &dc, 1.0).unwrap();
        let res = |x: &[f64]| ev.residual(x).map_err(NonlinearError::from);
        let u = [0.02, -0.01, 0.005, 0.04, 0.01, -0.003];
        let v = [0.3, -0.2, 0.1, -0.5, 0.4, 0.25];
        let ru = res(&u).unwrap();
        let jv = jacobian_vector_product(&res, &u, &ru, &v).unwrap();
        let h = 1e-7;
        let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let oracle: Vec<f64> = res(&up).unwrap().iter().zip(res(&um).unwrap()).map(|(p, q)| (p - q) / (2.0 * h)).collect();
        let err: Vec<f64> = jv.iter().zip(&oracle).map(|(a, b)| a - b).collect();
        assert!(norm(&err) <= 1e-5 * norm(&oracle), "{formulation:?}: {} vs {}", norm(&err), norm(&oracle));
    }
}

fn parabola(u: &[f64]) -> Result<Vec<f64>, NonlinearError> {
    Ok(vec![u[0] * u[0] - 1.0])
}

#[test]
fn line_search_backtracks_an_overshooting_newton_step() {
    let u = [0.1];
    let du = [(1.0 - 0.01) / 0.2];
    match line_search(&parabola, &u, &du, 0.99) {
        LineSearch::Accepted { s, u, r_norm, .. } => {
            assert_eq!(s, 0.25);
            assert_relative_eq!(u[0], 0.1 + 0.25 * du[0], max_relative = 1e-15);
            assert!(r_norm < 0.99);
        }
        LineSearch::Failed => panic!("expected acceptance"),
    }
}

#[test]
fn line_search_takes_the_full_step_on_a_linear_residual() {
    let res = |u: &[f64]| -> Result<Vec<f64>, NonlinearError> { Ok(vec![u[0] - 1.0]) };
    match line_search(&res, &[0.0], &[1.0], 1.0) {
        LineSearch::Accepted { s, r_norm, .. } => assert_eq!((s, r_norm), (1.0, 0.0)),
        LineSearch::Failed => panic!("expected acceptance"),
    }
}

#[test]
fn line_search_fails_without_decrease_and_skips_failed_evaluations() {
    assert_eq!(line_search(&parabola, &[0.5], &[0.0], 0.75), LineSearch::Failed);
    let guarded = |u: &[f64]| {
        if u[0] > 2.0 {
            Err(NonlinearError::InvalidConfig("out of range".into()))
        } else {
            parabola(u)
        }
    };
    let du = [(1.0 - 0.01) / 0.2];
    match line_search(&guarded, &[0.1], &du, 0.99) {
        LineSearch::Accepted { s, .. } => assert_eq!(s, 0.25),
        LineSearch::Failed => panic!("expected acceptance"),
    }
}

#[test]
fn predictor_examples() {
    let u = [Vec3::new(1.0, 0.0, -1.0)];
    let v = [Vec3::new(2.0, 1.0, 0.0)];
    let a = [Vec3::new(4.0, 0.0, 8.0)];
    assert_eq!(predict_step_start(&u, &v, &a, None), u.to_vec());
    assert_eq!(predict_step_start(&u, &v, &a, Some(0.5))[0], Vec3::new(2.5, 0.5, 0.0));
}

fn solve_with(
    algorithm: Algorithm,
    ev: &ResidualEvaluator,
    u0: Vec<f64>,
    c: &SolverConfig,
) -> Outcome {
    let res = |x: &[f64]| ev.residual(x).map_err(NonlinearError::from);
    let j = crate::discretisation::assemble_approximate_jacobian(ev.mesh(), ev.geometry(), ev.kbar(), ev.config().dynamics);
    let neg = negated_components(&j);
    let parts = component_preconditioners(&neg, c.preconditioner()).unwrap();
    match algorithm {
        Algorithm::Jfnk => jfnk_solve(&res, u0, &crate::linalg::ComponentSplitRef(&parts), c).unwrap(),
        Algorithm::Segregated => segregated_solve(&res, u0, &neg, &parts, c).unwrap(),
    }
}

#[test]
fn unloaded_problem_converges_at_iteration_zero() {
    use PatchKind::*;
    let (m, g) = boxed([Displacement, Traction, Symmetry, Traction, Symmetry, Traction], [2, 2, 2]);
    let bcs = zero_bcs(&m);
    let law = MechanicalLaw::hooke(1.0, 0.3);
    let dc = DiscretisationConfig::default();
    let ev = ResidualEvaluator::new(&m, &g, &bcs, &law, &dc, 1.0).unwrap();
    for a in [Algorithm::Jfnk, Algorithm::Segregated] {
        let out = solve_with(a, &ev, vec![0.0; 24], &cfg(a));
        assert_eq!(out.status, SolveStatus::Converged(Convergence::Absolute));
        assert_eq!(out.records, vec![IterationRecord { iter: 0, r_norm: 0.0, krylov_iters: 0, s: 0.0 }]);
    }
}

/// Box with `u = Aᵀx` prescribed everywhere; the discrete solution is exact.
fn linear_box() -> (Mesh, MeshGeometry, BoundaryConditions, Tensor) {
    let (m, g) = boxed(
        [PatchKind::Displacement; 6],
        [3, 2, 2],
    );
    let a = Tensor::new(0.01, 0.002, -0.003, 0.004, -0.02, 0.001, 0.0, 0.003, 0.015);
    let conds = m
        .patches()
        .iter()
        .map(|p| BoundaryCondition::displacement(&p.name, Prescribed::function(move |x, _| a.transpose() * x)))
        .collect();
    let bcs = BoundaryConditions::new(&m, conds).unwrap();
    (m, g, bcs, a)
}

#[test]
fn linear_elasticity_needs_few_newton_iterations() {
    let (m, g, bcs, a) = linear_box();
    let law = MechanicalLaw::hooke(200.0, 0.3);
    let dc = DiscretisationConfig::default();
    let ev = ResidualEvaluator::new(&m, &g, &bcs, &law, &dc, 1.0).unwrap();
    let c = SolverConfig { r_tol: 1e-10, ..cfg(Algorithm::Jfnk) };
    let out = solve_with(Algorithm::Jfnk, &ev, vec![0.0; 3 * m.n_cells()], &c);
    assert!(out.status.is_converged(), "{}", out.status);
    assert!(out.records.len() - 1 <= 3, "{} iterations", out.records.len() - 1);
    for (i, x) in g.cell_centre.iter().enumerate() {
        let exact = a.transpose() * x;
        for k in 0..3 {
            assert!((out.u[3 * i + k] - exact[k]).abs() < 1e-8, "cell {i}");
        }
    }
}

#[test]
fn segregated_reaches_the_exact_linear_solution() {
    let (m, g, bcs, a) = linear_box();
    let law = MechanicalLaw::hooke(200.0, 0.3);
    let dc = DiscretisationConfig::default();
    let ev = ResidualEvaluator::new(&m, &g, &bcs, &law, &dc, 1.0).unwrap();
    let c = SolverConfig { r_tol: 1e-10, ..cfg(Algorithm::Segregated) };
    let out = solve_with(Algorithm::Segregated, &ev, vec![0.0; 3 * m.n_cells()], &c);
    assert!(out.status.is_converged(), "{}", out.status);
    assert!(out.records.iter().skip(1).all(|r| r.s == 1.0));
    for (i, x) in g.cell_centre.iter().enumerate() {
        let exact = a.transpose() * x;
        for k in 0..3 {
            assert!((out.u[3 * i + k] - exact[k]).abs() < 1e-8, "cell {i}");
        }
    }
}

#[test]
fn both_algorithms_agree_on_a_coarse_membrane() {
    let m = generate_cook_quad(1).unwrap();
    let g = compute_geometry(&m).unwrap();
    let bcs = BoundaryConditions::new(
        &m,
        vec![
            BoundaryCondition::traction("bottom", Prescribed::zero()),
            BoundaryCondition::traction("right", Prescribed::Constant(Vec3::new(0.0, 1.0 / 16.0, 0.0))),
            BoundaryCondition::traction("top", Prescribed::zero()),
            BoundaryCondition::displacement("left", Prescribed::zero()),
        ],
    )
    .unwrap();
    let law = MechanicalLaw::hooke(70.0, 1.0 / 3.0);
    let dc = DiscretisationConfig::default();
    let ev = ResidualEvaluator::new(&m, &g, &bcs, &law, &dc, 1.0).unwrap();
    let n = 2 * m.n_cells();
    let jf = solve_with(Algorithm::Jfnk, &ev, vec![0.0; n], &SolverConfig { r_tol: 1e-10, ..cfg(Algorithm::Jfnk) });
    let sg = solve_with(
        Algorithm::Segregated,
        &ev,
        vec![0.0; n],
        &SolverConfig { r_tol: 1e-10, ..cfg(Algorithm::Segregated) },
    );
    assert!(jf.status.is_converged() && sg.status.is_converged());
    let diff: Vec<f64> = jf.u.iter().zip(&sg.u).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) <= 1e-7 * norm(&jf.u), "{} vs {}", norm(&diff), norm(&jf.u));
    assert!(jf.records.len() < sg.records.len());
}

#[test]
fn records_are_consistent() {
    let (m, g, bcs) = pulled_pair(Vec3::new(0.3, 0.1, 0.0));
    let law = MechanicalLaw::NeoHookean { mu: 1.0, kappa: 2.0 };
    let dc = DiscretisationConfig { formulation: crate::discretisation::Formulation::TotalLagrangian, ..Default::default() };
    let ev = ResidualEvaluator::new(&m, &g, &bcs, &law, &dc, 1.0).unwrap();
    for a in [Algorithm::Jfnk, Algorithm::Segregated] {
        let out = solve_with(a, &ev, vec![0.0; 6], &SolverConfig { r_tol: 1e-9, ..cfg(a) });
        assert!(out.status.is_converged(), "{a}: {}", out.status);
        let r = &out.records;
        assert_eq!((r[0].iter, r[0].krylov_iters, r[0].s), (0, 0, 0.0));
        assert!(r.iter().enumerate().all(|(i, x)| x.iter == i));
        assert!(r.iter().skip(1).all(|x| x.krylov_iters > 0));
        if a == Algorithm::Jfnk {
            assert!(r.iter().skip(1).all(|x| LINE_SEARCH_STEPS.contains(&x.s)));
        }
        assert!(r.last().unwrap().r_norm <= 1e-9 * r[0].r_norm);
        let again = solve_with(a, &ev, vec![0.0; 6], &SolverConfig { r_tol: 1e-9, ..cfg(a) });
        assert_eq!(again, out);
    }
}

#[test]
fn iteration_limit_is_reported() {
    let (m, g, bcs) = pulled_pair(Vec3::new(0.3, 0.1, 0.0));
    let law = MechanicalLaw::NeoHookean { mu: 1.0, kappa: 2.0 };
    let dc = DiscretisationConfig::default();
    let ev = ResidualEvaluator::new(&m, &g, &bcs, &law, &dc, 1.0).unwrap();
    let c = SolverConfig { r_tol: 1e-14, max_iters: Some(2), ..cfg(Algorithm::Segregated) };
    let out = solve_with(Algorithm::Segregated, &ev, vec![0.0; 6], &c);
    assert_eq!(out.status, SolveStatus::MaxIterations);
    assert_eq!(out.records.len(), 3);
}

#[test]
fn jfnk_reports_a_failed_line_search_as_divergence() {
    // `|R|` has a strict local minimum away from the root, so no Newton
    // step from it can decrease the residual.
    let res = |u: &[f64]| -> Result<Vec<f64>, NonlinearError> { Ok(vec![u[0] * u[0] + 1.0]) };
    let out = jfnk_solve(&res, vec![0.0], &Identity, &cfg(Algorithm::Jfnk)).unwrap();
    assert!(matches!(out.status, SolveStatus::Diverged(_)), "{}", out.status);
    let res = |u: &[f64]| -> Result<Vec<f64>, NonlinearError> { Ok(vec![u[0] * u[0] + 1.0 + 1e-3 * u[0]]) };
    let out = jfnk_solve(&res, vec![0.0], &Identity, &cfg(Algorithm::Jfnk)).unwrap();
    assert!(matches!(out.status, SolveStatus::Diverged(_)), "{}", out.status);
}

#[test]
fn an_unevaluable_start_is_a_divergence() {
    let res = |_: &[f64]| -> Result<Vec<f64>, NonlinearError> { Err(NonlinearError::JvpNan) };
    let out = jfnk_solve(&res, vec![0.0], &Identity, &cfg(Algorithm::Jfnk)).unwrap();
    assert!(matches!(out.status, SolveStatus::Diverged(_)));
    assert!(out.records.is_empty());
}

#[test]
fn segregated_checks_component_shapes() {
    let res = |u: &[f64]| -> Result<Vec<f64>, NonlinearError> { Ok(u.to_vec()) };
    let parts: Vec<Box<dyn Preconditioner>> = vec![Box::new(Identity)];
    let err = segregated_solve(&res, vec![0.0; 3], &[CsrMatrix::identity(2)], &parts, &cfg(Algorithm::Segregated));
    assert!(matches!(err, Err(NonlinearError::InvalidConfig(_))));
}

fn pulled_problem(law: MechanicalLaw, steps: usize, dynamics: Dynamics) -> Problem {
    let (m, _, _) = pulled_pair(Vec3::zeros());
    let bcs = BoundaryConditions::new(
        &m,
        vec![
            BoundaryCondition::displacement("xmin", Prescribed::zero()),
            BoundaryCondition::traction(
                "xmax",
                Prescribed::Ramp { value: Vec3::new(0.2, 0.05, 0.0), duration: 1.0 },
            ),
            BoundaryCondition::symmetry("ymin"),
            BoundaryCondition::symmetry("ymax"),
            BoundaryCondition::symmetry("zmin"),
            BoundaryCondition::symmetry("zmax"),
        ],
    )
    .unwrap();
    let dc = DiscretisationConfig { dynamics, ..Default::default() };
    let dt = match dynamics {
        Dynamics::Static => 1.0 / steps as f64,
        Dynamics::Transient { dt, .. } => dt,
    };
    Problem::new(m, bcs, law, dc, Schedule { steps, dt }).unwrap()
}

#[test]
fn schedule_arithmetic() {
    let s = Schedule::increments(4);
    assert_eq!((s.dt, s.time(2), s.end_time()), (0.25, 0.5, 1.0));
}

#[test]
fn simulation_marches_load_increments() {
    let law = MechanicalLaw::NeoHookean { mu: 1.0, kappa: 2.0 };
    let mut sim = Simulation::new(pulled_problem(law.clone(), 3, Dynamics::Static)).unwrap();
    let mut seen = Vec::new();
    let report = sim.run_with(&cfg(Algorithm::Jfnk), |s, r| seen.push((s.step(), r.step))).unwrap();
    assert!(report.all_converged());
    assert_eq!(seen, vec![(1, 1), (2, 2), (3, 3)]);
    assert_eq!(sim.time(), 1.0);
    assert!(sim.is_finished());
    assert!(sim.run_step(&cfg(Algorithm::Jfnk)).is_err());
    // Three increments and one step reach the same equilibrium.
    let mut once = Simulation::new(pulled_problem(law, 1, Dynamics::Static)).unwrap();
    once.run(&SolverConfig { r_tol: 1e-10, ..cfg(Algorithm::Jfnk) }).unwrap();
    let mut fine = Simulation::new(pulled_problem(MechanicalLaw::NeoHookean { mu: 1.0, kappa: 2.0 }, 3, Dynamics::Static)).unwrap();
    fine.run(&SolverConfig { r_tol: 1e-10, ..cfg(Algorithm::Jfnk) }).unwrap();
    for (a, b) in once.displacement().iter().zip(fine.displacement()) {
        assert!((a - b).norm() < 1e-8);
    }
    assert_eq!(report.steps.len(), 3);
    assert!(report.total_krylov_iterations() >= report.total_outer_iterations());
}

#[test]
fn simulation_stops_after_a_failed_step() {
    let law = MechanicalLaw::NeoHookean { mu: 1.0, kappa: 2.0 };
    let mut sim = Simulation::new(pulled_problem(law, 3, Dynamics::Static)).unwrap();
    let c = SolverConfig { r_tol: 1e-14, max_iters: Some(1), ..cfg(Algorithm::Segregated) };
    let report = sim.run(&c).unwrap();
    assert_eq!(report.steps.len(), 1);
    assert!(!report.all_converged());
    assert_eq!(sim.step(), 0);
    assert!(sim.last_iterate().is_some());
    assert!(sim.displacement().iter().all(|u| u.norm() == 0.0));
}

#[test]
fn transient_problems_need_a_matching_step() {
    let law = MechanicalLaw::hooke(1.0, 0.3);
    let (m, _, bcs) = pulled_pair(Vec3::zeros());
    let dc = DiscretisationConfig { dynamics: Dynamics::Transient { dt: 0.1, rho: 1.0 }, ..Default::default() };
    let err = Problem::new(m, bcs, law, dc, Schedule { steps: 2, dt: 0.2 }).unwrap_err();
    assert!(matches!(err, NonlinearError::InvalidConfig(_)));
}

#[test]
fn transient_steps_advance_the_history() {
    let law = MechanicalLaw::hooke(1.0, 0.3);
    let dyn_ = Dynamics::Transient { dt: 0.1, rho: 1.0 };
    let mut sim = Simulation::new(pulled_problem(law, 2, dyn_)).unwrap();
    sim.run(&cfg(Algorithm::Jfnk)).unwrap();
    let h = sim.history();
    assert!(h.u_t.iter().any(|u| u.norm() > 0.0));
    // The stored velocity is the BDF2 derivative of the stored levels.
    let ev = sim.evaluator(sim.time()).unwrap();
    assert!(ev.config().dynamics == dyn_);
    for i in 0..h.len() {
        assert!(h.v_t[i].norm().is_finite() && h.a_t[i].norm().is_finite());
    }
    assert_ne!(h.u_t, h.u_tm1);
}

#[test]
fn plastic_state_is_committed_after_each_step() {
    use crate::laws::Hardening;
    let law = MechanicalLaw::J2Plastic { mu: 1.0, kappa: 2.0, hardening: Hardening::Perfect(0.05) };
    let mut sim = Simulation::new(pulled_problem(law, 2, Dynamics::Static)).unwrap();
    let report = sim.run(&cfg(Algorithm::Jfnk)).unwrap();
    assert!(report.all_converged());
    let pl = sim.plastic_state().unwrap();
    assert_eq!(pl.committed, pl.trial);
    assert!(pl.committed.iter().any(|s| s.eps_p > 0.0));
    // Re-evaluating at the converged state from the committed state gives no
    // further flow: the residual stays in equilibrium.
    let ev = sim.evaluator(sim.time()).unwrap();
    let r = ev.residual(&to_flat(sim.displacement(), 3)).unwrap();
    assert!(norm(&r) <= 1e-5 * report.steps.last().unwrap().initial_residual());
}

#[test]
fn simulation_stresses_have_cell_count() {
    let law = MechanicalLaw::hooke(1.0, 0.3);
    let mut sim = Simulation::new(pulled_problem(law, 1, Dynamics::Static)).unwrap();
    sim.run(&cfg(Algorithm::Jfnk)).unwrap();
    let s = sim.stresses().unwrap();
    assert_eq!(s.len(), 2);
    assert!(s.iter().all(|t| (t - t.transpose()).norm() < 1e-12));
}
