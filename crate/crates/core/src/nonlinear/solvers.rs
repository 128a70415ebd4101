use super::{
    check_convergence, jacobian_vector_product, line_search, Convergence, IterationRecord, LineSearch,
    NonlinearError, ResidualFn, SolveStatus, SolverConfig,
};
use crate::linalg::{
    build_preconditioner, cg_solve, gmres_solve, norm, BlockSparseMatrix, ComponentSplit, CsrMatrix, GmresOptions,
    LinalgError, LinearOperator, Preconditioner, PreconditionerKind,
};

/// Result of one nonlinear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub u: Vec<f64>,
    pub status: SolveStatus,
    pub records: Vec<IterationRecord>,
}

/// `−J̃_c` for every component (symmetric positive semi-definite).
pub fn negated_components(j: &BlockSparseMatrix) -> Vec<CsrMatrix> {
    j.components().iter().map(|m| m.scaled(-1.0)).collect()
}

pub fn component_preconditioners(
    parts: &[CsrMatrix],
    kind: PreconditionerKind,
) -> Result<Vec<Box<dyn Preconditioner>>, LinalgError> {
    parts.iter().map(|m| build_preconditioner(kind, m)).collect()
}

/// `y = −J v` by forward differences about the current iterate.
struct NegatedJvp<'a, 'r> {
    residual: &'a ResidualFn<'r>,
    u: &'a [f64],
    r: &'a [f64],
}

impl LinearOperator for NegatedJvp<'_, '_> {
    fn n(&self) -> usize {
        self.u.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinalgError> {
        let jv = jacobian_vector_product(self.residual, self.u, self.r, x)
            .map_err(|e| LinalgError::Operator(e.to_string()))?;
        for (yi, v) in y.iter_mut().zip(jv) {
            *yi = -v;
        }
        Ok(())
    }
}

fn start(residual: &ResidualFn, u: &[f64]) -> Result<(Vec<f64>, f64), String> {
    let r = residual(u).map_err(|e| format!("initial residual: {e}"))?;
    let n = norm(&r);
    if !n.is_finite() {
        return Err("initial residual is not finite".into());
    }
    Ok((r, n))
}

fn record(iter: usize, r_norm: f64, krylov_iters: usize, s: f64) -> IterationRecord {
    IterationRecord { iter, r_norm, krylov_iters, s }
}

/// Jacobian-free Newton-Krylov iteration from `u0`.
///
/// Each Newton step solves `−J δu = R` with GMRES (zero initial guess) using
/// `precond` as the approximate inverse of `−J`, then applies the
/// backtracking line search. Two consecutive inner non-convergences or a
/// failed line search end the solve as diverged.
pub fn jfnk_solve(
    residual: &ResidualFn,
    u0: Vec<f64>,
    precond: &dyn Preconditioner,
    cfg: &SolverConfig,
) -> Result<Outcome, NonlinearError> {
    cfg.validate()?;
    let mut u = u0;
    let mut records = Vec::new();
    let diverged = |u: Vec<f64>, records: Vec<IterationRecord>, why: String| Outcome {
        u,
        status: SolveStatus::Diverged(why),
        records,
    };
    let (mut r, r0) = match start(residual, &u) {
        Ok(v) => v,
        Err(why) => return Ok(diverged(u, records, why)),
    };
    records.push(record(0, r0, 0, 0.0));
    let c = check_convergence(r0, r0, f64::INFINITY, norm(&u), cfg);
    if c == Convergence::Absolute {
        return Ok(Outcome { u, status: SolveStatus::Converged(c), records });
    }
    let opts = GmresOptions {
        restart: cfg.restart,
        reduction: cfg.inner_reduction(),
        max_iters: cfg.inner_max_iters,
        right: cfg.right_preconditioning,
    };
    let mut r_norm = r0;
    let mut failures = 0;
    for k in 1..=cfg.max_iters() {
        let op = NegatedJvp { residual, u: &u, r: &r };
        let x0 = vec![0.0; u.len()];
        let lin = match gmres_solve(&op, &r, &x0, precond, &opts) {
            Ok(lin) => lin,
            Err(e) => return Ok(diverged(u, records, format!("Krylov solve failed: {e}"))),
        };
        if lin.converged() {
            failures = 0;
        } else {
            failures += 1;
            if failures >= 2 {
                records.push(record(k, r_norm, lin.iters, 0.0));
                return Ok(diverged(u, records, "GMRES did not converge in two consecutive iterations".into()));
            }
        }
        let du = lin.x;
        let s = if cfg.line_search {
            match line_search(residual, &u, &du, r_norm) {
                LineSearch::Accepted { s, u: un, r: rn, r_norm: nn } => {
                    u = un;
                    r = rn;
                    r_norm = nn;
                    s
                }
                LineSearch::Failed => {
                    records.push(record(k, r_norm, lin.iters, 0.0));
                    return Ok(diverged(u, records, "line search found no decrease".into()));
                }
            }
        } else {
            let un: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
            match residual(&un) {
                Ok(rn) if norm(&rn).is_finite() => {
                    u = un;
                    r_norm = norm(&rn);
                    r = rn;
                    1.0
                }
                Ok(_) => return Ok(diverged(u, records, "residual is not finite".into())),
                Err(e) => return Ok(diverged(u, records, format!("residual evaluation: {e}"))),
            }
        };
        records.push(record(k, r_norm, lin.iters, s));
        let c = check_convergence(r_norm, r0, s * norm(&du), norm(&u), cfg);
        if c.is_converged() {
            return Ok(Outcome { u, status: SolveStatus::Converged(c), records });
        }
    }
    Ok(Outcome { u, status: SolveStatus::MaxIterations, records })
}

/// Segregated quasi-Newton iteration in total-displacement form.
///
/// For each component `c`, `(−J̃_c) u_c = (−J̃_c) u_{k,c} + R_c(u_k)` is
/// solved by preconditioned CG to the inner reduction, starting from
/// `u_{k,c}`. `neg_parts[c]` holds `−J̃_c`.
pub fn segregated_solve(
    residual: &ResidualFn,
    u0: Vec<f64>,
    neg_parts: &[CsrMatrix],
    preconds: &[Box<dyn Preconditioner>],
    cfg: &SolverConfig,
) -> Result<Outcome, NonlinearError> {
    cfg.validate()?;
    let d = neg_parts.len();
    if d == 0 || preconds.len() != d || u0.len() != d * neg_parts[0].n() {
        return Err(NonlinearError::InvalidConfig("component matrices do not match the unknowns".into()));
    }
    let n = neg_parts[0].n();
    let mut u = u0;
    let mut records = Vec::new();
    let (mut r, r0) = match start(residual, &u) {
        Ok(v) => v,
        Err(why) => return Ok(Outcome { u, status: SolveStatus::Diverged(why), records }),
    };
    records.push(record(0, r0, 0, 0.0));
    let c = check_convergence(r0, r0, f64::INFINITY, norm(&u), cfg);
    if c == Convergence::Absolute {
        return Ok(Outcome { u, status: SolveStatus::Converged(c), records });
    }
    let reduction = cfg.inner_reduction();
    let mut uc = vec![0.0; n];
    let mut b = vec![0.0; n];
    for k in 1..=cfg.max_iters() {
        let mut inner = 0;
        let mut du_sq = 0.0;
        for comp in 0..d {
            for i in 0..n {
                uc[i] = u[i * d + comp];
            }
            neg_parts[comp].mul_vec(&uc, &mut b);
            for i in 0..n {
                b[i] += r[i * d + comp];
            }
            let sol = cg_solve(&neg_parts[comp], &b, &uc, preconds[comp].as_ref(), reduction, cfg.inner_max_iters)?;
            inner += sol.iters;
            for i in 0..n {
                let step = cfg.relaxation * (sol.x[i] - uc[i]);
                du_sq += step * step;
                u[i * d + comp] += step;
            }
        }
        let r_norm = match residual(&u) {
            Ok(rn) => {
                let nn = norm(&rn);
                r = rn;
                nn
            }
            Err(e) => {
                records.push(record(k, f64::NAN, inner, cfg.relaxation));
                return Ok(Outcome { u, status: SolveStatus::Diverged(format!("residual evaluation: {e}")), records });
            }
        };
        records.push(record(k, r_norm, inner, cfg.relaxation));
        if !r_norm.is_finite() {
            return Ok(Outcome { u, status: SolveStatus::Diverged("residual is not finite".into()), records });
        }
        let c = check_convergence(r_norm, r0, du_sq.sqrt(), norm(&u), cfg);
        if c.is_converged() {
            return Ok(Outcome { u, status: SolveStatus::Converged(c), records });
        }
    }
    Ok(Outcome { u, status: SolveStatus::MaxIterations, records })
}

/// Preconditioner for `−J` assembled from the compact approximate Jacobian.
pub fn jfnk_preconditioner(j: &BlockSparseMatrix, kind: PreconditionerKind) -> Result<ComponentSplit, LinalgError> {
    Ok(ComponentSplit::new(component_preconditioners(&negated_components(j), kind)?))
}
