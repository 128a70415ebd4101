use super::{dot, norm, CsrMatrix, LinalgError, LinearOperator, Preconditioner};

#[derive(Debug, Clone, PartialEq)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
    /// `‖b − A x‖ / ‖b − A x0‖` at exit.
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients on a symmetric positive-definite `a`.
///
/// Stops once `‖b − A x‖ ≤ reduction · ‖b − A x0‖` or after `max_iters`.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    precond: &dyn Preconditioner,
    reduction: f64,
    max_iters: usize,
) -> Result<CgResult, LinalgError> {
    let n = a.n();
    if b.len() != n || x0.len() != n {
        return Err(LinalgError::Dimension(format!("cg: matrix {n}, rhs {}, x0 {}", b.len(), x0.len())));
    }
    let mut x = x0.to_vec();
    let mut r: Vec<f64> = a.mul(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
    let r0 = norm(&r);
    if r0 == 0.0 {
        return Ok(CgResult { x, iters: 0, converged: true, relative_residual: 0.0 });
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut rel = 1.0;
    for it in 1..=max_iters {
        a.mul_vec(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Ok(CgResult { x, iters: it - 1, converged: false, relative_residual: rel });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rel = norm(&r) / r0;
        if rel <= reduction {
            return Ok(CgResult { x, iters: it, converged: true, relative_residual: rel });
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(CgResult { x, iters: max_iters, converged: false, relative_residual: rel })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub restart: usize,
    pub reduction: f64,
    pub max_iters: usize,
    /// Right preconditioning instead of the default left preconditioning.
    pub right: bool,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { restart: 30, reduction: 1e-3, max_iters: 500, right: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmresStatus {
    Converged,
    /// A full restart cycle failed to reduce the residual.
    Stagnated,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresResult {
    pub x: Vec<f64>,
    pub iters: usize,
    pub status: GmresStatus,
    /// Residual norm estimate after every iteration (preconditioned norm in
    /// left mode), starting with the initial residual.
    pub history: Vec<f64>,
}

impl GmresResult {
    pub fn converged(&self) -> bool {
        self.status == GmresStatus::Converged
    }
}

/// Restarted GMRES with Givens rotations.
///
/// In left mode the monitored residual is `‖P⁻¹(b − A x)‖`; in right mode it
/// is `‖b − A x‖`. Convergence is relative to the residual at `x0`.
pub fn gmres_solve(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: &[f64],
    precond: &dyn Preconditioner,
    opts: &GmresOptions,
) -> Result<GmresResult, LinalgError> {
    let n = op.n();
    if b.len() != n || x0.len() != n {
        return Err(LinalgError::Dimension(format!("gmres: operator {n}, rhs {}, x0 {}", b.len(), x0.len())));
    }
    let m = opts.restart.max(1);
    let mut x = x0.to_vec();
    let mut tmp = vec![0.0; n];
    let mut tmp2 = vec![0.0; n];

    // Residual in the monitored norm.
    let residual = |x: &[f64], out: &mut Vec<f64>, scratch: &mut Vec<f64>| -> Result<(), LinalgError> {
        op.apply(x, scratch)?;
        for i in 0..n {
            scratch[i] = b[i] - scratch[i];
        }
        if opts.right {
            out.copy_from_slice(scratch);
        } else {
            precond.apply(scratch, out);
        }
        Ok(())
    };

    let mut r = vec![0.0; n];
    residual(&x, &mut r, &mut tmp)?;
    let beta0 = norm(&r);
    let mut history = vec![beta0];
    if beta0 == 0.0 || !beta0.is_finite() {
        let status = if beta0 == 0.0 { GmresStatus::Converged } else { GmresStatus::Stagnated };
        return Ok(GmresResult { x, iters: 0, status, history });
    }
    let target = opts.reduction * beta0;
    let mut iters = 0;
    let mut beta = beta0;

    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![0.0; m]; m + 1];
    let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
    let mut g = vec![0.0; m + 1];
    loop {
        let cycle_start = beta;
        v.clear();
        v.push(r.iter().map(|ri| ri / beta).collect());
        g.iter_mut().for_each(|x| *x = 0.0);
        g[0] = beta;
        let mut k = 0;
        let mut finished = false;
        while k < m && iters < opts.max_iters {
            // w = P⁻¹ A v_k (left) or A P⁻¹ v_k (right).
            let mut w = vec![0.0; n];
            if opts.right {
                precond.apply(&v[k], &mut tmp2);
                op.apply(&tmp2, &mut w)?;
            } else {
                op.apply(&v[k], &mut tmp)?;
                precond.apply(&tmp, &mut w);
            }
            for (j, vj) in v.iter().enumerate() {
                let hj = dot(&w, vj);
                h[j][k] = hj;
                for i in 0..n {
                    w[i] -= hj * vj[i];
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let rho = h[k][k].hypot(h[k + 1][k]);
            if rho == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / rho;
                sn[k] = h[k + 1][k] / rho;
            }
            h[k][k] = rho;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iters += 1;
            k += 1;
            let res = g[k].abs();
            history.push(res);
            let happy = hn <= 1e-14 * beta0;
            if res <= target || happy {
                finished = true;
                break;
            }
            if !res.is_finite() {
                return Ok(GmresResult { x, iters, status: GmresStatus::Stagnated, history });
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }

        // Solve the k×k triangular system and update x.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        let mut dx = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                dx[i] += yj * v[j][i];
            }
        }
        if opts.right {
            precond.apply(&dx, &mut tmp2);
            dx.copy_from_slice(&tmp2);
        }
        for i in 0..n {
            x[i] += dx[i];
        }
        if finished {
            return Ok(GmresResult { x, iters, status: GmresStatus::Converged, history });
        }
        residual(&x, &mut r, &mut tmp)?;
        beta = norm(&r);
        if !beta.is_finite() {
            return Ok(GmresResult { x, iters, status: GmresStatus::Stagnated, history });
        }
        if beta <= target {
            return Ok(GmresResult { x, iters, status: GmresStatus::Converged, history });
        }
        if iters >= opts.max_iters {
            return Ok(GmresResult { x, iters, status: GmresStatus::MaxIters, history });
        }
        if beta >= cycle_start * (1.0 - 1e-10) {
            return Ok(GmresResult { x, iters, status: GmresStatus::Stagnated, history });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{build_preconditioner, BandLu, Identity, Ic0, Iluk, PreconditionerKind};

    fn poisson_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t).unwrap()
    }

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &bi)| { let mut r = r.clone(); r.push(bi); r }).collect();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap()).unwrap();
            m.swap(k, p);
            for i in k + 1..n {
                let l = m[i][k] / m[k][k];
                for j in k..=n {
                    m[i][j] -= l * m[k][j];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
            x[i] = (m[i][n] - s) / m[i][i];
        }
        x
    }

    fn rng_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()) / norm(b)
    }

    #[test]
    fn cg_identity_one_iteration() {
        let a = CsrMatrix::identity(5);
        let b = rng_vec(5, 1);
        let r = cg_solve(&a, &b, &[0.0; 5], &Identity, 1e-12, 10).unwrap();
        assert_eq!(r.iters, 1);
        assert!(rel_err(&r.x, &b) < 1e-15);
    }

    #[test]
    fn cg_poisson_matches_dense() {
        let a = poisson_1d(10);
        let b = rng_vec(10, 2);
        let r = cg_solve(&a, &b, &[0.0; 10], &Ic0::new(&a), 1e-10, 100).unwrap();
        assert!(r.converged);
        assert!(rel_err(&r.x, &dense_solve(&a.to_dense(), &b)) < 1e-8);
    }

    #[test]
    fn cg_loose_reduction_stops_early() {
        let a = poisson_1d(50);
        let b = rng_vec(50, 3);
        let r = cg_solve(&a, &b, &[0.0; 50], &crate::linalg::Jacobi::new(&a), 0.9, 100).unwrap();
        assert!(r.converged);
        assert!(r.relative_residual <= 0.9);
        assert!(r.iters <= 3);
    }

    #[test]
    fn cg_agrees_with_lu() {
        let a = poisson_1d(40);
        let b = rng_vec(40, 4);
        let cg = cg_solve(&a, &b, &[0.0; 40], &Ic0::new(&a), 1e-12, 200).unwrap();
        let lu = BandLu::new(&a).unwrap();
        let mut x = vec![0.0; 40];
        lu.apply(&b, &mut x);
        assert!(rel_err(&cg.x, &x) < 1e-8);
    }

    #[test]
    fn gmres_identity_one_iteration() {
        let a = CsrMatrix::identity(6);
        let b = rng_vec(6, 5);
        let r = gmres_solve(&a, &b, &[0.0; 6], &Identity, &GmresOptions { reduction: 1e-12, ..Default::default() }).unwrap();
        assert!(r.converged());
        assert_eq!(r.iters, 1);
    }

    fn random_nonsymmetric(n: usize, seed: u64) -> CsrMatrix {
        let vals = rng_vec(n * n, seed);
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if (i + 3 * j) % 4 == 0 || i == j {
                    d[i][j] = vals[i * n + j] + if i == j { 3.0 } else { 0.0 };
                }
            }
        }
        CsrMatrix::from_dense(&d)
    }

    #[test]
    fn gmres_exact_preconditioner_one_iteration() {
        let a = random_nonsymmetric(20, 9);
        let lu = BandLu::new(&a).unwrap();
        let b = rng_vec(20, 10);
        for right in [false, true] {
            let opts = GmresOptions { reduction: 1e-10, right, ..Default::default() };
            let r = gmres_solve(&a, &b, &[0.0; 20], &lu, &opts).unwrap();
            assert!(r.converged());
            assert_eq!(r.iters, 1);
        }
    }

    fn convection_diffusion(m: usize) -> CsrMatrix {
        let id = |i: usize, j: usize| i + m * j;
        let mut t = Vec::new();
        for j in 0..m {
            for i in 0..m {
                t.push((id(i, j), id(i, j), 4.0));
                if i > 0 {
                    t.push((id(i, j), id(i - 1, j), -1.4));
                }
                if i + 1 < m {
                    t.push((id(i, j), id(i + 1, j), -0.6));
                }
                if j > 0 {
                    t.push((id(i, j), id(i, j - 1), -1.2));
                }
                if j + 1 < m {
                    t.push((id(i, j), id(i, j + 1), -0.8));
                }
            }
        }
        CsrMatrix::from_triplets(m * m, &t).unwrap()
    }

    #[test]
    fn gmres_ilu1_matches_dense() {
        let a = convection_diffusion(10);
        let b = rng_vec(100, 11);
        let p = Iluk::new(&a, 1).unwrap();
        let opts = GmresOptions { reduction: 1e-12, ..Default::default() };
        let r = gmres_solve(&a, &b, &[0.0; 100], &p, &opts).unwrap();
        assert!(r.converged());
        assert!(rel_err(&r.x, &dense_solve(&a.to_dense(), &b)) < 1e-6);
        for cycle in r.history.chunks(30) {
            assert!(cycle.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn gmres_more_fill_fewer_iterations() {
        let m = 8;
        let a = convection_diffusion(m);
        let b = rng_vec(m * m, 12);
        let opts = GmresOptions { reduction: 1e-10, ..Default::default() };
        let it = |k| {
            let p = build_preconditioner(PreconditionerKind::Ilu(k), &a).unwrap();
            gmres_solve(&a, &b, &vec![0.0; m * m], p.as_ref(), &opts).unwrap().iters
        };
        assert!(it(1) < it(0), "ilu1 {} vs ilu0 {}", it(1), it(0));
    }

    #[test]
    fn gmres_full_lu_fill_one_iteration() {
        let a = convection_diffusion(5);
        let b = rng_vec(25, 13);
        let p = Iluk::new(&a, 25).unwrap();
        let r = gmres_solve(&a, &b, &[0.0; 25], &p, &GmresOptions { reduction: 1e-10, ..Default::default() }).unwrap();
        assert_eq!(r.iters, 1);
    }

    #[test]
    fn gmres_restarts_and_monotone_within_cycles() {
        let a = convection_diffusion(12);
        let b = rng_vec(144, 14);
        let opts = GmresOptions { restart: 5, reduction: 1e-8, max_iters: 2000, right: false };
        let r = gmres_solve(&a, &b, &[0.0; 144], &Identity, &opts).unwrap();
        assert!(r.converged());
        assert!(r.iters > 5);
        for cycle in r.history[1..].chunks(5) {
            assert!(cycle.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn gmres_stagnation_detected() {
        // Skew operator: GMRES(1) makes no progress from x0 = 0.
        let a = CsrMatrix::from_dense(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let opts = GmresOptions { restart: 1, reduction: 1e-6, max_iters: 50, right: false };
        let r = gmres_solve(&a, &[1.0, 0.0], &[0.0, 0.0], &Identity, &opts).unwrap();
        assert_eq!(r.status, GmresStatus::Stagnated);
    }
}
