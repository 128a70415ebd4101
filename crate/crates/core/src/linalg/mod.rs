//! Sparse matrices, Krylov solvers and preconditioners.

mod factor;
mod krylov;
mod lu;
mod sparse;

pub use factor::{Ic0, Iluk, Jacobi};
pub use krylov::{cg_solve, gmres_solve, CgResult, GmresOptions, GmresResult, GmresStatus};
pub use lu::{rcm_ordering, BandLu};
pub use sparse::{BlockSparseMatrix, CsrMatrix};

use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("ILU breakdown: zero pivot in row {0}")]
    IluBreakdown(usize),
    #[error("matrix is singular to working precision (pivot {0})")]
    LuSingular(usize),
    #[error("operator failure: {0}")]
    Operator(String),
}

/// A linear map on vectors of length `n()`.
pub trait LinearOperator {
    fn n(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinalgError>;
}

impl LinearOperator for CsrMatrix {
    fn n(&self) -> usize {
        CsrMatrix::n(self)
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinalgError> {
        self.mul_vec(x, y);
        Ok(())
    }
}

impl LinearOperator for BlockSparseMatrix {
    fn n(&self) -> usize {
        self.n_scalar()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinalgError> {
        self.mul_vec(x, y);
        Ok(())
    }
}

/// Approximate inverse `z ≈ P⁻¹ r`. Implementations are linear in `r`.
pub trait Preconditioner: Send + Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Applies one scalar preconditioner per component of an interleaved
/// vector (`cell * dim + component`).
pub struct ComponentSplit {
    parts: Vec<Box<dyn Preconditioner>>,
}

impl ComponentSplit {
    pub fn new(parts: Vec<Box<dyn Preconditioner>>) -> Self {
        Self { parts }
    }
}

impl Preconditioner for ComponentSplit {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        ComponentSplitRef(&self.parts).apply(r, z)
    }
}

/// [`ComponentSplit`] over borrowed component preconditioners.
pub struct ComponentSplitRef<'a>(pub &'a [Box<dyn Preconditioner>]);

impl Preconditioner for ComponentSplitRef<'_> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let d = self.0.len();
        let n = r.len() / d;
        let mut rc = vec![0.0; n];
        let mut zc = vec![0.0; n];
        for (c, p) in self.0.iter().enumerate() {
            for i in 0..n {
                rc[i] = r[i * d + c];
            }
            p.apply(&rc, &mut zc);
            for i in 0..n {
                z[i * d + c] = zc[i];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerKind {
    Identity,
    Jacobi,
    Ic0,
    Ilu(usize),
    Lu,
}

impl fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreconditionerKind::Identity => f.write_str("identity"),
            PreconditionerKind::Jacobi => f.write_str("jacobi"),
            PreconditionerKind::Ic0 => f.write_str("ic0"),
            PreconditionerKind::Ilu(k) => write!(f, "ilu{k}"),
            PreconditionerKind::Lu => f.write_str("lu"),
        }
    }
}

impl FromStr for PreconditionerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" | "none" => Ok(Self::Identity),
            "jacobi" => Ok(Self::Jacobi),
            "ic0" => Ok(Self::Ic0),
            "lu" => Ok(Self::Lu),
            _ => s
                .strip_prefix("ilu")
                .and_then(|k| k.parse().ok())
                .map(Self::Ilu)
                .ok_or_else(|| format!("unknown preconditioner '{s}' (identity, jacobi, ic0, iluK, lu)")),
        }
    }
}

/// Factorises `a` with the requested method. ILU(k) retries once with the
/// diagonal shifted by `1e-12·max|diag|` after a zero pivot.
pub fn build_preconditioner(kind: PreconditionerKind, a: &CsrMatrix) -> Result<Box<dyn Preconditioner>, LinalgError> {
    Ok(match kind {
        PreconditionerKind::Identity => Box::new(Identity),
        PreconditionerKind::Jacobi => Box::new(Jacobi::new(a)),
        PreconditionerKind::Ic0 => Box::new(Ic0::new(a)),
        PreconditionerKind::Ilu(k) => match Iluk::new(a, k) {
            Ok(f) => Box::new(f),
            Err(LinalgError::IluBreakdown(_)) => {
                let shift = 1e-12 * a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                Box::new(Iluk::with_shift(a, k, shift)?)
            }
            Err(e) => return Err(e),
        },
        PreconditionerKind::Lu => Box::new(BandLu::new(a)?),
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_2d(m: usize) -> CsrMatrix {
        let id = |i: usize, j: usize| i + m * j;
        let mut t = Vec::new();
        for j in 0..m {
            for i in 0..m {
                t.push((id(i, j), id(i, j), 4.0));
                if i > 0 {
                    t.push((id(i, j), id(i - 1, j), -1.0));
                }
                if i + 1 < m {
                    t.push((id(i, j), id(i + 1, j), -1.0));
                }
                if j > 0 {
                    t.push((id(i, j), id(i, j - 1), -1.0));
                }
                if j + 1 < m {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(m * m, &t).unwrap()
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("ilu2".parse::<PreconditionerKind>().unwrap(), PreconditionerKind::Ilu(2));
        assert_eq!("lu".parse::<PreconditionerKind>().unwrap(), PreconditionerKind::Lu);
        assert!("amg".parse::<PreconditionerKind>().is_err());
        assert_eq!(PreconditionerKind::Ilu(1).to_string(), "ilu1");
    }

    proptest! {
        #[test]
        fn preconditioners_are_linear(
            r1 in proptest::collection::vec(-1.0f64..1.0, 25),
            r2 in proptest::collection::vec(-1.0f64..1.0, 25),
            a in -2.0f64..2.0, b in -2.0f64..2.0,
        ) {
            let m = laplacian_2d(5);
            for kind in [PreconditionerKind::Identity, PreconditionerKind::Jacobi, PreconditionerKind::Ic0,
                         PreconditionerKind::Ilu(0), PreconditionerKind::Ilu(2), PreconditionerKind::Lu] {
                let p = build_preconditioner(kind, &m).unwrap();
                let mut z1 = vec![0.0; 25];
                let mut z2 = vec![0.0; 25];
                let mut zc = vec![0.0; 25];
                p.apply(&r1, &mut z1);
                p.apply(&r2, &mut z2);
                let comb: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| a * x + b * y).collect();
                p.apply(&comb, &mut zc);
                let expect: Vec<f64> = z1.iter().zip(&z2).map(|(x, y)| a * x + b * y).collect();
                let err: f64 = norm(&zc.iter().zip(&expect).map(|(x, y)| x - y).collect::<Vec<_>>());
                let scale = a.abs() * norm(&z1) + b.abs() * norm(&z2);
                prop_assert!(err <= 1e-12 * scale.max(1e-300), "{kind}: {err}");
            }
        }
    }
}
