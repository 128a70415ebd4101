use super::{Algorithm, Convergence};
use std::fmt;

/// One outer iteration. Iteration 0 records the initial residual with no
/// linear work and `s = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub r_norm: f64,
    pub krylov_iters: usize,
    /// Line-search step length (JFNK) or relaxation factor (segregated).
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Converged(Convergence),
    /// Outer iteration limit reached without meeting a criterion.
    MaxIterations,
    /// The iteration was abandoned; the reason is human readable.
    Diverged(String),
}

impl SolveStatus {
    pub fn is_converged(&self) -> bool {
        matches!(self, SolveStatus::Converged(_))
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveStatus::Converged(c) => write!(f, "converged-{}", format!("{c:?}").to_lowercase()),
            SolveStatus::MaxIterations => f.write_str("max-iters"),
            SolveStatus::Diverged(r) => write!(f, "diverged ({r})"),
        }
    }
}

/// Outcome of one time or load step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub status: SolveStatus,
    pub records: Vec<IterationRecord>,
    pub wall_seconds: f64,
}

impl StepReport {
    pub fn outer_iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    pub fn krylov_iterations(&self) -> usize {
        self.records.iter().map(|r| r.krylov_iters).sum()
    }

    pub fn initial_residual(&self) -> f64 {
        self.records.first().map_or(f64::NAN, |r| r.r_norm)
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.r_norm)
    }

    pub fn residual_history(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.r_norm).collect()
    }

    pub fn step_lengths(&self) -> Vec<f64> {
        self.records.iter().skip(1).map(|r| r.s).collect()
    }
}

/// Per-step reports of a whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    pub steps: Vec<StepReport>,
    pub wall_seconds: f64,
}

impl SolveReport {
    pub fn new(algorithm: Algorithm) -> Self {
        Self { algorithm, steps: Vec::new(), wall_seconds: 0.0 }
    }

    pub fn total_outer_iterations(&self) -> usize {
        self.steps.iter().map(StepReport::outer_iterations).sum()
    }

    pub fn total_krylov_iterations(&self) -> usize {
        self.steps.iter().map(StepReport::krylov_iterations).sum()
    }

    pub fn all_converged(&self) -> bool {
        self.steps.iter().all(|s| s.status.is_converged())
    }

    pub fn mean_outer_iterations(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.total_outer_iterations() as f64 / self.steps.len() as f64
    }
}
