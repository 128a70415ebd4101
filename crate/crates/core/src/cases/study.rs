use super::{build_case, CaseError, CaseName, CaseOptions, ExactSolution};
use crate::nonlinear::{Simulation, SolverConfig};
use crate::{Tensor, Vec3};
use std::io::{self, Write};

/// Volume-weighted `L2` and maximum cell errors of displacement (vector
/// norm of the difference) and stress (Frobenius norm of the difference).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2_u: f64,
    pub linf_u: f64,
    pub l2_sigma: f64,
    pub linf_sigma: f64,
}

pub fn error_norms(volume: &[f64], centre: &[Vec3], u: &[Vec3], sigma: &[Tensor], exact: &ExactSolution) -> ErrorNorms {
    let total: f64 = volume.iter().sum();
    let (mut su, mut ss, mut mu, mut ms) = (0.0, 0.0, 0.0f64, 0.0f64);
    for c in 0..volume.len() {
        let eu = (u[c] - (exact.displacement)(&centre[c])).norm();
        let es = (sigma[c] - (exact.stress)(&centre[c])).norm();
        su += volume[c] * eu * eu;
        ss += volume[c] * es * es;
        mu = mu.max(eu);
        ms = ms.max(es);
    }
    ErrorNorms { l2_u: (su / total).sqrt(), linf_u: mu, l2_sigma: (ss / total).sqrt(), linf_sigma: ms }
}

/// `log(e_coarse / e_fine) / log(ratio)`.
pub fn observed_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub levels: Vec<u32>,
    pub case: CaseOptions,
    pub solver: SolverConfig,
    /// Start each solve from the exact field sampled at cell centres.
    pub exact_initial_guess: bool,
}

impl StudyOptions {
    /// Levels `0..count`.
    pub fn levels(count: u32, solver: SolverConfig) -> Self {
        Self { levels: (0..count).collect(), case: CaseOptions::default(), solver, exact_initial_guess: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub level: u32,
    /// Average cell width `(Σ Ω / N)^(1/dim)`.
    pub h: f64,
    pub cells: usize,
    pub dof: usize,
    pub norms: Option<ErrorNorms>,
    pub order_l2_u: Option<f64>,
    pub order_linf_u: Option<f64>,
    pub order_l2_sigma: Option<f64>,
    pub order_linf_sigma: Option<f64>,
    pub status: String,
    pub outer_iterations: usize,
    pub krylov_iterations: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderStudy {
    pub case: CaseName,
    pub rows: Vec<StudyRow>,
}

pub const STUDY_CSV_HEADER: &str = "h,cells,dof,L2_u,Linf_u,L2_sig,Linf_sig,order_L2_u,order_Linf_u,status";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6e}"))
}

impl OrderStudy {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{STUDY_CSV_HEADER}")?;
        for r in &self.rows {
            let n = r.norms;
            writeln!(
                w,
                "{:.6e},{},{},{},{},{},{},{},{},{}",
                r.h,
                r.cells,
                r.dof,
                opt(n.map(|n| n.l2_u)),
                opt(n.map(|n| n.linf_u)),
                opt(n.map(|n| n.l2_sigma)),
                opt(n.map(|n| n.linf_sigma)),
                opt(r.order_l2_u),
                opt(r.order_linf_u),
                r.status
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.norms.is_some())
    }

    /// The last row, which carries the orders of the finest pair.
    pub fn finest(&self) -> Option<&StudyRow> {
        self.rows.last()
    }
}

/// Solves the case on each level in turn and computes pairwise observed
/// orders. A level whose solve fails ends the study with that row's status
/// recorded.
pub fn run_order_study(name: &str, opts: &StudyOptions) -> Result<OrderStudy, CaseError> {
    let case: CaseName = name.parse()?;
    if opts.levels.is_empty() {
        return Err(CaseError::InvalidOption("an order study needs at least one level".into()));
    }
    let mut rows: Vec<StudyRow> = Vec::new();
    for &level in &opts.levels {
        let mut def = build_case(name, &CaseOptions { level: Some(level), ..opts.case.clone() })?;
        let exact = def.exact.clone().ok_or_else(|| {
            CaseError::InvalidOption(format!("case '{case}' has no exact solution for an order study"))
        })?;
        if opts.exact_initial_guess {
            def.problem.initial_displacement = def.exact_cell_displacement();
        }
        let g = def.problem.geometry.clone();
        let dim = def.problem.mesh.dim();
        let cells = g.volume.len();
        let h = (g.volume.iter().sum::<f64>() / cells as f64).powf(1.0 / dim as f64);
        let mut sim = Simulation::new(def.problem)?;
        let report = sim.run(&opts.solver)?;
        let status = report.steps.last().map_or_else(|| "empty".to_string(), |s| s.status.to_string());
        let norms = if report.all_converged() {
            let sigma = sim.stresses()?;
            Some(error_norms(&g.volume, &g.cell_centre, sim.displacement(), &sigma, &exact))
        } else {
            None
        };
        let mut row = StudyRow {
            level,
            h,
            cells,
            dof: cells * dim,
            norms,
            order_l2_u: None,
            order_linf_u: None,
            order_l2_sigma: None,
            order_linf_sigma: None,
            status,
            outer_iterations: report.total_outer_iterations(),
            krylov_iterations: report.total_krylov_iterations(),
            wall_seconds: report.wall_seconds,
        };
        if let (Some(prev), Some(fine)) = (rows.last(), norms) {
            if let Some(coarse) = prev.norms {
                let ratio = prev.h / h;
                row.order_l2_u = Some(observed_order(coarse.l2_u, fine.l2_u, ratio));
                row.order_linf_u = Some(observed_order(coarse.linf_u, fine.linf_u, ratio));
                row.order_l2_sigma = Some(observed_order(coarse.l2_sigma, fine.l2_sigma, ratio));
                row.order_linf_sigma = Some(observed_order(coarse.linf_sigma, fine.linf_sigma, ratio));
            }
        }
        let failed = row.norms.is_none();
        rows.push(row);
        if failed {
            break;
        }
    }
    Ok(OrderStudy { case, rows })
}

/// Period of the dominant oscillation of `values` about their mean, from
/// linearly interpolated mean crossings. Needs at least two crossings.
pub fn first_mode_period(times: &[f64], values: &[f64]) -> Option<f64> {
    if times.len() != values.len() || values.len() < 3 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut crossings = Vec::new();
    for i in 1..values.len() {
        let (a, b) = (values[i - 1] - mean, values[i] - mean);
        if a != b && (a <= 0.0) != (b <= 0.0) {
            let f = a / (a - b);
            crossings.push(times[i - 1] + f * (times[i] - times[i - 1]));
        }
    }
    match crossings.len() {
        0 | 1 => None,
        2 => Some(2.0 * (crossings[1] - crossings[0])),
        n => {
            // Full periods between every other crossing, averaged.
            let full: Vec<f64> = (2..n).map(|i| crossings[i] - crossings[i - 2]).collect();
            Some(full.iter().sum::<f64>() / full.len() as f64)
        }
    }
}
