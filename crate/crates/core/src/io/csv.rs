//! CSV exports of solver reports.

use super::IoError;
use crate::nonlinear::SolveReport;
use std::io::Write;
use std::path::Path;

pub const REPORT_CSV_HEADER: &str = "step,iter,r_norm,krylov_iters,s";
pub const METRICS_CSV_HEADER: &str = "step,time,status,outer_iters,krylov_iters,initial_r_norm,final_r_norm,wall_seconds";

/// One row per outer iteration of every step (iteration 0 is the initial
/// residual).
pub fn write_report_csv<W: Write>(mut w: W, report: &SolveReport) -> Result<(), IoError> {
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for st in &report.steps {
        for r in &st.records {
            writeln!(w, "{},{},{:e},{},{}", st.step, r.iter, r.r_norm, r.krylov_iters, r.s)?;
        }
    }
    Ok(())
}

fn quoted(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per step and, when any step ran, a final `total` row with the
/// summed iteration counts and the run's wall time.
pub fn write_metrics_csv<W: Write>(mut w: W, report: &SolveReport) -> Result<(), IoError> {
    writeln!(w, "{METRICS_CSV_HEADER}")?;
    if report.steps.is_empty() {
        return Ok(());
    }
    for st in &report.steps {
        writeln!(
            w,
            "{},{},{},{},{},{:e},{:e},{}",
            st.step,
            st.time,
            quoted(&st.status.to_string()),
            st.outer_iterations(),
            st.krylov_iterations(),
            st.initial_residual(),
            st.final_residual(),
            st.wall_seconds
        )?;
    }
    let status = if report.all_converged() { "converged" } else { "not-converged" };
    writeln!(
        w,
        "total,,{status},{},{},,,{}",
        report.total_outer_iterations(),
        report.total_krylov_iterations(),
        report.wall_seconds
    )?;
    Ok(())
}

pub fn write_report_csv_file(path: &Path, report: &SolveReport) -> Result<(), IoError> {
    write_report_csv(std::io::BufWriter::new(std::fs::File::create(path)?), report)
}

pub fn write_metrics_csv_file(path: &Path, report: &SolveReport) -> Result<(), IoError> {
    write_metrics_csv(std::io::BufWriter::new(std::fs::File::create(path)?), report)
}
