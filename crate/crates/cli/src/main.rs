//! Command-line driver.
//!
//! Exit codes: 0 on success, 2 when a solve did not converge (reports are
//! still written), 1 on usage, configuration or I/O errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use solidfv::cases::{build_case, cavity_exact, run_order_study, CaseName, CaseOptions, CavityParams, StudyOptions};
use solidfv::io::{
    write_fvmesh_file, write_metrics_csv_file, write_report_csv_file, write_vtk_file, CaseConfig, VtkFields,
};
use solidfv::linalg::PreconditionerKind;
use solidfv::nonlinear::{Algorithm, Simulation, SolverConfig};
use solidfv::Vec3;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "solidfv", version, about = "Cell-centred finite-volume solid mechanics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
struct SolverFlags {
    /// Outer algorithm (segregated, jfnk).
    #[arg(long, value_parser = parse_from_str::<Algorithm>)]
    algorithm: Option<Algorithm>,
    /// Preconditioner or inner solver preconditioner (identity, jacobi, ic0, ilu<k>, lu).
    #[arg(long, value_parser = parse_from_str::<PreconditionerKind>)]
    preconditioner: Option<PreconditionerKind>,
    /// Rhie-Chow stabilisation scale in the residual.
    #[arg(long)]
    alpha: Option<f64>,
    /// Seed for mesh distortion.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the case described by a configuration file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: SolverFlags,
        /// Output directory (overrides output.directory).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Order-of-accuracy study of a built-in case with an exact solution.
    Study {
        case: String,
        /// Number of refinement levels, starting at 0.
        #[arg(long, default_value_t = 3)]
        levels: u32,
        /// Random vertex distortion factor in [0, 0.5).
        #[arg(long, default_value_t = 0.0)]
        distortion: f64,
        #[command(flatten)]
        flags: SolverFlags,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the cavity analytical field and run the near-cavity block study.
    ProbeCavity {
        #[arg(long, default_value_t = 2)]
        levels: u32,
        #[command(flatten)]
        flags: SolverFlags,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the mesh of a built-in case.
    ExportMesh {
        case: String,
        /// Destination; the format follows the extension (.fvmesh or .vtk).
        output: PathBuf,
        #[arg(long)]
        level: Option<u32>,
        #[arg(long, default_value_t = 0.0)]
        distortion: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        format: Option<MeshFormat>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeshFormat {
    Fvmesh,
    Vtk,
}

fn parse_from_str<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

/// Failure categories mapped onto exit codes.
enum Failure {
    Usage(String),
    NotConverged(String),
}

impl<E: Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

/// Writes to standard output; a closed reader is not an error.
fn say(text: &str) -> CliResult {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

impl SolverFlags {
    fn solver(&self, base: &SolverConfig) -> SolverConfig {
        let mut s = match self.algorithm {
            Some(a) if a != base.algorithm => SolverConfig { algorithm: a, max_iters: None, inner_reduction: None, ..base.clone() },
            _ => base.clone(),
        };
        if let Some(p) = self.preconditioner {
            s.preconditioner = Some(p);
        }
        s
    }

    fn case_options(&self, distortion: f64) -> CaseOptions {
        CaseOptions {
            distortion,
            seed: self.seed.unwrap_or(0),
            alpha: self.alpha.unwrap_or(1.0),
            ..Default::default()
        }
    }
}

fn threads_from_env() -> Result<usize, Failure> {
    match std::env::var("SOLIDFV_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Failure::Usage(format!("SOLIDFV_THREADS must be a positive integer, got '{v}'"))),
        },
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "case".to_string(), |s| s.to_string_lossy().into_owned())
}

fn write_fields(sim: &Simulation, path: &Path) -> Result<(), Failure> {
    let sigma = sim.stresses()?;
    let fields = VtkFields { displacement: Some(sim.displacement()), velocity: Some(sim.velocity()), stress: Some(&sigma) };
    write_vtk_file(path, &sim.problem().mesh, &fields, &format!("solidfv t = {}", sim.time()))?;
    Ok(())
}

fn run(config: &Path, flags: &SolverFlags, output: Option<&Path>) -> CliResult {
    let mut cfg = CaseConfig::from_file(config).map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
    if let Some(a) = flags.alpha {
        cfg.alpha = a;
    }
    if let Some(s) = flags.seed {
        cfg.seed = s;
    }
    let solver = flags.solver(&cfg.solver);
    solver.validate()?;
    let problem = cfg.build().map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
    let dir = output.map_or_else(|| cfg.output.directory.clone(), Path::to_path_buf);
    std::fs::create_dir_all(&dir)?;
    let name = stem(config);
    let interval = cfg.output.interval;

    let mut sim = Simulation::new(problem)?;
    let mut write_error = None;
    let report = sim.run_with(&solver, |s, step| {
        let due = interval > 0 && step.status.is_converged() && s.step() % interval == 0;
        if due && write_error.is_none() {
            if let Err(e) = write_fields(s, &dir.join(format!("{name}_{:05}.vtk", s.step()))) {
                write_error = Some(e);
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(e);
    }
    write_fields(&sim, &dir.join(format!("{name}.vtk")))?;
    write_report_csv_file(&dir.join(format!("{name}_report.csv")), &report)?;
    write_metrics_csv_file(&dir.join(format!("{name}_metrics.csv")), &report)?;

    let last = report.steps.last().map_or_else(|| "no steps".to_string(), |s| s.status.to_string());
    say(&format!(
        "{name}: {} of {} steps converged, {} outer / {} Krylov iterations, {:.3} s, last status {last}\n",
        report.steps.iter().filter(|s| s.status.is_converged()).count(),
        sim.problem().schedule.steps,
        report.total_outer_iterations(),
        report.total_krylov_iterations(),
        report.wall_seconds
    ))?;
    say(&format!("outputs written to {}\n", dir.display()))?;
    if report.all_converged() && sim.is_finished() {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!("{name}: solve did not converge ({last})")))
    }
}

fn emit(text: &str, output: Option<&Path>) -> CliResult {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => say(text)?,
    }
    Ok(())
}

fn study(case: &str, levels: u32, opts: CaseOptions, solver: SolverConfig, output: Option<&Path>) -> CliResult {
    if levels == 0 {
        return Err(Failure::Usage("--levels must be at least 1".into()));
    }
    let study = run_order_study(case, &StudyOptions { levels: (0..levels).collect(), case: opts, solver, exact_initial_guess: false })?;
    emit(&study.to_csv(), output)?;
    if study.all_converged() && study.rows.len() == levels as usize {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!("{case}: a level failed to converge")))
    }
}

fn probe_cavity(levels: u32, flags: &SolverFlags, output: Option<&Path>) -> CliResult {
    let p = CavityParams::default();
    let (s, _) = cavity_exact(&Vec3::new(p.a, 0.0, 0.0), &p)?;
    eprintln!("cavity: sigma_zz / T at the equator = {:.12} (45/22 = {:.12})", s[(2, 2)] / p.t, 45.0 / 22.0);
    let solver = flags.solver(&SolverConfig::with_algorithm(Algorithm::Jfnk));
    study(CaseName::CavityProbe.as_str(), levels, flags.case_options(0.0), solver, output)
}

fn export_mesh(case: &str, output: &Path, opts: CaseOptions, format: Option<MeshFormat>) -> CliResult {
    let def = build_case(case, &opts)?;
    let format = format.unwrap_or_else(|| match output.extension().and_then(|e| e.to_str()) {
        Some("vtk") => MeshFormat::Vtk,
        _ => MeshFormat::Fvmesh,
    });
    let mesh = &def.problem.mesh;
    match format {
        MeshFormat::Fvmesh => write_fvmesh_file(output, mesh)?,
        MeshFormat::Vtk => write_vtk_file(output, mesh, &VtkFields::default(), &format!("{case} mesh"))?,
    }
    say(&format!("{case}: {} cells, {} faces written to {}\n", mesh.n_cells(), mesh.n_faces(), output.display()))
}

fn dispatch(cli: Cli) -> CliResult {
    let threads = threads_from_env()?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    match cli.command {
        Command::Run { config, flags, output } => run(&config, &flags, output.as_deref()),
        Command::Study { case, levels, distortion, flags, output } => {
            let solver = flags.solver(&SolverConfig::with_algorithm(Algorithm::Jfnk));
            study(&case, levels, flags.case_options(distortion), solver, output.as_deref())
        }
        Command::ProbeCavity { levels, flags, output } => probe_cavity(levels, &flags, output.as_deref()),
        Command::ExportMesh { case, output, level, distortion, seed, format } => {
            let opts = CaseOptions { level, distortion, seed: seed.unwrap_or(0), ..Default::default() };
            export_mesh(&case, &output, opts, format)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::NotConverged(m)) => {
            eprintln!("{m}");
            ExitCode::from(2)
        }
    }
}
