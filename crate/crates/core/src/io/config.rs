//! Line-oriented `section.key = value` case files.
//!
//! ```text
//! # Cook's membrane, linear elastic
//! mesh.generator = cook
//! mesh.level = 3
//! material.law = hooke
//! material.E = 70e6
//! material.nu = 0.3333333333333333
//! bcs.left = displacement 0 0 0
//! bcs.right = traction 0 6250 0
//! bcs.top = traction 0 0 0
//! bcs.bottom = traction 0 0 0
//! solver.algorithm = jfnk
//! time.steps = 1
//! output.directory = out
//! ```
//!
//! Units are SI throughout (m, Pa, s, kg/m³). Text after `#` is a comment.
//! Every key is consumed exactly once; leftovers are reported as unknown.

use crate::discretisation::{BodyForce, DiscretisationConfig, Dynamics, Formulation};
use crate::fields::{BoundaryCondition, BoundaryConditions, Prescribed};
use crate::laws::{ElasticConstants, GuccioneParams, Hardening, MechanicalLaw};
use crate::linalg::PreconditionerKind;
use crate::mesh::{distort_mesh, generate_box_hex, generate_cook_quad, generate_quad, BoxPatches, Mesh, PatchKind};
use crate::nonlinear::{Algorithm, Problem, Schedule, SolverConfig};
use crate::Vec3;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

/// A configuration problem, located at a line when one is known.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }
    fn general(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

pub const SECTIONS: [&str; 6] = ["mesh", "material", "bcs", "solver", "time", "output"];

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    /// Cook's membrane at a refinement level.
    Cook { level: u32 },
    /// Box `[0,ex]×[0,ey]×[0,ez]`; patches `xmin … zmax`.
    Box { extent: [f64; 3], cells: [usize; 3] },
    /// 2-D quadrilateral patch from four counter-clockwise corners; patches
    /// `bottom, right, top, left`.
    Quad { corners: [Vec3; 4], cells: [usize; 2] },
    /// FVMESH file, resolved against the case file's directory.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcSpec {
    pub patch: String,
    pub kind: PatchKind,
    pub value: Vec3,
    /// Scale the value linearly from 0 to 1 over the run.
    pub ramp: bool,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Write fields every `interval` steps; 0 writes only the final state.
    pub interval: usize,
}

/// Declarative case description. [`CaseConfig::build`] turns it into a
/// [`Problem`].
#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub mesh: MeshSpec,
    pub distortion: f64,
    pub seed: u64,
    pub law: MechanicalLaw,
    /// Density in kg/m³, required for transient runs.
    pub rho: Option<f64>,
    /// Body force per unit volume in N/m³.
    pub body_force: Option<Vec3>,
    pub bcs: Vec<BcSpec>,
    pub solver: SolverConfig,
    pub alpha: f64,
    pub formulation: Formulation,
    pub transient: bool,
    pub steps: usize,
    /// Step size in s; static runs default to `1 / steps`.
    pub dt: Option<f64>,
    pub output: OutputConfig,
}

struct Entry {
    value: String,
    line: usize,
}

/// Key/value store that tracks which keys have been read.
struct Document {
    entries: BTreeMap<String, Entry>,
}

impl Document {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, format!("expected 'section.key = value', got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let (section, name) = key
                .split_once('.')
                .ok_or_else(|| ConfigError::at(line, format!("key '{key}' has no section prefix")))?;
            if !SECTIONS.contains(&section) {
                return Err(ConfigError::at(
                    line,
                    format!("unknown section '{section}' (expected one of {})", SECTIONS.join(", ")),
                ));
            }
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(ConfigError::at(line, format!("malformed key '{key}'")));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("key '{key}' has no value")));
            }
            if let Some(prev) = entries.get(key) {
                let prev: &Entry = prev;
                return Err(ConfigError::at(line, format!("duplicate key '{key}' (first set on line {})", prev.line)));
            }
            entries.insert(key.to_string(), Entry { value: value.to_string(), line });
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key).map(|e| (e.value, e.line))
    }

    fn require(&mut self, key: &str) -> Result<(String, usize), ConfigError> {
        self.take(key).ok_or_else(|| ConfigError::general(format!("missing required key '{key}'")))
    }

    fn parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => {
                v.parse().map(Some).map_err(|e| ConfigError::at(line, format!("invalid value '{v}' for '{key}': {e}")))
            }
        }
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => parse_f64(&v, line, key).map(Some),
        }
    }

    fn required_f64(&mut self, key: &str) -> Result<f64, ConfigError> {
        let (v, line) = self.require(key)?;
        parse_f64(&v, line, key)
    }

    fn numbers(&mut self, key: &str, count: usize) -> Result<Option<(Vec<f64>, usize)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => {
                let xs = v.split_whitespace().map(|t| parse_f64(t, line, key)).collect::<Result<Vec<_>, _>>()?;
                if xs.len() != count {
                    return Err(ConfigError::at(line, format!("'{key}' expects {count} numbers, got {}", xs.len())));
                }
                Ok(Some((xs, line)))
            }
        }
    }

    fn bcs(&mut self) -> Vec<(String, String, usize)> {
        let keys: Vec<String> = self.entries.keys().filter(|k| k.starts_with("bcs.")).cloned().collect();
        keys.into_iter()
            .map(|k| {
                let e = self.entries.remove(&k).expect("key listed above");
                (k["bcs.".len()..].to_string(), e.value, e.line)
            })
            .collect()
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((k, e)) => Err(ConfigError::at(e.line, format!("unknown or inapplicable key '{k}'"))),
        }
    }
}

fn parse_f64(v: &str, line: usize, key: &str) -> Result<f64, ConfigError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(ConfigError::at(line, format!("'{key}' expects a finite number, got '{v}'"))),
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

fn cell_counts(xs: &[f64], line: usize) -> Result<Vec<usize>, ConfigError> {
    xs.iter()
        .map(|&x| {
            if x >= 1.0 && x.fract() == 0.0 && x <= 1e7 {
                Ok(x as usize)
            } else {
                Err(ConfigError::at(line, format!("cell counts must be positive integers, got {x}")))
            }
        })
        .collect()
}

fn parse_mesh(doc: &mut Document, base_dir: &Path) -> Result<MeshSpec, ConfigError> {
    let (generator, line) = doc.require("mesh.generator")?;
    Ok(match generator.as_str() {
        "cook" => MeshSpec::Cook { level: doc.parsed("mesh.level")?.unwrap_or(3) },
        "box" => {
            let (e, _) = doc.numbers("mesh.extent", 3)?.ok_or_else(|| ConfigError::general("missing required key 'mesh.extent'"))?;
            let (c, cl) = doc.numbers("mesh.cells", 3)?.ok_or_else(|| ConfigError::general("missing required key 'mesh.cells'"))?;
            let c = cell_counts(&c, cl)?;
            MeshSpec::Box { extent: [e[0], e[1], e[2]], cells: [c[0], c[1], c[2]] }
        }
        "quad" => {
            let (p, _) =
                doc.numbers("mesh.corners", 8)?.ok_or_else(|| ConfigError::general("missing required key 'mesh.corners'"))?;
            let (c, cl) = doc.numbers("mesh.cells", 2)?.ok_or_else(|| ConfigError::general("missing required key 'mesh.cells'"))?;
            let c = cell_counts(&c, cl)?;
            let corner = |i: usize| Vec3::new(p[2 * i], p[2 * i + 1], 0.0);
            MeshSpec::Quad { corners: [corner(0), corner(1), corner(2), corner(3)], cells: [c[0], c[1]] }
        }
        "file" => {
            let (path, _) = doc.require("mesh.file")?;
            MeshSpec::File(base_dir.join(path))
        }
        other => {
            return Err(ConfigError::at(line, format!("unknown mesh generator '{other}' (cook, box, quad, file)")));
        }
    })
}

fn parse_hardening(doc: &mut Document) -> Result<Hardening, ConfigError> {
    let (kind, line) = doc.require("material.hardening")?;
    Ok(match kind.as_str() {
        "perfect" => Hardening::Perfect(doc.required_f64("material.sigma_y")?),
        "exponential" => Hardening::Exponential {
            y0: doc.required_f64("material.sigma_y")?,
            h: doc.f64("material.hardening_modulus")?.unwrap_or(0.0),
            y_inf: doc.required_f64("material.sigma_inf")?,
            delta: doc.required_f64("material.delta")?,
        },
        "table" => {
            let (v, tl) = doc.require("material.hardening_table")?;
            let xs = v.split_whitespace().map(|t| parse_f64(t, tl, "material.hardening_table")).collect::<Result<Vec<_>, _>>()?;
            if xs.is_empty() || xs.len() % 2 != 0 {
                return Err(ConfigError::at(tl, "'material.hardening_table' expects pairs 'eps sigma_y ...'"));
            }
            Hardening::Table(xs.chunks(2).map(|c| (c[0], c[1])).collect())
        }
        other => {
            return Err(ConfigError::at(line, format!("unknown hardening '{other}' (perfect, exponential, table)")));
        }
    })
}

fn parse_law(doc: &mut Document) -> Result<MechanicalLaw, ConfigError> {
    let (name, line) = doc.require("material.law")?;
    let law = match name.as_str() {
        "hooke" | "stvk" | "neo-hookean" | "j2-plastic" => {
            let e = doc.required_f64("material.E")?;
            let nu = doc.required_f64("material.nu")?;
            if !(e > 0.0 && nu > -1.0 && nu < 0.5) {
                return Err(ConfigError::at(line, format!("require E > 0 and -1 < nu < 0.5, got E = {e}, nu = {nu}")));
            }
            let k = ElasticConstants::from_young(e, nu);
            match name.as_str() {
                "hooke" => MechanicalLaw::Hooke { mu: k.mu, lambda: k.lambda },
                "stvk" => MechanicalLaw::StVenantKirchhoff { mu: k.mu, lambda: k.lambda },
                "neo-hookean" => MechanicalLaw::NeoHookean { mu: k.mu, kappa: k.kappa },
                _ => MechanicalLaw::J2Plastic { mu: k.mu, kappa: k.kappa, hardening: parse_hardening(doc)? },
            }
        }
        "guccione" => {
            let (f0, fl) = doc.numbers("material.fibre", 3)?.unwrap_or((vec![1.0, 0.0, 0.0], line));
            let f0 = Vec3::new(f0[0], f0[1], f0[2]);
            if !(f0.norm() > 0.0) {
                return Err(ConfigError::at(fl, "fibre direction must be non-zero"));
            }
            MechanicalLaw::Guccione(GuccioneParams {
                c: doc.required_f64("material.C")?,
                c_f: doc.required_f64("material.c_f")?,
                c_t: doc.required_f64("material.c_t")?,
                c_fs: doc.required_f64("material.c_fs")?,
                kappa: doc.required_f64("material.kappa")?,
                f0: f0.normalize(),
            })
        }
        other => {
            return Err(ConfigError::at(
                line,
                format!("unknown law '{other}' (hooke, stvk, neo-hookean, j2-plastic, guccione)"),
            ));
        }
    };
    law.validate().map_err(|e| ConfigError::at(line, e.to_string()))?;
    Ok(law)
}

fn parse_bc(patch: String, value: &str, line: usize) -> Result<BcSpec, ConfigError> {
    let mut tokens = value.split_whitespace();
    let kind: PatchKind =
        tokens.next().unwrap_or("").parse().map_err(|e: crate::mesh::MeshError| ConfigError::at(line, e.to_string()))?;
    let rest: Vec<&str> = tokens.collect();
    let (numbers, ramp) = match rest.last() {
        Some(&"ramp") => (&rest[..rest.len() - 1], true),
        _ => (&rest[..], false),
    };
    let key = format!("bcs.{patch}");
    let xs = numbers.iter().map(|t| parse_f64(t, line, &key)).collect::<Result<Vec<_>, _>>()?;
    let value = match (kind, xs.len()) {
        (PatchKind::Symmetry, 0) if !ramp => Vec3::zeros(),
        (PatchKind::Symmetry, _) => return Err(ConfigError::at(line, "a symmetry condition takes no value")),
        (_, 3) => Vec3::new(xs[0], xs[1], xs[2]),
        (_, n) => {
            return Err(ConfigError::at(line, format!("'{key}' expects '{kind} x y z [ramp]', got {n} numbers")));
        }
    };
    Ok(BcSpec { patch, kind, value, ramp, line })
}

fn parse_solver(doc: &mut Document) -> Result<(SolverConfig, f64, Formulation), ConfigError> {
    let algorithm: Algorithm = doc.parsed("solver.algorithm")?.unwrap_or_default();
    let mut s = SolverConfig::with_algorithm(algorithm);
    if let Some(v) = doc.f64("solver.a_tol")? {
        s.a_tol = v;
    }
    if let Some(v) = doc.f64("solver.r_tol")? {
        s.r_tol = v;
    }
    if let Some(v) = doc.f64("solver.s_tol")? {
        s.s_tol = v;
    }
    s.max_iters = doc.parsed("solver.max_iters")?;
    s.inner_reduction = doc.f64("solver.inner_reduction")?;
    if let Some(v) = doc.parsed("solver.restart")? {
        s.restart = v;
    }
    if let Some(v) = doc.parsed("solver.inner_max_iters")? {
        s.inner_max_iters = v;
    }
    s.preconditioner = doc.parsed::<PreconditionerKind>("solver.preconditioner")?;
    if let Some((v, line)) = doc.take("solver.line_search") {
        s.line_search = parse_bool(&v).map_err(|e| ConfigError::at(line, format!("'solver.line_search': {e}")))?;
    }
    if let Some((v, line)) = doc.take("solver.right_preconditioning") {
        s.right_preconditioning =
            parse_bool(&v).map_err(|e| ConfigError::at(line, format!("'solver.right_preconditioning': {e}")))?;
    }
    if let Some(v) = doc.f64("solver.relaxation")? {
        s.relaxation = v;
    }
    s.validate().map_err(|e| ConfigError::general(e.to_string()))?;
    let alpha = doc.f64("solver.alpha")?.unwrap_or(1.0);
    if !(alpha > 0.0) {
        return Err(ConfigError::general(format!("solver.alpha must be positive, got {alpha}")));
    }
    let formulation = doc.parsed("solver.formulation")?.unwrap_or_default();
    Ok((s, alpha, formulation))
}

impl CaseConfig {
    /// Parses a case file. Relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut doc = Document::parse(text)?;
        let mesh = parse_mesh(&mut doc, base_dir)?;
        let distortion = doc.f64("mesh.distortion")?.unwrap_or(0.0);
        if !(0.0..0.5).contains(&distortion) {
            return Err(ConfigError::general(format!("mesh.distortion must lie in [0, 0.5), got {distortion}")));
        }
        let seed = doc.parsed("mesh.seed")?.unwrap_or(0);
        let law = parse_law(&mut doc)?;
        let rho = doc.f64("material.rho")?;
        let body_force = doc.numbers("material.body_force", 3)?.map(|(v, _)| Vec3::new(v[0], v[1], v[2]));
        let bcs = doc.bcs().into_iter().map(|(p, v, l)| parse_bc(p, &v, l)).collect::<Result<Vec<_>, _>>()?;
        if bcs.is_empty() {
            return Err(ConfigError::general("no boundary conditions given (bcs.<patch> = ...)"));
        }
        let (solver, alpha, formulation) = parse_solver(&mut doc)?;

        let transient = match doc.take("time.mode") {
            None => false,
            Some((m, line)) => match m.as_str() {
                "static" => false,
                "transient" => true,
                other => return Err(ConfigError::at(line, format!("unknown time mode '{other}' (static, transient)"))),
            },
        };
        let steps: usize = doc.parsed("time.steps")?.unwrap_or(1);
        if steps == 0 {
            return Err(ConfigError::general("time.steps must be at least 1"));
        }
        let dt = doc.f64("time.dt")?;
        if let Some(dt) = dt {
            if !(dt > 0.0) {
                return Err(ConfigError::general(format!("time.dt must be positive, got {dt}")));
            }
        }
        if transient && dt.is_none() {
            return Err(ConfigError::general("transient runs need time.dt"));
        }
        if transient && rho.is_none() {
            return Err(ConfigError::general("transient runs need material.rho"));
        }
        if let Some(r) = rho {
            if !(r > 0.0) {
                return Err(ConfigError::general(format!("material.rho must be positive, got {r}")));
            }
        }

        let directory = doc.take("output.directory").map_or_else(|| base_dir.join("output"), |(d, _)| base_dir.join(d));
        let interval = doc.parsed("output.interval")?.unwrap_or(0);
        doc.finish()?;
        Ok(Self {
            mesh,
            distortion,
            seed,
            law,
            rho,
            body_force,
            bcs,
            solver,
            alpha,
            formulation,
            transient,
            steps,
            dt,
            output: OutputConfig { directory, interval },
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::general(format!("cannot read '{}': {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn schedule(&self) -> Schedule {
        match self.dt {
            Some(dt) => Schedule { steps: self.steps, dt },
            None => Schedule::increments(self.steps),
        }
    }

    /// Generates or reads the mesh with patch kinds taken from the boundary
    /// conditions, then applies the distortion.
    pub fn build_mesh(&self) -> Result<Mesh, ConfigError> {
        let err = |e: &dyn fmt::Display| ConfigError::general(format!("mesh: {e}"));
        let mesh = match &self.mesh {
            MeshSpec::Cook { level } => generate_cook_quad(*level).map_err(|e| err(&e))?,
            MeshSpec::Box { extent, cells } => {
                generate_box_hex(*extent, *cells, BoxPatches::all(PatchKind::Traction)).map_err(|e| err(&e))?
            }
            MeshSpec::Quad { corners, cells } => {
                generate_quad(*corners, cells[0], cells[1], [PatchKind::Traction; 4]).map_err(|e| err(&e))?
            }
            MeshSpec::File(path) => super::read_fvmesh_file(path).map_err(|e| err(&e))?,
        };
        let names: Vec<&str> = mesh.patches().iter().map(|p| p.name.as_str()).collect();
        for bc in &self.bcs {
            if !names.contains(&bc.patch.as_str()) {
                return Err(ConfigError::at(
                    bc.line,
                    format!("mesh has no patch '{}' (patches: {})", bc.patch, names.join(", ")),
                ));
            }
        }
        if let Some(missing) = names.iter().find(|n| !self.bcs.iter().any(|b| b.patch == **n)) {
            return Err(ConfigError::general(format!("no boundary condition for patch '{missing}'")));
        }
        let kinds: Vec<(&str, PatchKind)> = self.bcs.iter().map(|b| (b.patch.as_str(), b.kind)).collect();
        let mesh = mesh.with_patch_kinds(&kinds).map_err(|e| err(&e))?;
        if self.distortion > 0.0 {
            distort_mesh(&mesh, self.distortion, self.seed).map_err(|e| err(&e))
        } else {
            Ok(mesh)
        }
    }

    pub fn build(&self) -> Result<Problem, ConfigError> {
        let mesh = self.build_mesh()?;
        let schedule = self.schedule();
        let duration = schedule.end_time();
        let conditions = self
            .bcs
            .iter()
            .map(|b| {
                let value = if b.ramp {
                    Prescribed::Ramp { value: b.value, duration }
                } else {
                    Prescribed::Constant(b.value)
                };
                match b.kind {
                    PatchKind::Displacement => BoundaryCondition::displacement(&b.patch, value),
                    PatchKind::Traction => BoundaryCondition::traction(&b.patch, value),
                    PatchKind::Symmetry => BoundaryCondition::symmetry(&b.patch),
                }
            })
            .collect();
        let bcs = BoundaryConditions::new(&mesh, conditions).map_err(|e| ConfigError::general(format!("bcs: {e}")))?;
        let dynamics = match (self.transient, self.dt, self.rho) {
            (true, Some(dt), Some(rho)) => Dynamics::Transient { dt, rho },
            _ => Dynamics::Static,
        };
        let disc = DiscretisationConfig {
            alpha: self.alpha,
            formulation: self.formulation,
            dynamics,
            body_force: self.body_force.map_or(BodyForce::None, BodyForce::Uniform),
        };
        Problem::new(mesh, bcs, self.law.clone(), disc, schedule).map_err(|e| ConfigError::general(e.to_string()))
    }
}
