//! Constitutive laws.
//!
//! Every law maps a displacement gradient `(∇u)_ij = ∂_i u_j` to a symmetric
//! stress tensor. Hooke's law returns the engineering stress of linear
//! elasticity; the others return the true (Cauchy) stress and require `J > 0`.

use crate::{Tensor, Vec3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("inverted element: J = {0:e}")]
    InvertedElement(f64),
    #[error("exponent overflow in law evaluation (Q = {0:e})")]
    Overflow(f64),
    #[error("return mapping did not converge in {0} iterations")]
    ReturnMapFailure(usize),
    #[error("plastic law evaluated without internal state")]
    MissingState,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Isotropic elastic constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticConstants {
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
}

impl ElasticConstants {
    pub fn from_young(e: f64, nu: f64) -> Self {
        Self {
            mu: e / (2.0 * (1.0 + nu)),
            lambda: e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
            kappa: e / (3.0 * (1.0 - 2.0 * nu)),
        }
    }
}

/// Deformation measures derived from `∇u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    pub grad_u: Tensor,
    pub f: Tensor,
    pub j: f64,
    pub green: Tensor,
    pub b_bar: Tensor,
}

impl KinematicState {
    pub fn new(grad_u: &Tensor) -> Self {
        let f = Tensor::identity() + grad_u.transpose();
        let j = f.determinant();
        let green = 0.5 * (grad_u + grad_u.transpose() + grad_u * grad_u.transpose());
        let b_bar = if j > 0.0 { j.powf(-2.0 / 3.0) * f * f.transpose() } else { Tensor::identity() };
        Self { grad_u: *grad_u, f, j, green, b_bar }
    }

    fn require_positive_j(&self) -> Result<(), LawError> {
        if self.j > 0.0 && self.j.is_finite() {
            Ok(())
        } else {
            Err(LawError::InvertedElement(self.j))
        }
    }
}

pub fn dev(t: &Tensor) -> Tensor {
    t - Tensor::identity() * (t.trace() / 3.0)
}

/// Yield stress as a function of the equivalent plastic strain.
#[derive(Debug, Clone, PartialEq)]
pub enum Hardening {
    Perfect(f64),
    /// `y0 + h ε + (y_inf − y0)(1 − exp(−δ ε))`.
    Exponential { y0: f64, h: f64, y_inf: f64, delta: f64 },
    /// Piecewise-linear `(ε, σ_y)` table, sorted by ε, constant past the last
    /// entry.
    Table(Vec<(f64, f64)>),
}

impl Hardening {
    pub fn yield_stress(&self, eps: f64) -> f64 {
        match self {
            Hardening::Perfect(y) => *y,
            Hardening::Exponential { y0, h, y_inf, delta } => {
                y0 + h * eps + (y_inf - y0) * (1.0 - (-delta * eps).exp())
            }
            Hardening::Table(t) => {
                let i = t.partition_point(|&(e, _)| e <= eps);
                if i == 0 {
                    t[0].1
                } else if i == t.len() {
                    t[t.len() - 1].1
                } else {
                    let ((e0, y0), (e1, y1)) = (t[i - 1], t[i]);
                    y0 + (y1 - y0) * (eps - e0) / (e1 - e0)
                }
            }
        }
    }

    pub fn slope(&self, eps: f64) -> f64 {
        match self {
            Hardening::Perfect(_) => 0.0,
            Hardening::Exponential { y0, h, y_inf, delta } => h + (y_inf - y0) * delta * (-delta * eps).exp(),
            Hardening::Table(t) => {
                let i = t.partition_point(|&(e, _)| e <= eps);
                if i == 0 || i == t.len() {
                    0.0
                } else {
                    (t[i].1 - t[i - 1].1) / (t[i].0 - t[i - 1].0)
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), LawError> {
        let ok = match self {
            Hardening::Perfect(y) => *y > 0.0,
            Hardening::Exponential { y0, h, y_inf, delta } => *y0 > 0.0 && *h >= 0.0 && *y_inf > 0.0 && *delta >= 0.0,
            Hardening::Table(t) => {
                !t.is_empty()
                    && t[0].0 == 0.0
                    && t.iter().all(|&(_, y)| y > 0.0)
                    && t.windows(2).all(|w| w[1].0 > w[0].0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(LawError::InvalidParameter(format!("invalid hardening curve {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuccioneParams {
    pub c: f64,
    pub c_f: f64,
    pub c_t: f64,
    pub c_fs: f64,
    pub kappa: f64,
    pub f0: Vec3,
}

/// Per-cell internal state of the J2 law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasticState {
    /// Isochoric elastic left Cauchy-Green tensor.
    pub be_bar: Tensor,
    pub eps_p: f64,
    /// Deformation gradient at the last commit.
    pub f_prev: Tensor,
}

impl Default for PlasticState {
    fn default() -> Self {
        Self { be_bar: Tensor::identity(), eps_p: 0.0, f_prev: Tensor::identity() }
    }
}

/// Committed and trial internal state for every cell. Residual evaluations
/// only read `committed`; `commit` promotes `trial`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlasticField {
    pub committed: Vec<PlasticState>,
    pub trial: Vec<PlasticState>,
}

impl PlasticField {
    pub fn new(n_cells: usize) -> Self {
        Self { committed: vec![PlasticState::default(); n_cells], trial: vec![PlasticState::default(); n_cells] }
    }

    pub fn commit(&mut self) {
        self.committed.clone_from(&self.trial);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MechanicalLaw {
    Hooke { mu: f64, lambda: f64 },
    StVenantKirchhoff { mu: f64, lambda: f64 },
    NeoHookean { mu: f64, kappa: f64 },
    Guccione(GuccioneParams),
    J2Plastic { mu: f64, kappa: f64, hardening: Hardening },
}

impl MechanicalLaw {
    pub fn hooke(e: f64, nu: f64) -> Self {
        let k = ElasticConstants::from_young(e, nu);
        MechanicalLaw::Hooke { mu: k.mu, lambda: k.lambda }
    }

    pub fn neo_hookean(e: f64, nu: f64) -> Self {
        let k = ElasticConstants::from_young(e, nu);
        MechanicalLaw::NeoHookean { mu: k.mu, kappa: k.kappa }
    }

    pub fn validate(&self) -> Result<(), LawError> {
        let bad = |s: &str| Err(LawError::InvalidParameter(s.to_string()));
        match self {
            MechanicalLaw::Hooke { mu, lambda } | MechanicalLaw::StVenantKirchhoff { mu, lambda } => {
                if !(*mu > 0.0) || !(*lambda > -2.0 * mu / 3.0) {
                    return bad("require mu > 0 and lambda > -2 mu / 3");
                }
            }
            MechanicalLaw::NeoHookean { mu, kappa } => {
                if !(*mu > 0.0 && *kappa > 0.0) {
                    return bad("require mu > 0 and kappa > 0");
                }
            }
            MechanicalLaw::Guccione(p) => {
                if !(p.c > 0.0 && p.kappa > 0.0) || (p.f0.norm() - 1.0).abs() > 1e-12 {
                    return bad("require C > 0, kappa > 0 and a unit fibre direction");
                }
            }
            MechanicalLaw::J2Plastic { mu, kappa, hardening } => {
                if !(*mu > 0.0 && *kappa > 0.0) {
                    return bad("require mu > 0 and kappa > 0");
                }
                hardening.validate()?;
            }
        }
        Ok(())
    }

    pub fn is_plastic(&self) -> bool {
        matches!(self, MechanicalLaw::J2Plastic { .. })
    }

    /// Stiffness-type parameter `2μ + λ` used by Rhie-Chow and the
    /// approximate Jacobian.
    pub fn stiffness(&self) -> f64 {
        match self {
            MechanicalLaw::Hooke { mu, lambda } | MechanicalLaw::StVenantKirchhoff { mu, lambda } => 2.0 * mu + lambda,
            MechanicalLaw::NeoHookean { mu, kappa } | MechanicalLaw::J2Plastic { mu, kappa, .. } => {
                2.0 * mu + kappa - 2.0 * mu / 3.0
            }
            MechanicalLaw::Guccione(p) => {
                let mu = 0.5 * p.c * p.c_f.max(p.c_t).max(p.c_fs);
                2.0 * mu + p.kappa - 2.0 * mu / 3.0
            }
        }
    }

    /// Stress for a displacement gradient. For the plastic law `state` must be
    /// the committed state and the trial state is returned alongside.
    pub fn stress(
        &self,
        grad_u: &Tensor,
        state: Option<&PlasticState>,
    ) -> Result<(Tensor, Option<PlasticState>), LawError> {
        match self {
            MechanicalLaw::Hooke { mu, lambda } => Ok((hooke_stress(grad_u, *mu, *lambda), None)),
            MechanicalLaw::StVenantKirchhoff { mu, lambda } => {
                Ok((stvk_stress(&KinematicState::new(grad_u), *mu, *lambda)?, None))
            }
            MechanicalLaw::NeoHookean { mu, kappa } => {
                Ok((neo_hookean_stress(&KinematicState::new(grad_u), *mu, *kappa)?, None))
            }
            MechanicalLaw::Guccione(p) => Ok((guccione_stress(&KinematicState::new(grad_u), p)?, None)),
            MechanicalLaw::J2Plastic { mu, kappa, hardening } => {
                let old = state.ok_or(LawError::MissingState)?;
                let (s, new) = j2_radial_return(&KinematicState::new(grad_u), old, *mu, *kappa, hardening)?;
                Ok((s, Some(new)))
            }
        }
    }
}

/// `μ∇u + μ∇uᵀ + λ tr(∇u) I`.
pub fn hooke_stress(grad_u: &Tensor, mu: f64, lambda: f64) -> Tensor {
    mu * (grad_u + grad_u.transpose()) + Tensor::identity() * (lambda * grad_u.trace())
}

fn push_forward(kin: &KinematicState, s: &Tensor) -> Tensor {
    let sigma = kin.f * s * kin.f.transpose() / kin.j;
    0.5 * (sigma + sigma.transpose())
}

pub fn stvk_stress(kin: &KinematicState, mu: f64, lambda: f64) -> Result<Tensor, LawError> {
    kin.require_positive_j()?;
    let s = 2.0 * mu * kin.green + Tensor::identity() * (lambda * kin.green.trace());
    Ok(push_forward(kin, &s))
}

fn volumetric(kappa: f64, j: f64) -> f64 {
    0.5 * kappa * (j * j - 1.0) / j
}

pub fn neo_hookean_stress(kin: &KinematicState, mu: f64, kappa: f64) -> Result<Tensor, LawError> {
    kin.require_positive_j()?;
    let s = (mu / kin.j) * dev(&kin.b_bar) + Tensor::identity() * volumetric(kappa, kin.j);
    Ok(0.5 * (s + s.transpose()))
}

/// Exponent `Q(E)` of the Guccione law.
pub fn guccione_q(e: &Tensor, p: &GuccioneParams) -> f64 {
    let ff = p.f0 * p.f0.transpose();
    let i1 = e.trace();
    let i2 = 0.5 * (i1 * i1 - (e * e).trace());
    let i4 = e.dot(&ff);
    let i5 = (e * e).dot(&ff);
    p.c_t * i1 * i1 - 2.0 * p.c_t * i2 + (p.c_f - 2.0 * p.c_fs + p.c_t) * i4 * i4 + 2.0 * (p.c_fs - p.c_t) * i5
}

/// `∂Q/∂E`.
pub fn guccione_dq(e: &Tensor, p: &GuccioneParams) -> Tensor {
    let ff = p.f0 * p.f0.transpose();
    let i4 = e.dot(&ff);
    2.0 * p.c_t * e
        + 2.0 * (p.c_f - 2.0 * p.c_fs + p.c_t) * i4 * ff
        + 2.0 * (p.c_fs - p.c_t) * (e * ff + ff * e)
}

pub fn guccione_stress(kin: &KinematicState, p: &GuccioneParams) -> Result<Tensor, LawError> {
    kin.require_positive_j()?;
    let q = guccione_q(&kin.green, p);
    if q > 700.0 || !q.is_finite() {
        return Err(LawError::Overflow(q));
    }
    let s = guccione_dq(&kin.green, p) * (0.5 * p.c * q.exp()) + Tensor::identity() * volumetric(p.kappa, kin.j);
    Ok(push_forward(kin, &s))
}

const RETURN_MAP_MAX_ITERS: usize = 50;
const RETURN_MAP_TOL: f64 = 1e-12;

/// Neo-Hookean J2 radial return with isochoric/volumetric split.
///
/// `state_old` is never modified; the returned state is the trial state for
/// the current deformation.
pub fn j2_radial_return(
    kin: &KinematicState,
    state_old: &PlasticState,
    mu: f64,
    kappa: f64,
    hardening: &Hardening,
) -> Result<(Tensor, PlasticState), LawError> {
    kin.require_positive_j()?;
    let f_rel = kin.f * state_old.f_prev.try_inverse().ok_or(LawError::InvertedElement(0.0))?;
    let j_rel = f_rel.determinant();
    if !(j_rel > 0.0) {
        return Err(LawError::InvertedElement(j_rel));
    }
    let f_bar = f_rel * j_rel.powf(-1.0 / 3.0);
    let be_trial = f_bar * state_old.be_bar * f_bar.transpose();
    let be_trial = 0.5 * (be_trial + be_trial.transpose());
    let s_trial = mu * dev(&be_trial);
    let s_norm = s_trial.norm();
    let k23 = (2.0f64 / 3.0).sqrt();
    let sy0 = hardening.yield_stress(state_old.eps_p);
    let f_trial = s_norm - k23 * sy0;

    let (s, be_new, eps_new) = if f_trial <= 0.0 {
        (s_trial, be_trial, state_old.eps_p)
    } else {
        let ie = be_trial.trace() / 3.0;
        let mu_bar = mu * ie;
        let g = |dg: f64| s_norm - 2.0 * mu_bar * dg - k23 * hardening.yield_stress(state_old.eps_p + k23 * dg);
        let dg_dgamma = |dg: f64| -2.0 * mu_bar - (2.0 / 3.0) * hardening.slope(state_old.eps_p + k23 * dg);
        let scale = sy0.max(f64::MIN_POSITIVE);
        let (mut lo, mut hi) = (0.0, s_norm / (2.0 * mu_bar));
        let mut dg = 0.0;
        let mut converged = false;
        for _ in 0..RETURN_MAP_MAX_ITERS {
            let r = g(dg);
            if r.abs() <= RETURN_MAP_TOL * scale {
                converged = true;
                break;
            }
            if r > 0.0 {
                lo = dg;
            } else {
                hi = dg;
            }
            let step = dg - r / dg_dgamma(dg);
            dg = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        }
        if !converged {
            return Err(LawError::ReturnMapFailure(RETURN_MAP_MAX_ITERS));
        }
        let n = s_trial / s_norm;
        let s = s_trial - 2.0 * mu_bar * dg * n;
        (s, s / mu + Tensor::identity() * ie, state_old.eps_p + k23 * dg)
    };
    let sigma = s / kin.j + Tensor::identity() * volumetric(kappa, kin.j);
    Ok((
        0.5 * (sigma + sigma.transpose()),
        PlasticState { be_bar: be_new, eps_p: eps_new, f_prev: kin.f },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    fn rel(a: &Tensor, b: &Tensor) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    fn cook_iii_curve() -> Hardening {
        Hardening::Exponential { y0: 0.45e6, h: 0.12924e6, y_inf: 0.715e6, delta: 16.93 }
    }

    #[test]
    fn elastic_constants() {
        let k = ElasticConstants::from_young(200e9, 0.3);
        assert_relative_eq!(k.mu, 76.923e9, max_relative = 1e-5);
        assert_relative_eq!(k.lambda, 115.385e9, max_relative = 1e-5);
        assert_relative_eq!(k.kappa, k.lambda + 2.0 * k.mu / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn kinematics_at_rest() {
        let k = KinematicState::new(&Tensor::zeros());
        assert_eq!(k.f, Tensor::identity());
        assert_eq!(k.j, 1.0);
        assert_eq!(k.green, Tensor::zeros());
        assert_relative_eq!(k.b_bar, Tensor::identity(), epsilon = 1e-15);
    }

    #[test]
    fn hooke_examples() {
        assert_eq!(hooke_stress(&Tensor::zeros(), 1.0, 2.0), Tensor::zeros());
        let (mu, lambda, e) = (3.0, 2.0, 1e-3);
        let mut g = Tensor::zeros();
        g[(0, 0)] = e;
        let s = hooke_stress(&g, mu, lambda);
        assert_relative_eq!(s[(0, 0)], (2.0 * mu + lambda) * e, epsilon = 1e-15);
        assert_relative_eq!(s[(1, 1)], lambda * e, epsilon = 1e-15);
        assert_relative_eq!(s[(2, 2)], lambda * e, epsilon = 1e-15);
    }

    #[test]
    fn stvk_examples() {
        let (mu, lambda) = (1.0, 1.5);
        assert_eq!(stvk_stress(&KinematicState::new(&Tensor::zeros()), mu, lambda).unwrap(), Tensor::zeros());
        let r = Rotation3::from_euler_angles(0.3, -0.2, 0.9).into_inner();
        let grad = (r - Tensor::identity()).transpose();
        let s = stvk_stress(&KinematicState::new(&grad), mu, lambda).unwrap();
        assert!(s.norm() < 1e-14);
        let g0 = Tensor::new(0.3, -0.1, 0.2, 0.5, 0.1, -0.4, 0.2, 0.3, -0.2);
        let g = g0 * 1e-5;
        let h = hooke_stress(&g, mu, lambda);
        assert!(rel(&stvk_stress(&KinematicState::new(&g), mu, lambda).unwrap(), &h) < 1e-4);
        let bad = -2.0 * Tensor::identity();
        assert!(matches!(stvk_stress(&KinematicState::new(&bad), mu, lambda), Err(LawError::InvertedElement(_))));
    }

    #[test]
    fn neo_hookean_simple_shear() {
        // F = I + γ e_x⊗e_y: J = 1, b = [[1+γ², γ, 0], [γ, 1, 0], [0, 0, 1]].
        let gamma = 0.5;
        let mut g = Tensor::zeros();
        g[(1, 0)] = gamma;
        let s = neo_hookean_stress(&KinematicState::new(&g), 1.0, 1.0).unwrap();
        let t = gamma * gamma / 3.0;
        let expected = Tensor::new(2.0 * t, gamma, 0.0, gamma, -t, 0.0, 0.0, 0.0, -t);
        assert!(rel(&s, &expected) < 1e-14);
        assert_eq!(neo_hookean_stress(&KinematicState::new(&Tensor::zeros()), 1.0, 1.0).unwrap(), Tensor::zeros());
    }

    #[test]
    fn small_strain_consistency_is_second_order() {
        let (mu, kappa) = (1.0, 3.0);
        let lambda = kappa - 2.0 * mu / 3.0;
        let g0 = Tensor::new(0.3, -0.1, 0.2, 0.5, 0.1, -0.4, 0.2, 0.3, -0.2);
        let mut errs_nh = Vec::new();
        let mut errs_sv = Vec::new();
        for &eps in &[1e-3, 1e-4, 1e-5] {
            let g = g0 * eps;
            let h = hooke_stress(&g, mu, lambda);
            errs_nh.push((neo_hookean_stress(&KinematicState::new(&g), mu, kappa).unwrap() - h).norm());
            errs_sv.push((stvk_stress(&KinematicState::new(&g), mu, lambda).unwrap() - h).norm());
        }
        for errs in [errs_nh, errs_sv] {
            for w in errs.windows(2) {
                let rate = (w[0] / w[1]).log10();
                assert!((rate - 2.0).abs() < 0.1, "rate {rate}");
            }
        }
    }

    fn guccione_params(f0: Vec3, c: [f64; 3]) -> GuccioneParams {
        GuccioneParams { c: 10e3, c_f: c[0], c_t: c[1], c_fs: c[2], kappa: 1e6, f0 }
    }

    #[test]
    fn guccione_examples() {
        let p = guccione_params(Vec3::x(), [1.0, 1.0, 1.0]);
        assert_eq!(guccione_stress(&KinematicState::new(&Tensor::zeros()), &p).unwrap(), Tensor::zeros());
        let g = Tensor::new(0.05, 0.02, -0.01, 0.0, -0.03, 0.04, 0.01, 0.0, 0.02);
        let s1 = guccione_stress(&KinematicState::new(&g), &p).unwrap();
        let p2 = guccione_params(Vec3::new(1.0, 2.0, -1.0).normalize(), [1.0, 1.0, 1.0]);
        let s2 = guccione_stress(&KinematicState::new(&g), &p2).unwrap();
        assert!(rel(&s2, &s1) < 1e-12);
        let big = Tensor::identity() * 20.0;
        assert!(matches!(guccione_stress(&KinematicState::new(&big), &p), Err(LawError::Overflow(_))));
    }

    #[test]
    fn guccione_dq_matches_finite_difference() {
        let p = guccione_params(Vec3::x(), [18.48, 3.58, 1.627]);
        let e = Tensor::new(0.02, 0.01, -0.005, 0.01, -0.01, 0.003, -0.005, 0.003, 0.015);
        let dq = guccione_dq(&e, &p);
        let h = 1e-6;
        let mut fd = Tensor::zeros();
        for i in 0..3 {
            for j in 0..3 {
                // Symmetric perturbation so that E stays symmetric.
                let mut de = Tensor::zeros();
                de[(i, j)] += 0.5 * h;
                de[(j, i)] += 0.5 * h;
                fd[(i, j)] = (guccione_q(&(e + de), &p) - guccione_q(&(e - de), &p)) / (2.0 * h);
            }
        }
        assert!(rel(&fd, &dq) < 1e-6, "{}", rel(&fd, &dq));
    }

    #[test]
    fn hardening_curves() {
        assert_relative_eq!(cook_iii_curve().yield_stress(0.0), 0.45e6, max_relative = 1e-15);
        let c = cook_iii_curve();
        let h = 1e-7;
        assert_relative_eq!(c.slope(0.1), (c.yield_stress(0.1 + h) - c.yield_stress(0.1 - h)) / (2.0 * h), max_relative = 1e-6);
        let t = Hardening::Table(vec![(0.0, 1.0), (1.0, 3.0)]);
        assert_eq!(t.yield_stress(0.5), 2.0);
        assert_eq!(t.yield_stress(2.0), 3.0);
        assert_eq!(t.slope(0.5), 2.0);
        assert!(Hardening::Table(vec![(0.5, 1.0)]).validate().is_err());
    }

    fn uniaxial_isochoric(stretch: f64) -> Tensor {
        let f = Tensor::from_diagonal(&Vec3::new(stretch, stretch.powf(-0.5), stretch.powf(-0.5)));
        (f - Tensor::identity()).transpose()
    }

    #[test]
    fn elastic_trial_matches_neo_hookean() {
        let (mu, kappa) = (1e6, 3e6);
        let g = uniaxial_isochoric(1.01);
        let (s, st) =
            j2_radial_return(&KinematicState::new(&g), &PlasticState::default(), mu, kappa, &Hardening::Perfect(1e6))
                .unwrap();
        let nh = neo_hookean_stress(&KinematicState::new(&g), mu, kappa).unwrap();
        assert!(rel(&s, &nh) < 1e-12);
        assert_eq!(st.eps_p, 0.0);
    }

    #[test]
    fn perfect_plasticity_von_mises_equals_yield() {
        let (mu, kappa, sy) = (1e6, 3e6, 0.2e6);
        let g = uniaxial_isochoric(1.3);
        let (s, st) =
            j2_radial_return(&KinematicState::new(&g), &PlasticState::default(), mu, kappa, &Hardening::Perfect(sy))
                .unwrap();
        assert!(st.eps_p > 0.0);
        let vm = (1.5f64).sqrt() * dev(&s).norm();
        assert_relative_eq!(vm, sy, max_relative = 1e-10);
    }

    /// Scalar return on a uniaxial isochoric path, solved by bisection.
    fn scalar_oracle(stretch: f64, mu: f64, h: &Hardening) -> (f64, f64) {
        let b = [stretch * stretch, 1.0 / stretch, 1.0 / stretch];
        let ie = (b[0] + b[1] + b[2]) / 3.0;
        // dev(b) = diag(2a, −a, −a) with a = (b0 − b1)/3, norm a·√6.
        let a = (b[0] - b[1]) / 3.0;
        let s_norm = mu * a * 6f64.sqrt();
        let k = (2.0f64 / 3.0).sqrt();
        let g = |dg: f64| s_norm - 2.0 * mu * ie * dg - k * h.yield_stress(k * dg);
        if g(0.0) <= 0.0 {
            return (1.5f64.sqrt() * s_norm, 0.0);
        }
        let (mut lo, mut hi) = (0.0, s_norm / (2.0 * mu * ie));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let dg = 0.5 * (lo + hi);
        (1.5f64.sqrt() * (s_norm - 2.0 * mu * ie * dg), k * dg)
    }

    #[test]
    fn radial_return_matches_scalar_oracle() {
        let e = ElasticConstants::from_young(206.9e6, 0.29);
        let curve = cook_iii_curve();
        for &stretch in &[1.001, 1.005, 1.02, 1.1, 1.4] {
            let g = uniaxial_isochoric(stretch);
            let (s, st) =
                j2_radial_return(&KinematicState::new(&g), &PlasticState::default(), e.mu, e.kappa, &curve).unwrap();
            let (vm_ref, eps_ref) = scalar_oracle(stretch, e.mu, &curve);
            let vm = 1.5f64.sqrt() * dev(&s).norm();
            assert!((vm - vm_ref).abs() <= 1e-8 * vm_ref, "stretch {stretch}: {vm} vs {vm_ref}");
            assert!((st.eps_p - eps_ref).abs() <= 1e-8 * eps_ref.max(1e-12));
            if st.eps_p > 0.0 {
                assert_relative_eq!(vm, curve.yield_stress(st.eps_p), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn commit_lifecycle() {
        let law = MechanicalLaw::J2Plastic { mu: 1e6, kappa: 3e6, hardening: Hardening::Perfect(0.1e6) };
        let mut field = PlasticField::new(1);
        let before = field.clone();
        let g = uniaxial_isochoric(1.2);
        let (_, trial) = law.stress(&g, Some(&field.committed[0])).unwrap();
        assert_eq!(field, before);
        field.trial[0] = trial.unwrap();
        field.commit();
        assert_eq!(field.committed[0], trial.unwrap());
        let once = field.clone();
        field.commit();
        assert_eq!(field, once);
        assert!(field.committed[0].eps_p > 0.0);
        // Holding the deformation after commit gives no further plastic flow.
        let (_, again) = law.stress(&g, Some(&field.committed[0])).unwrap();
        assert_relative_eq!(again.unwrap().eps_p, field.committed[0].eps_p, max_relative = 1e-12);
    }

    #[test]
    fn plastic_law_requires_state() {
        let law = MechanicalLaw::J2Plastic { mu: 1.0, kappa: 1.0, hardening: Hardening::Perfect(1.0) };
        assert_eq!(law.stress(&Tensor::zeros(), None).unwrap_err(), LawError::MissingState);
    }

    fn arb_grad() -> impl Strategy<Value = Tensor> {
        proptest::collection::vec(-0.3f64..0.3, 9).prop_map(|v| Tensor::from_row_slice(&v))
    }

    proptest! {
        #[test]
        fn neo_hookean_is_objective(g in arb_grad(), a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
            let kin = KinematicState::new(&g);
            prop_assume!(kin.j > 0.2);
            let r = Rotation3::from_euler_angles(a, b, c).into_inner();
            let s = neo_hookean_stress(&kin, 1.0, 5.0).unwrap();
            let rf = r * kin.f;
            let g_rot = (rf - Tensor::identity()).transpose();
            let s_rot = neo_hookean_stress(&KinematicState::new(&g_rot), 1.0, 5.0).unwrap();
            let expected = r * s * r.transpose();
            prop_assert!((s_rot - expected).norm() <= 1e-10 * expected.norm().max(1.0));
        }

        #[test]
        fn stresses_are_symmetric(g in arb_grad()) {
            let kin = KinematicState::new(&g);
            prop_assume!(kin.j > 0.2);
            let p = guccione_params(Vec3::new(1.0, 1.0, 0.0).normalize(), [18.48, 3.58, 1.627]);
            let laws = [
                MechanicalLaw::Hooke { mu: 1.0, lambda: 2.0 },
                MechanicalLaw::StVenantKirchhoff { mu: 1.0, lambda: 2.0 },
                MechanicalLaw::NeoHookean { mu: 1.0, kappa: 2.0 },
                MechanicalLaw::Guccione(p),
                MechanicalLaw::J2Plastic { mu: 1.0, kappa: 2.0, hardening: Hardening::Perfect(0.05) },
            ];
            for law in &laws {
                let (s, _) = law.stress(&g, Some(&PlasticState::default())).unwrap();
                prop_assert!((s - s.transpose()).norm() <= 1e-12 * s.norm().max(1e-300));
            }
        }
    }
}
