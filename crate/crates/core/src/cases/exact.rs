use super::CaseError;
use crate::{Tensor, Vec3};
use std::f64::consts::PI;

/// Amplitudes of the manufactured field, in metres.
pub const MMS_AMPLITUDE: [f64; 3] = [2e-6, 4e-6, 6e-6];

/// `a sin(4πx) sin(2πy) sin(πz)` with `a = (2, 4, 6) μm`.
pub fn mms_exact_displacement(x: &Vec3) -> Vec3 {
    let s = (4.0 * PI * x.x).sin() * (2.0 * PI * x.y).sin() * (PI * x.z).sin();
    Vec3::from(MMS_AMPLITUDE) * s
}

/// `∇u` of the manufactured field, `(∇u)_ij = ∂_i u_j`.
pub fn mms_exact_gradient(x: &Vec3) -> Tensor {
    let (sx, cx) = (4.0 * PI * x.x).sin_cos();
    let (sy, cy) = (2.0 * PI * x.y).sin_cos();
    let (sz, cz) = (PI * x.z).sin_cos();
    let ds = Vec3::new(4.0 * PI * cx * sy * sz, 2.0 * PI * sx * cy * sz, PI * sx * sy * cz);
    ds * Vec3::from(MMS_AMPLITUDE).transpose()
}

/// Small-strain Hooke stress of the manufactured field.
pub fn mms_exact_stress(x: &Vec3, mu: f64, lambda: f64) -> Tensor {
    crate::laws::hooke_stress(&mms_exact_gradient(x), mu, lambda)
}

/// Body force per unit volume that makes the manufactured field an
/// equilibrium state, `f_b = −∇·σ`.
pub fn mms_body_force(x: &Vec3, mu: f64, lambda: f64) -> Vec3 {
    let [ax, ay, az] = MMS_AMPLITUDE;
    let (sx, cx) = (4.0 * PI * x.x).sin_cos();
    let (sy, cy) = (2.0 * PI * x.y).sin_cos();
    let (sz, cz) = (PI * x.z).sin_cos();
    let p2 = PI * PI;
    let sss = sx * sy * sz;
    // Mixed second derivatives of sin(4πx) sin(2πy) sin(πz) over π².
    let ccs = cx * cy * sz;
    let csc = cx * sy * cz;
    let scc = sx * cy * cz;
    let div_x = lambda * (8.0 * ay * p2 * ccs + 4.0 * az * p2 * csc - 16.0 * ax * p2 * sss)
        + mu * (8.0 * ay * p2 * ccs + 4.0 * az * p2 * csc - 5.0 * ax * p2 * sss)
        - 32.0 * ax * mu * p2 * sss;
    let div_y = lambda * (8.0 * ax * p2 * ccs + 2.0 * az * p2 * scc - 4.0 * ay * p2 * sss)
        + mu * (8.0 * ax * p2 * ccs + 2.0 * az * p2 * scc - 17.0 * ay * p2 * sss)
        - 8.0 * ay * mu * p2 * sss;
    let div_z = lambda * (4.0 * ax * p2 * csc + 2.0 * ay * p2 * scc - az * p2 * sss)
        + mu * (4.0 * ax * p2 * csc + 2.0 * ay * p2 * scc - 20.0 * az * p2 * sss)
        - 2.0 * az * mu * p2 * sss;
    -Vec3::new(div_x, div_y, div_z)
}

/// Spherical cavity of radius `a` in an infinite isotropic solid under
/// remote uniaxial stress `T` along z; the cavity is centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    pub a: f64,
    pub t: f64,
    pub nu: f64,
    pub e: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        Self { a: 0.2, t: 1e6, nu: 0.3, e: 200e9 }
    }
}

/// Cartesian stress and displacement of the cavity solution at `x`.
pub fn cavity_exact(x: &Vec3, p: &CavityParams) -> Result<(Tensor, Vec3), CaseError> {
    let big_r2 = x.norm_squared();
    let big_r = big_r2.sqrt();
    if !(big_r >= p.a * (1.0 - 1e-12)) {
        return Err(CaseError::Domain(format!("point at radius {big_r} lies inside the cavity of radius {}", p.a)));
    }
    let (a, t, nu) = (p.a, p.t, p.nu);
    let r2 = x.x * x.x + x.y * x.y;
    let r = r2.sqrt();
    let k = 1.0 / (14.0 - 10.0 * nu);
    let q = (a / big_r).powi(3);
    let s = a * a / big_r2;
    let w = r2 / big_r2;
    let srr = t * k * q * (9.0 - 15.0 * nu - 12.0 * s - w * (72.0 - 15.0 * nu - 105.0 * s) + 15.0 * w * w * (5.0 - 7.0 * s));
    let stt = t * k * q * (9.0 - 15.0 * nu - 12.0 * s - 15.0 * w * (1.0 - 2.0 * nu - s));
    let szz = t
        * (1.0
            - k * q
                * (38.0 - 10.0 * nu - 24.0 * s - w * (117.0 - 15.0 * nu - 120.0 * s)
                    + 15.0 * w * w * (5.0 - 7.0 * s)));
    let szr = t * k * a.powi(3) * x.z * r / big_r.powi(5)
        * (-3.0 * (19.0 - 5.0 * nu) + 60.0 * s + 15.0 * w * (5.0 - 7.0 * s));
    let th = x.y.atan2(x.x);
    let (sn, c) = th.sin_cos();
    let sxy = (srr - stt) * sn * c;
    let sigma = Tensor::new(
        srr * c * c + stt * sn * sn,
        sxy,
        szr * c,
        sxy,
        srr * sn * sn + stt * c * c,
        szr * sn,
        szr * c,
        szr * sn,
        szz,
    );

    let mu = p.e / (2.0 * (1.0 + nu));
    let base = t / (8.0 * mu) / (7.0 - 5.0 * nu);
    let ca = -base * (13.0 - 10.0 * nu) * a.powi(3);
    let cb = base * a.powi(5);
    let cc = base * 5.0 * (1.0 - 2.0 * nu) * a.powi(3);
    // Spherical polar angle from the z axis and azimuth.
    let polar = (x.z / big_r).clamp(-1.0, 1.0).acos();
    let (sp, cp) = polar.sin_cos();
    let (sa, ca_) = x.y.atan2(x.x).sin_cos();
    let r4 = big_r2 * big_r2;
    let u_r = -ca / big_r2 - 3.0 * cb / r4
        + ((5.0 - 4.0 * nu) / (1.0 - 2.0 * nu) * cc / big_r2 - 9.0 * cb / r4) * (2.0 * polar).cos();
    let u_t = -(2.0 * cc / big_r2 + 6.0 * cb / r4) * (2.0 * polar).sin();
    let cav = Vec3::new(
        u_r * sp * ca_ + u_t * cp * ca_,
        u_r * sp * sa + u_t * cp * sa,
        u_r * cp - u_t * sp,
    );
    let e = t / p.e;
    let far = Vec3::new(-nu * e * x.x, -nu * e * x.y, e * x.z);
    Ok((sigma, cav + far))
}
