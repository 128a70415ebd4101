use super::DiscretisationError;
use crate::fields::TimeHistory;
use crate::mesh::{Mesh, MeshGeometry, PatchKind};
use crate::{Tensor, Vec3};

/// Least-squares cell gradients `(∇u)_ij = ∂_i u_j`.
///
/// Only internal faces and symmetry faces contribute; a symmetry face uses
/// the mirrored value `R·u_P`. Cells without contributing faces get a zero
/// gradient.
pub fn cell_gradients(mesh: &Mesh, geom: &MeshGeometry, u: &[Vec3]) -> Result<Vec<Tensor>, DiscretisationError> {
    let grads = super::par_map(mesh.n_cells(), |c| cell_gradient(mesh, geom, u, c));
    grads.into_iter().collect()
}

pub(crate) fn cell_gradient(
    mesh: &Mesh,
    geom: &MeshGeometry,
    u: &[Vec3],
    c: usize,
) -> Result<Tensor, DiscretisationError> {
    if !geom.has_lsq_faces[c] {
        return Ok(Tensor::zeros());
    }
    if geom.g_inv[c].is_none() {
        return Err(DiscretisationError::GradientFailure { cell: c });
    }
    let up = u[c];
    let mut g = Tensor::zeros();
    for &f in mesh.cell_faces(c) {
        if mesh.is_internal(f) {
            if mesh.owner()[f] == c {
                g += geom.lsq_owner[f] * (u[mesh.neighbour()[f]] - up).transpose();
            } else {
                g += geom.lsq_neighbour[f] * (u[mesh.owner()[f]] - up).transpose();
            }
        } else if mesh.face_kind(f) == Some(PatchKind::Symmetry) {
            let n = geom.normal[f];
            let mirrored = up - 2.0 * n * n.dot(&up);
            g += geom.lsq_owner[f] * (mirrored - up).transpose();
        }
    }
    Ok(g)
}

/// `αK̄ [ |Δ| (u_N − u_P)/|d| − Δ·(∇u)_f ] |Γ|`.
///
/// Boundary variants pass `ū` (displacement faces) or `R·u_P` (symmetry
/// faces) as `u_n`, with the matching face gradient.
pub fn rhie_chow_face(
    alpha_kbar: f64,
    delta: &Vec3,
    d_mag: f64,
    area_mag: f64,
    u_p: &Vec3,
    u_n: &Vec3,
    grad_f: &Tensor,
) -> Vec3 {
    alpha_kbar * area_mag * ((u_n - u_p) * (delta.norm() / d_mag) - grad_f.transpose() * delta)
}

/// Jump form `αK̄ (u*_N − u*_P) |Γ| / (d·n)` with
/// `u*_P = u_P + (d/2)·∇u_P` and `u*_N = u_N − (d/2)·∇u_N`.
///
/// Equal to [`rhie_chow_face`] when the face gradient is the plain average.
#[allow(clippy::too_many_arguments)]
pub fn rhie_chow_jump_face(
    alpha_kbar: f64,
    d: &Vec3,
    n: &Vec3,
    area_mag: f64,
    u_p: &Vec3,
    u_n: &Vec3,
    grad_p: &Tensor,
    grad_n: &Tensor,
) -> Vec3 {
    let half = 0.5 * d;
    let star_p = u_p + grad_p.transpose() * half;
    let star_n = u_n - grad_n.transpose() * half;
    (alpha_kbar * area_mag / d.dot(n)) * (star_n - star_p)
}

fn check_dt(dt: f64) -> Result<(), DiscretisationError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(DiscretisationError::InvalidConfig(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn bdf2_velocity_at(u_new: &Vec3, u_t: &Vec3, u_tm1: &Vec3, dt: f64) -> Vec3 {
    (3.0 * u_new - 4.0 * u_t + u_tm1) / (2.0 * dt)
}

#[inline]
pub(crate) fn bdf2_acceleration_at(
    u_new: &Vec3,
    u_t: &Vec3,
    u_tm1: &Vec3,
    v_t: &Vec3,
    v_tm1: &Vec3,
    dt: f64,
) -> Vec3 {
    (3.0 * bdf2_velocity_at(u_new, u_t, u_tm1, dt) - 4.0 * v_t + v_tm1) / (2.0 * dt)
}

/// `v = (3u − 4u^t + u^{t−1}) / 2Δt` per cell.
pub fn bdf2_velocity(u_new: &[Vec3], history: &TimeHistory, dt: f64) -> Result<Vec<Vec3>, DiscretisationError> {
    check_dt(dt)?;
    check_len(u_new.len(), history.len())?;
    Ok((0..u_new.len())
        .map(|i| bdf2_velocity_at(&u_new[i], &history.u_t[i], &history.u_tm1[i], dt))
        .collect())
}

/// `a = (3v − 4v^t + v^{t−1}) / 2Δt` with `v` from [`bdf2_velocity`].
pub fn bdf2_acceleration(u_new: &[Vec3], history: &TimeHistory, dt: f64) -> Result<Vec<Vec3>, DiscretisationError> {
    check_dt(dt)?;
    check_len(u_new.len(), history.len())?;
    Ok((0..u_new.len())
        .map(|i| {
            bdf2_acceleration_at(
                &u_new[i],
                &history.u_t[i],
                &history.u_tm1[i],
                &history.v_t[i],
                &history.v_tm1[i],
                dt,
            )
        })
        .collect())
}

fn check_len(got: usize, expected: usize) -> Result<(), DiscretisationError> {
    if got != expected {
        return Err(DiscretisationError::Length { got, expected });
    }
    Ok(())
}
