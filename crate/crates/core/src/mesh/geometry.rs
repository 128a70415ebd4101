use super::{Mesh, MeshError, PatchKind};
use crate::{Tensor, Vec3};

/// Geometric quantities precomputed once per mesh.
///
/// Face vectors (`area`, `normal`, `d`, `delta`) are oriented from the owner.
/// For boundary faces `d` is `x_f − x_P`, except on symmetry faces where it
/// joins `x_P` to its mirror image. `w` is the weight of the owner value.
#[derive(Debug, Clone)]
pub struct MeshGeometry {
    pub dim: usize,
    pub volume: Vec<f64>,
    pub cell_centre: Vec<Vec3>,
    pub area: Vec<Vec3>,
    pub area_mag: Vec<f64>,
    pub normal: Vec<Vec3>,
    pub face_centre: Vec<Vec3>,
    pub d: Vec<Vec3>,
    pub d_mag: Vec<f64>,
    pub w: Vec<f64>,
    pub delta: Vec<Vec3>,
    /// Inverse of the least-squares G tensor, `None` where it is singular.
    /// In 2-D only the in-plane block is populated.
    pub g_inv: Vec<Option<Tensor>>,
    /// Least-squares vector of each face as seen from its owner.
    pub lsq_owner: Vec<Vec3>,
    /// Least-squares vector of each internal face as seen from its neighbour
    /// (the neighbour's difference vector is `−d`).
    pub lsq_neighbour: Vec<Vec3>,
    /// Whether a cell has any face that contributes to its G tensor.
    pub has_lsq_faces: Vec<bool>,
}

impl MeshGeometry {
    pub fn total_volume(&self) -> f64 {
        self.volume.iter().sum()
    }

    /// Reflection tensor of a symmetry face.
    pub fn reflection(&self, face: usize) -> Tensor {
        reflection_tensor(&self.normal[face])
    }
}

/// `I − 2 n⊗n`.
pub fn reflection_tensor(n: &Vec3) -> Tensor {
    Tensor::identity() - 2.0 * n * n.transpose()
}

fn face_area_centre(mesh: &Mesh, face: &[usize]) -> (Vec3, Vec3) {
    let p = mesh.points();
    if mesh.dim() == 2 {
        let (a, b) = (p[face[0]], p[face[1]]);
        let t = b - a;
        return (Vec3::new(t.y, -t.x, 0.0), 0.5 * (a + b));
    }
    if face.len() == 3 {
        let (a, b, c) = (p[face[0]], p[face[1]], p[face[2]]);
        return (0.5 * (b - a).cross(&(c - a)), (a + b + c) / 3.0);
    }
    let avg = face.iter().map(|&i| p[i]).sum::<Vec3>() / face.len() as f64;
    let mut area = Vec3::zeros();
    let mut tri = Vec::with_capacity(face.len());
    for k in 0..face.len() {
        let (a, b) = (p[face[k]], p[face[(k + 1) % face.len()]]);
        let ak = 0.5 * (a - avg).cross(&(b - avg));
        area += ak;
        tri.push((ak, (avg + a + b) / 3.0));
    }
    let mag = area.norm();
    if mag == 0.0 {
        return (area, avg);
    }
    let nhat = area / mag;
    let mut wsum = 0.0;
    let mut centre = Vec3::zeros();
    for (ak, ck) in tri {
        let wk = ak.dot(&nhat);
        wsum += wk;
        centre += wk * ck;
    }
    (area, centre / wsum)
}

/// Computes all cell and face geometry of a mesh.
pub fn compute_geometry(mesh: &Mesh) -> Result<MeshGeometry, MeshError> {
    let dim = mesh.dim();
    let nf = mesh.n_faces();
    let nc = mesh.n_cells();
    let mut area = Vec::with_capacity(nf);
    let mut face_centre = Vec::with_capacity(nf);
    for (f, face) in mesh.faces().iter().enumerate() {
        let (a, c) = face_area_centre(mesh, face);
        let scale = face
            .iter()
            .map(|&i| (mesh.points()[i] - c).norm_squared())
            .fold(0.0, f64::max);
        if !(a.norm() > 1e-14 * scale) || scale == 0.0 {
            return Err(MeshError::DegenerateFace { face: f });
        }
        area.push(a);
        face_centre.push(c);
    }
    let area_mag: Vec<f64> = area.iter().map(|a| a.norm()).collect();
    let normal: Vec<Vec3> = area.iter().zip(&area_mag).map(|(a, m)| a / *m).collect();

    let mut volume = vec![0.0; nc];
    let mut cell_centre = vec![Vec3::zeros(); nc];
    let mut cell_points: Vec<usize> = Vec::new();
    for c in 0..nc {
        cell_points.clear();
        for &f in mesh.cell_faces(c) {
            cell_points.extend_from_slice(&mesh.faces()[f]);
        }
        cell_points.sort_unstable();
        cell_points.dedup();
        let c0 = cell_points.iter().map(|&i| mesh.points()[i]).sum::<Vec3>() / cell_points.len() as f64;
        let (frac_v, frac_c) = if dim == 3 { (1.0 / 3.0, 0.75) } else { (0.5, 2.0 / 3.0) };
        let mut vol = 0.0;
        let mut moment = Vec3::zeros();
        for &f in mesh.cell_faces(c) {
            let sign = if mesh.owner()[f] == c { 1.0 } else { -1.0 };
            let r = face_centre[f] - c0;
            let v = frac_v * sign * area[f].dot(&r);
            vol += v;
            moment += v * (c0 + frac_c * r);
        }
        if !(vol > 0.0) {
            return Err(MeshError::NonPositiveVolume { cell: c, volume: vol });
        }
        volume[c] = vol;
        cell_centre[c] = moment / vol;
    }

    let mut d = Vec::with_capacity(nf);
    let mut w = Vec::with_capacity(nf);
    for f in 0..nf {
        let xp = cell_centre[mesh.owner()[f]];
        let n = normal[f];
        if mesh.is_internal(f) {
            let xn = cell_centre[mesh.neighbour()[f]];
            d.push(xn - xp);
            w.push(n.dot(&(xn - face_centre[f])) / n.dot(&(xn - xp)));
        } else if mesh.face_kind(f) == Some(PatchKind::Symmetry) {
            d.push(2.0 * (face_centre[f] - xp).dot(&n) * n);
            w.push(0.5);
        } else {
            d.push(face_centre[f] - xp);
            w.push(1.0);
        }
    }
    let d_mag: Vec<f64> = d.iter().map(|v| v.norm()).collect();
    let delta: Vec<Vec3> = d.iter().zip(&normal).map(|(d, n)| d / d.dot(n)).collect();

    // Weighted least squares: G = Σ λ d⊗d/(d·d), λ = (1 − w)|Γ| with w the
    // weight of the cell's own value.
    let mut g = vec![Tensor::zeros(); nc];
    let mut has_lsq_faces = vec![false; nc];
    let mut lambda_owner = vec![0.0; nf];
    let mut lambda_neigh = vec![0.0; nf];
    for f in 0..nf {
        let o = mesh.owner()[f];
        let dd = d[f] * d[f].transpose() / d_mag[f].powi(2);
        if mesh.is_internal(f) {
            let nb = mesh.neighbour()[f];
            lambda_owner[f] = (1.0 - w[f]) * area_mag[f];
            lambda_neigh[f] = w[f] * area_mag[f];
            g[o] += lambda_owner[f] * dd;
            g[nb] += lambda_neigh[f] * dd;
            has_lsq_faces[o] = true;
            has_lsq_faces[nb] = true;
        } else if mesh.face_kind(f) == Some(PatchKind::Symmetry) {
            lambda_owner[f] = 0.5 * area_mag[f];
            g[o] += lambda_owner[f] * dd;
            has_lsq_faces[o] = true;
        }
    }
    let g_inv: Vec<Option<Tensor>> = g.iter().map(|g| invert_g(g, dim)).collect();

    let mut lsq_owner = vec![Vec3::zeros(); nf];
    let mut lsq_neighbour = vec![Vec3::zeros(); nf];
    for f in 0..nf {
        let dd = d_mag[f].powi(2);
        if let Some(gi) = g_inv[mesh.owner()[f]] {
            lsq_owner[f] = lambda_owner[f] * gi * d[f] / dd;
        }
        if mesh.is_internal(f) {
            if let Some(gi) = g_inv[mesh.neighbour()[f]] {
                lsq_neighbour[f] = -lambda_neigh[f] * gi * d[f] / dd;
            }
        }
    }

    Ok(MeshGeometry {
        dim,
        volume,
        cell_centre,
        area,
        area_mag,
        normal,
        face_centre,
        d,
        d_mag,
        w,
        delta,
        g_inv,
        lsq_owner,
        lsq_neighbour,
        has_lsq_faces,
    })
}

fn invert_g(g: &Tensor, dim: usize) -> Option<Tensor> {
    let tr: f64 = (0..dim).map(|i| g[(i, i)]).sum();
    if !(tr > 0.0) {
        return None;
    }
    if dim == 2 {
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        if det.abs() <= 1e-12 * tr * tr {
            return None;
        }
        let mut inv = Tensor::zeros();
        inv[(0, 0)] = g[(1, 1)] / det;
        inv[(1, 1)] = g[(0, 0)] / det;
        inv[(0, 1)] = -g[(0, 1)] / det;
        inv[(1, 0)] = -g[(1, 0)] / det;
        Some(inv)
    } else {
        if g.determinant().abs() <= 1e-12 * tr * tr * tr {
            return None;
        }
        g.try_inverse()
    }
}
