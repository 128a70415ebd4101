use super::{compute_geometry, Mesh, MeshError};
use crate::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Randomly perturbs mesh points by less than `factor` times the shortest
/// edge incident to each point.
///
/// Points on a single boundary plane move tangentially; points on domain
/// edges and corners (two or more distinct boundary normals) stay fixed. The
/// perturbation stream depends only on `seed` and the point ordering.
pub fn distort_mesh(mesh: &Mesh, factor: f64, seed: u64) -> Result<Mesh, MeshError> {
    if !(0.0..0.5).contains(&factor) {
        return Err(MeshError::InvalidArgument(format!("factor must be in [0, 0.5), got {factor}")));
    }
    if factor == 0.0 {
        return Ok(mesh.clone());
    }
    let geom = compute_geometry(mesh)?;
    let np = mesh.points().len();
    let mut min_edge = vec![f64::INFINITY; np];
    let mut normals: Vec<Vec<Vec3>> = vec![Vec::new(); np];
    for (f, face) in mesh.faces().iter().enumerate() {
        let n = face.len();
        let edges = if mesh.dim() == 2 { 1 } else { n };
        for k in 0..edges {
            let (a, b) = (face[k], face[(k + 1) % n]);
            let len = (mesh.points()[a] - mesh.points()[b]).norm();
            min_edge[a] = min_edge[a].min(len);
            min_edge[b] = min_edge[b].min(len);
        }
        if !mesh.is_internal(f) {
            let nf = geom.normal[f];
            for &p in face {
                if !normals[p].iter().any(|m| m.dot(&nf) > 1.0 - 1e-8) {
                    normals[p].push(nf);
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = mesh.points().to_vec();
    for (p, point) in points.iter_mut().enumerate() {
        let mut v = loop {
            let z = if mesh.dim() == 3 { rng.random_range(-1.0..1.0) } else { 0.0 };
            let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), z);
            if v.norm_squared() < 1.0 {
                break v;
            }
        };
        match normals[p].as_slice() {
            [] => {}
            [n] => v -= v.dot(n) * n,
            _ => continue,
        }
        *point += factor * min_edge[p] * v;
    }
    let out = mesh.clone().with_points(points);
    match compute_geometry(&out) {
        Ok(_) => Ok(out),
        Err(MeshError::NonPositiveVolume { cell, .. }) => Err(MeshError::DistortionFailure { cell }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_box_hex, generate_cook_quad, BoxPatches, PatchKind};

    fn box10() -> Mesh {
        generate_box_hex([1.0; 3], [10, 10, 10], BoxPatches::all(PatchKind::Displacement)).unwrap()
    }

    #[test]
    fn zero_factor_is_identity() {
        let m = box10();
        assert_eq!(distort_mesh(&m, 0.0, 3).unwrap(), m);
    }

    #[test]
    fn displacement_bounded_by_factor() {
        let m = box10();
        let d = distort_mesh(&m, 0.3, 42).unwrap();
        let h = 0.1;
        let max = m
            .points()
            .iter()
            .zip(d.points())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(max / h < 0.3, "ratio {}", max / h);
        assert!(max / h > 0.1);
    }

    #[test]
    fn boundary_rules() {
        let m = box10();
        let d = distort_mesh(&m, 0.3, 42).unwrap();
        for (a, b) in m.points().iter().zip(d.points()) {
            let on = |x: f64| x == 0.0 || x == 1.0;
            let planes = [a.x, a.y, a.z].iter().filter(|&&x| on(x)).count();
            if planes >= 2 {
                assert_eq!(a, b);
            }
            for k in 0..3 {
                if on(a[k]) {
                    assert_eq!(a[k], b[k]);
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let m = box10();
        assert_eq!(distort_mesh(&m, 0.3, 42).unwrap(), distort_mesh(&m, 0.3, 42).unwrap());
        assert_ne!(distort_mesh(&m, 0.3, 42).unwrap(), distort_mesh(&m, 0.3, 43).unwrap());
    }

    #[test]
    fn two_d_distortion() {
        let m = generate_cook_quad(3).unwrap();
        let d = distort_mesh(&m, 0.3, 1).unwrap();
        assert!(d.points().iter().all(|p| p.z == 0.0));
        assert!(distort_mesh(&m, 0.5, 1).is_err());
    }
}
