use super::{Mesh, MeshError, Patch, PatchKind};
use crate::Vec3;

/// Patch kinds for the six sides of a box, in the order
/// `xmin, xmax, ymin, ymax, zmin, zmax` (also the patch names).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxPatches(pub [PatchKind; 6]);

impl BoxPatches {
    pub const NAMES: [&'static str; 6] = ["xmin", "xmax", "ymin", "ymax", "zmin", "zmax"];

    pub fn all(kind: PatchKind) -> Self {
        Self([kind; 6])
    }
}

/// Structured hexahedral mesh of `[0,ex]×[0,ey]×[0,ez]`.
///
/// Cells are numbered with `i` fastest, then `j`, then `k`. Internal faces
/// are ordered x-normal, y-normal, z-normal; patches follow in
/// [`BoxPatches::NAMES`] order.
pub fn generate_box_hex(
    extents: [f64; 3],
    divisions: [usize; 3],
    patches: BoxPatches,
) -> Result<Mesh, MeshError> {
    if extents.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(MeshError::InvalidArgument(format!("extents must be positive, got {extents:?}")));
    }
    if divisions.contains(&0) {
        return Err(MeshError::InvalidArgument(format!("divisions must be >= 1, got {divisions:?}")));
    }
    let [nx, ny, nz] = divisions;
    let pid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let cid = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);

    let mut points = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                points.push(Vec3::new(
                    extents[0] * i as f64 / nx as f64,
                    extents[1] * j as f64 / ny as f64,
                    extents[2] * k as f64 / nz as f64,
                ));
            }
        }
    }

    // Quads whose right-hand normal is +x, +y, +z respectively.
    let xq = |i: usize, j: usize, k: usize| {
        vec![pid(i, j, k), pid(i, j + 1, k), pid(i, j + 1, k + 1), pid(i, j, k + 1)]
    };
    let yq = |i: usize, j: usize, k: usize| {
        vec![pid(i, j, k), pid(i, j, k + 1), pid(i + 1, j, k + 1), pid(i + 1, j, k)]
    };
    let zq = |i: usize, j: usize, k: usize| {
        vec![pid(i, j, k), pid(i + 1, j, k), pid(i + 1, j + 1, k), pid(i, j + 1, k)]
    };
    let rev = |mut f: Vec<usize>| {
        f.reverse();
        f
    };

    let mut faces = Vec::new();
    let mut owner = Vec::new();
    let mut neighbour = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 1..nx {
                faces.push(xq(i, j, k));
                owner.push(cid(i - 1, j, k));
                neighbour.push(cid(i, j, k));
            }
        }
    }
    for k in 0..nz {
        for j in 1..ny {
            for i in 0..nx {
                faces.push(yq(i, j, k));
                owner.push(cid(i, j - 1, k));
                neighbour.push(cid(i, j, k));
            }
        }
    }
    for k in 1..nz {
        for j in 0..ny {
            for i in 0..nx {
                faces.push(zq(i, j, k));
                owner.push(cid(i, j, k - 1));
                neighbour.push(cid(i, j, k));
            }
        }
    }

    let mut patch_list = Vec::with_capacity(6);
    let mut push_patch = |name: &str, kind, faces: &mut Vec<Vec<usize>>, list: Vec<(Vec<usize>, usize)>| {
        let start = faces.len();
        let len = list.len();
        for (f, o) in list {
            faces.push(f);
            owner.push(o);
        }
        patch_list.push(Patch { name: name.to_string(), kind, start, len });
    };
    let kinds = patches.0;
    let mut side = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            side.push((rev(xq(0, j, k)), cid(0, j, k)));
        }
    }
    push_patch("xmin", kinds[0], &mut faces, std::mem::take(&mut side));
    for k in 0..nz {
        for j in 0..ny {
            side.push((xq(nx, j, k), cid(nx - 1, j, k)));
        }
    }
    push_patch("xmax", kinds[1], &mut faces, std::mem::take(&mut side));
    for k in 0..nz {
        for i in 0..nx {
            side.push((rev(yq(i, 0, k)), cid(i, 0, k)));
        }
    }
    push_patch("ymin", kinds[2], &mut faces, std::mem::take(&mut side));
    for k in 0..nz {
        for i in 0..nx {
            side.push((yq(i, ny, k), cid(i, ny - 1, k)));
        }
    }
    push_patch("ymax", kinds[3], &mut faces, std::mem::take(&mut side));
    for j in 0..ny {
        for i in 0..nx {
            side.push((rev(zq(i, j, 0)), cid(i, j, 0)));
        }
    }
    push_patch("zmin", kinds[4], &mut faces, std::mem::take(&mut side));
    for j in 0..ny {
        for i in 0..nx {
            side.push((zq(i, j, nz), cid(i, j, nz - 1)));
        }
    }
    push_patch("zmax", kinds[5], &mut faces, std::mem::take(&mut side));

    let mut shapes = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                shapes.push(vec![
                    pid(i, j, k),
                    pid(i + 1, j, k),
                    pid(i + 1, j + 1, k),
                    pid(i, j + 1, k),
                    pid(i, j, k + 1),
                    pid(i + 1, j, k + 1),
                    pid(i + 1, j + 1, k + 1),
                    pid(i, j + 1, k + 1),
                ]);
            }
        }
    }
    Mesh::new(3, points, faces, owner, neighbour, patch_list)?.with_cell_shapes(shapes)
}

/// 2-D quadrilateral mesh by bilinear transfinite interpolation of the
/// corners `[p00, p10, p11, p01]` (counter-clockwise).
///
/// Patches are `bottom` (η=0), `right` (ξ=1), `top` (η=1), `left` (ξ=0), with
/// `kinds` in that order.
pub fn generate_quad(
    corners: [Vec3; 4],
    nx: usize,
    ny: usize,
    kinds: [PatchKind; 4],
) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidArgument(format!("divisions must be >= 1, got ({nx}, {ny})")));
    }
    let [p00, p10, p11, p01] = corners;
    let pid = |i: usize, j: usize| i + (nx + 1) * j;
    let cid = |i: usize, j: usize| i + nx * j;
    let mut points = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let eta = j as f64 / ny as f64;
        for i in 0..=nx {
            let xi = i as f64 / nx as f64;
            let mut p = p00 * (1.0 - xi) * (1.0 - eta)
                + p10 * xi * (1.0 - eta)
                + p11 * xi * eta
                + p01 * (1.0 - xi) * eta;
            p.z = 0.0;
            points.push(p);
        }
    }

    // Edge p0→p1 has its owner on the left.
    let mut faces = Vec::new();
    let mut owner = Vec::new();
    let mut neighbour = Vec::new();
    for j in 0..ny {
        for i in 1..nx {
            faces.push(vec![pid(i, j), pid(i, j + 1)]);
            owner.push(cid(i - 1, j));
            neighbour.push(cid(i, j));
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            faces.push(vec![pid(i + 1, j), pid(i, j)]);
            owner.push(cid(i, j - 1));
            neighbour.push(cid(i, j));
        }
    }
    let mut patches = Vec::with_capacity(4);
    let mut add = |name: &str, kind, list: Vec<(Vec<usize>, usize)>, faces: &mut Vec<Vec<usize>>| {
        let start = faces.len();
        let len = list.len();
        for (f, o) in list {
            faces.push(f);
            owner.push(o);
        }
        patches.push(Patch { name: name.into(), kind, start, len });
    };
    add(
        "bottom",
        kinds[0],
        (0..nx).map(|i| (vec![pid(i, 0), pid(i + 1, 0)], cid(i, 0))).collect(),
        &mut faces,
    );
    add(
        "right",
        kinds[1],
        (0..ny).map(|j| (vec![pid(nx, j), pid(nx, j + 1)], cid(nx - 1, j))).collect(),
        &mut faces,
    );
    add(
        "top",
        kinds[2],
        (0..nx).map(|i| (vec![pid(i + 1, ny), pid(i, ny)], cid(i, ny - 1))).collect(),
        &mut faces,
    );
    add(
        "left",
        kinds[3],
        (0..ny).map(|j| (vec![pid(0, j + 1), pid(0, j)], cid(0, j))).collect(),
        &mut faces,
    );
    let shapes = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| vec![pid(i, j), pid(i + 1, j), pid(i + 1, j + 1), pid(i, j + 1)])
        .collect();
    Mesh::new(2, points, faces, owner, neighbour, patches)?.with_cell_shapes(shapes)
}

/// Cook's tapered membrane, corners (0,0), (48,44), (48,60), (0,44) mm, with
/// `3·2^(n−1)` cells per side. `left` is a displacement patch, the other
/// three are traction patches.
pub fn generate_cook_quad(n: u32) -> Result<Mesh, MeshError> {
    if !(1..=12).contains(&n) {
        return Err(MeshError::InvalidArgument(format!("refinement level must be in 1..=12, got {n}")));
    }
    let m = 3usize << (n - 1);
    let mm = 1e-3;
    generate_quad(
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(48.0 * mm, 44.0 * mm, 0.0),
            Vec3::new(48.0 * mm, 60.0 * mm, 0.0),
            Vec3::new(0.0, 44.0 * mm, 0.0),
        ],
        m,
        m,
        [PatchKind::Traction, PatchKind::Traction, PatchKind::Traction, PatchKind::Displacement],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cube_counts() {
        let m = generate_box_hex([1.0; 3], [1, 1, 1], BoxPatches::all(PatchKind::Traction)).unwrap();
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.n_internal_faces(), 0);
        assert_eq!(m.n_boundary_faces(), 6);
        assert_eq!(m.patches().len(), 6);
    }

    #[test]
    fn box_125_cells() {
        let m = generate_box_hex([0.2; 3], [5, 5, 5], BoxPatches::all(PatchKind::Displacement)).unwrap();
        assert_eq!(m.n_cells(), 125);
        assert_eq!(m.n_internal_faces(), 3 * 4 * 25);
        assert_eq!(m.n_boundary_faces(), 6 * 25);
    }

    #[test]
    fn invalid_box_arguments() {
        let p = BoxPatches::all(PatchKind::Traction);
        assert!(matches!(generate_box_hex([1.0, 0.0, 1.0], [1, 1, 1], p), Err(MeshError::InvalidArgument(_))));
        assert!(matches!(generate_box_hex([1.0; 3], [1, 0, 1], p), Err(MeshError::InvalidArgument(_))));
        assert!(matches!(generate_box_hex([-1.0, 1.0, 1.0], [1, 1, 1], p), Err(MeshError::InvalidArgument(_))));
    }

    #[test]
    fn cook_counts() {
        let m1 = generate_cook_quad(1).unwrap();
        assert_eq!(m1.n_cells(), 9);
        assert_eq!(m1.n_boundary_faces(), 12);
        assert_eq!(m1.dim(), 2);
        assert_eq!(generate_cook_quad(2).unwrap().n_cells(), 36);
        assert_eq!(generate_cook_quad(3).unwrap().n_cells(), 144);
        assert!(generate_cook_quad(0).is_err());
        let left = m1.patch_index("left").unwrap();
        assert_eq!(m1.patches()[left].kind, PatchKind::Displacement);
    }
}
