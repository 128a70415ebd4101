use super::Dynamics;
use crate::linalg::{BlockSparseMatrix, CsrMatrix};
use crate::mesh::{Mesh, MeshGeometry, PatchKind};
use crate::Tensor;

/// Compact-stencil approximate Jacobian with `α = 1`.
///
/// Internal and displacement faces contribute `∓K̄|Δ|/|d| |Γ| I`; a symmetry
/// face contributes the derivative of its mirrored compact term,
/// `−2K̄|Γ|/|d| n⊗n`; transient mode adds `−(9/4)ρΩ/Δt² I`.
pub fn assemble_approximate_jacobian(mesh: &Mesh, geom: &MeshGeometry, kbar: f64, dynamics: Dynamics) -> BlockSparseMatrix {
    let dim = mesh.dim();
    let ni = mesh.n_internal_faces();
    let couplings: Vec<(usize, usize)> = (0..ni).map(|f| (mesh.owner()[f], mesh.neighbour()[f])).collect();
    let mut j = BlockSparseMatrix::with_pattern(dim, mesh.n_cells(), &couplings);
    let id = Tensor::identity();
    for f in 0..mesh.n_faces() {
        let coef = kbar * geom.delta[f].norm() / geom.d_mag[f] * geom.area_mag[f];
        let p = mesh.owner()[f];
        if f < ni {
            let n = mesh.neighbour()[f];
            j.add_block(p, p, &(-coef * id));
            j.add_block(n, n, &(-coef * id));
            j.add_block(p, n, &(coef * id));
            j.add_block(n, p, &(coef * id));
            continue;
        }
        match mesh.face_kind(f) {
            Some(PatchKind::Displacement) => j.add_block(p, p, &(-coef * id)),
            Some(PatchKind::Symmetry) => {
                let nf = geom.normal[f];
                j.add_block(p, p, &(-2.0 * coef * nf * nf.transpose()));
            }
            _ => {}
        }
    }
    if let Dynamics::Transient { dt, rho } = dynamics {
        for c in 0..mesh.n_cells() {
            j.add_block(c, c, &(-2.25 * rho * geom.volume[c] / (dt * dt) * id));
        }
    }
    j
}

/// The per-component scalar matrices formed from the diagonal entries of
/// each block.
pub fn scalar_component_matrices(j: &BlockSparseMatrix) -> Vec<CsrMatrix> {
    j.components()
}
