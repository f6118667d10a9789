//! Skew-symmetric convection on velocity control volumes.
//!
//! `N(w, φ)_x = Σ_σ F_σ(w) (φ_x + φ_nb(σ)) / 2` where `F_σ` is the outward
//! mass flux through face `σ` of the control volume around `x`, interpolated
//! from the advecting field `w`. Walls carry zero normal velocity, so faces
//! on tangential walls have zero flux. The flux through a shared face is
//! the same expression seen from both sides, which makes `N₁(u) = N(u, ·)`
//! skew-symmetric whenever `u` is discretely divergence free.

use super::operators::{face_velocity, shifted, velocity_kind};
use crate::grid::StaggeredGrid;
use crate::linalg::{CooMatrix, CsrMatrix};

/// One control-volume face: flux coefficients and the neighbour across it.
struct Face {
    /// `F_σ(w) = Σ coef * w[id]`
    flux: [(Option<usize>, f64); 2],
    neighbour: Option<usize>,
}

/// Faces of the control volume of the non-dummy velocity `a` in cell `c`.
fn faces(g: &StaggeredGrid, c: [usize; 3], a: usize) -> impl Iterator<Item = Face> + '_ {
    let half = 0.5 * g.h().powi(g.dim() as i32 - 1);
    let ci = shifted(c, a, 0);
    (0..g.dim()).flat_map(move |b| {
        [1isize, -1].into_iter().map(move |delta| {
            let s = half * delta as f64;
            if b == a {
                let nb = shifted(c, a, delta);
                // the face sits at the centre of cell c (west) or c + e_a (east)
                Face {
                    flux: [(face_velocity(g, ci, a), s), (face_velocity(g, nb, a), s)],
                    neighbour: face_velocity(g, nb, a),
                }
            } else {
                let low = if delta == 1 { ci } else { shifted(c, b, -1) };
                let mut low_e = low;
                low_e[a] += 1;
                Face {
                    flux: [
                        (face_velocity(g, low, b), s),
                        (face_velocity(g, low_e, b), s),
                    ],
                    neighbour: face_velocity(g, shifted(c, b, delta), a),
                }
            }
        })
    })
}

fn for_each_velocity(g: &StaggeredGrid, mut f: impl FnMut([usize; 3], usize, usize)) {
    for cell in 0..g.num_cells() {
        let c = g.cell_coords(cell);
        for a in 0..g.dim() {
            if c[a] + 1 < g.extent(a) {
                f(c, a, g.index(c, velocity_kind(a)));
            }
        }
    }
}

fn flux(face: &Face, w: &[f64]) -> f64 {
    face.flux
        .iter()
        .map(|&(id, s)| id.map_or(0.0, |i| s * w[i]))
        .sum()
}

/// `N(w, φ)` evaluated on physical (unscaled) states; zero on pressure and
/// dummy rows.
pub fn convection(g: &StaggeredGrid, w: &[f64], phi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.num_unknowns()];
    for_each_velocity(g, |c, a, x| {
        let mut acc = 0.0;
        for face in faces(g, c, a) {
            let nb = face.neighbour.map_or(0.0, |y| phi[y]);
            acc += flux(&face, w) * 0.5 * (phi[x] + nb);
        }
        out[x] = acc;
    });
    out
}

/// `N₁(u) = ∂N(u, φ)/∂φ` and `N₂(u) = ∂N(w, u)/∂w` at the physical state
/// `u`. Every structurally possible entry is stored, even when zero, so the
/// pattern depends only on the grid.
pub fn convection_jacobians(g: &StaggeredGrid, u: &[f64]) -> (CsrMatrix<f64>, CsrMatrix<f64>) {
    let n = g.num_unknowns();
    let cap = n * 2 * g.dim();
    let mut n1 = CooMatrix::with_capacity(n, n, cap);
    let mut n2 = CooMatrix::with_capacity(n, n, 2 * cap);
    for_each_velocity(g, |c, a, x| {
        for face in faces(g, c, a) {
            if face.flux.iter().all(|e| e.0.is_none()) {
                continue;
            }
            let f = flux(&face, u);
            n1.push(x, x, 0.5 * f);
            let nb = face.neighbour.map_or(0.0, |y| u[y]);
            if let Some(y) = face.neighbour {
                n1.push(x, y, 0.5 * f);
            }
            let mean = 0.5 * (u[x] + nb);
            for &(id, s) in &face.flux {
                if let Some(y) = id {
                    n2.push(x, y, s * mean);
                }
            }
        }
    });
    (n1.to_csr(), n2.to_csr())
}
