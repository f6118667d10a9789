use crate::grid::{StaggeredGrid, VarKind};
use crate::linalg::{CooMatrix, CsrMatrix};

/// Axis normal to the moving lid.
pub(crate) fn lid_axis(g: &StaggeredGrid) -> usize {
    g.dim() - 1
}

pub(crate) fn shifted(c: [usize; 3], axis: usize, delta: isize) -> [isize; 3] {
    let mut o = [c[0] as isize, c[1] as isize, c[2] as isize];
    o[axis] += delta;
    o
}

pub(crate) fn to_cell(c: [isize; 3]) -> [usize; 3] {
    [c[0] as usize, c[1] as usize, c[2] as usize]
}

/// Id of velocity component `axis` on the face owned by cell `c`, or `None`
/// when that face is a wall (outside the grid or a dummy unknown).
pub(crate) fn face_velocity(g: &StaggeredGrid, c: [isize; 3], axis: usize) -> Option<usize> {
    if !g.contains(c) || c[axis] as usize == g.extent(axis) - 1 {
        return None;
    }
    Some(g.index(to_cell(c), velocity_kind(axis)))
}

pub(crate) fn velocity_kind(axis: usize) -> VarKind {
    [VarKind::U, VarKind::V, VarKind::W][axis]
}

/// Vector Laplacian integrated over velocity control volumes, with no-slip
/// walls. Returns `L` and the boundary vector `b` of a unit lid so that the
/// discrete `Δu` is `L u + U b`.
///
/// Wall-normal neighbours take the wall value at distance `h`; tangential
/// walls use a mirrored ghost value. Dummy rows hold `−2d h^(d−2)` on the
/// diagonal and nothing else.
pub fn laplacian(g: &StaggeredGrid) -> (CsrMatrix<f64>, Vec<f64>) {
    let d = g.dim();
    let n = g.num_unknowns();
    let w = g.h().powi(d as i32 - 2);
    let mut coo = CooMatrix::with_capacity(n, n, n * (2 * d + 1));
    let mut lid = vec![0.0; n];
    for cell in 0..g.num_cells() {
        let c = g.cell_coords(cell);
        for a in 0..d {
            let x = g.index(c, velocity_kind(a));
            if c[a] == g.extent(a) - 1 {
                coo.push(x, x, -2.0 * d as f64 * w);
                continue;
            }
            let mut diag = 0.0;
            for b in 0..d {
                for delta in [-1, 1] {
                    let nb = shifted(c, b, delta);
                    if b == a {
                        diag += 1.0;
                        if let Some(y) = face_velocity(g, nb, a) {
                            coo.push(x, y, w);
                        }
                    } else if g.contains(nb) {
                        diag += 1.0;
                        coo.push(x, g.index(to_cell(nb), velocity_kind(a)), w);
                    } else {
                        diag += 2.0;
                        if a == 0 && b == lid_axis(g) && delta == 1 {
                            lid[x] += 2.0 * w;
                        }
                    }
                }
            }
            coo.push(x, x, -diag * w);
        }
    }
    (coo.to_csr(), lid)
}

/// Pressure gradient integrated over velocity control volumes:
/// `(p(c + e_a) − p(c)) h^(d−1)` in velocity rows, pressure columns.
pub fn gradient(g: &StaggeredGrid) -> CsrMatrix<f64> {
    let d = g.dim();
    let n = g.num_unknowns();
    let area = g.h().powi(d as i32 - 1);
    let mut coo = CooMatrix::with_capacity(n, n, 2 * n);
    for cell in 0..g.num_cells() {
        let c = g.cell_coords(cell);
        for a in 0..d {
            if c[a] == g.extent(a) - 1 {
                continue;
            }
            let x = g.index(c, velocity_kind(a));
            let east = to_cell(shifted(c, a, 1));
            coo.push(x, g.index(c, VarKind::P), -area);
            coo.push(x, g.index(east, VarKind::P), area);
        }
    }
    coo.to_csr()
}

/// Diagonal velocity mass matrix (control-volume sizes); zero on pressures.
pub fn mass_matrix(g: &StaggeredGrid) -> CsrMatrix<f64> {
    let n = g.num_unknowns();
    let vol = g.h().powi(g.dim() as i32);
    let mut coo = CooMatrix::with_capacity(n, n, n);
    for i in 0..n {
        let v = g.decode(i);
        if v.kind.is_velocity() && !g.is_dummy(v) {
            coo.push(i, i, vol);
        }
    }
    coo.to_csr()
}
