//! Finite-volume discretization of steady Stokes and Navier–Stokes on the
//! staggered grid.
//!
//! Operators are first built in physical units (integrated over control
//! volumes of width `h`) and then brought to flux variables with
//! `D = diag(h^-(d-1) on velocities, 1 on pressures)`: the solver works on
//! `Ã = D A D` and `R̃(x̃) = D R(D x̃)`, in which every gradient entry is ±1.
//!
//! Sign conventions: the velocity block is `N₁ + N₂ − L/Re` (`−L` for
//! Stokes), the gradient block is `+G` and the divergence block is `Gᵀ`.

mod convection;
mod operators;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{GridError, StaggeredGrid, VarKind};
use crate::linalg::{CooMatrix, CsrMatrix};

pub use convection::{convection, convection_jacobians};
pub use operators::{gradient, laplacian, mass_matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizeError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("Reynolds number must be positive and finite, got {0}")]
    BadReynolds(f64),
    #[error("state has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state contains a non-finite value at index {0}")]
    NonFinite(usize),
}

pub type Result<T> = std::result::Result<T, DiscretizeError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Stokes,
    NavierStokes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Forcing {
    Zero,
    /// Uniform(−1, 1) per velocity unknown times the cell volume.
    Random {
        seed: u64,
    },
}

pub const DEFAULT_SEED: u64 = 42;

/// How the Navier–Stokes Jacobian treats the convection term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Linearization {
    #[default]
    Newton,
    /// Omits `N₂`.
    Picard,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemSpec {
    pub grid: StaggeredGrid,
    /// Ignored for Stokes.
    pub reynolds: f64,
    /// Tangential `u` on the top wall (y in 2D, z in 3D).
    pub lid_velocity: f64,
    pub kind: ProblemKind,
    pub forcing: Forcing,
}

impl ProblemSpec {
    /// Stokes with random forcing and no-slip walls.
    pub fn stokes(grid: StaggeredGrid) -> Self {
        Self {
            grid,
            reynolds: 1.0,
            lid_velocity: 0.0,
            kind: ProblemKind::Stokes,
            forcing: Forcing::Random { seed: DEFAULT_SEED },
        }
    }

    /// Lid-driven cavity with unit lid speed.
    pub fn cavity(grid: StaggeredGrid, reynolds: f64) -> Self {
        Self {
            grid,
            reynolds,
            lid_velocity: 1.0,
            kind: ProblemKind::NavierStokes,
            forcing: Forcing::Zero,
        }
    }

    pub fn with_reynolds(self, reynolds: f64) -> Self {
        Self { reynolds, ..self }
    }

    /// Factor in front of `−L`.
    pub fn viscosity(&self) -> f64 {
        match self.kind {
            ProblemKind::Stokes => 1.0,
            ProblemKind::NavierStokes => 1.0 / self.reynolds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ProblemKind::NavierStokes
            && !(self.reynolds.is_finite() && self.reynolds > 0.0)
        {
            return Err(DiscretizeError::BadReynolds(self.reynolds));
        }
        Ok(())
    }
}

/// Saddle-point operator with the kind of every row/column.
#[derive(Clone, Debug, PartialEq)]
pub struct SaddleMatrix {
    pub matrix: CsrMatrix<f64>,
    pub kinds: Vec<VarKind>,
}

impl SaddleMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_pressure(&self, i: usize) -> bool {
        self.kinds[i] == VarKind::P
    }

    pub fn velocity_ids(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.is_pressure(i)).collect()
    }

    pub fn pressure_ids(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.is_pressure(i)).collect()
    }

    /// Stored entries in the pressure-pressure block.
    pub fn pressure_block_nnz(&self) -> usize {
        self.matrix
            .iter()
            .filter(|&(r, c, _)| self.is_pressure(r) && self.is_pressure(c))
            .count()
    }

    /// Largest `|A[v,p] − A[p,v]|` over velocity/pressure pairs, including
    /// pairs stored on only one side.
    pub fn duality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (r, c, v) in self.matrix.iter() {
            if self.is_pressure(r) != self.is_pressure(c) {
                let t = self.matrix.get(c, r).unwrap_or(0.0);
                worst = worst.max((v - t).abs());
            }
        }
        worst
    }

    /// `true` when divergence equals gradient transpose bitwise.
    pub fn has_exact_duality(&self) -> bool {
        self.duality_defect() == 0.0
    }
}

/// Precomputed operators of one problem, used for repeated residual and
/// Jacobian evaluations.
#[derive(Clone, Debug)]
pub struct Discretization {
    spec: ProblemSpec,
    kinds: Vec<VarKind>,
    /// Unscaled linear part: `−ν L + G + Gᵀ` plus the dummy diagonal.
    linear: CsrMatrix<f64>,
    /// Unscaled right-hand side: forcing plus `ν` times the lid term.
    rhs: Vec<f64>,
    scale: Vec<f64>,
}

impl Discretization {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let g = spec.grid;
        let n = g.num_unknowns();
        let nu = spec.viscosity();
        let (lap, lid) = laplacian(&g);
        let grad = gradient(&g);
        let mut coo = CooMatrix::with_capacity(n, n, lap.nnz() + 2 * grad.nnz());
        for (r, c, v) in lap.iter() {
            coo.push(r, c, -nu * v);
        }
        for (r, c, v) in grad.iter() {
            coo.push(r, c, v);
            coo.push(c, r, v);
        }
        let linear = coo.to_csr();
        let mut rhs = forcing_vector(&g, spec.forcing);
        for (r, l) in rhs.iter_mut().zip(&lid) {
            *r += nu * spec.lid_velocity * l;
        }
        let kinds = (0..n).map(|i| g.kind_of(i)).collect();
        let scale = flux_scale(&g, &grad);
        Ok(Self {
            spec,
            kinds,
            linear,
            rhs,
            scale,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn grid(&self) -> &StaggeredGrid {
        &self.spec.grid
    }

    pub fn n(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self) -> &[VarKind] {
        &self.kinds
    }

    /// Diagonal `D` mapping flux variables to physical ones.
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Physical state `D x̃`.
    pub fn to_physical(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.scale).map(|(a, d)| a * d).collect()
    }

    /// Flux state `D⁻¹ x`.
    pub fn to_flux(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.scale).map(|(a, d)| a / d).collect()
    }

    /// Scaled right-hand side of the linear part (`R̃(0) = −rhs`).
    pub fn rhs(&self) -> Vec<f64> {
        self.rhs
            .iter()
            .zip(&self.scale)
            .map(|(a, d)| a * d)
            .collect()
    }

    /// Scaled linear operator (the Stokes matrix, or the Jacobian at `u = 0`).
    pub fn linear_operator(&self) -> SaddleMatrix {
        self.wrap(self.linear.scale(&self.scale, &self.scale))
    }

    fn wrap(&self, matrix: CsrMatrix<f64>) -> SaddleMatrix {
        SaddleMatrix {
            matrix,
            kinds: self.kinds.clone(),
        }
    }

    fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(DiscretizeError::DimensionMismatch {
                expected: self.n(),
                found: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(DiscretizeError::NonFinite(i));
        }
        Ok(())
    }

    /// Scaled Jacobian at the flux state `x`. For Stokes this is the
    /// constant linear operator.
    pub fn jacobian(&self, x: &[f64], lin: Linearization) -> Result<SaddleMatrix> {
        self.check_state(x)?;
        if self.spec.kind == ProblemKind::Stokes {
            return Ok(self.linear_operator());
        }
        let u = self.to_physical(x);
        let (n1, n2) = convection_jacobians(&self.spec.grid, &u);
        let n = self.n();
        let mut coo = CooMatrix::with_capacity(n, n, self.linear.nnz() + n1.nnz() + n2.nnz());
        for (r, c, v) in self.linear.iter().chain(n1.iter()) {
            coo.push(r, c, v);
        }
        // N₂ entries are always stored so the pattern does not depend on the linearization
        for (r, c, v) in n2.iter() {
            coo.push(r, c, if lin == Linearization::Newton { v } else { 0.0 });
        }
        Ok(self.wrap(coo.to_csr().scale(&self.scale, &self.scale)))
    }

    /// Scaled residual `R̃(x̃) = D (A x + N(u, u) − f)` with `x = D x̃`.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_state(x)?;
        let xp = self.to_physical(x);
        let mut r = self.linear.matvec(&xp).expect("dimensions checked");
        if self.spec.kind == ProblemKind::NavierStokes {
            let nc = convection(&self.spec.grid, &xp, &xp);
            for (a, b) in r.iter_mut().zip(&nc) {
                *a += b;
            }
        }
        for ((a, f), d) in r.iter_mut().zip(&self.rhs).zip(&self.scale) {
            *a = (*a - f) * d;
        }
        Ok(r)
    }

    /// Largest discrete divergence `|Gᵀu|` over cells, in flux units.
    pub fn divergence_max(&self, x: &[f64]) -> f64 {
        let xp = self.to_physical(x);
        let mut worst: f64 = 0.0;
        for i in 0..self.n() {
            if self.kinds[i] != VarKind::P {
                continue;
            }
            let (cs, vs) = self.linear.row(i);
            let s: f64 = cs.iter().zip(vs).map(|(&c, &v)| v * xp[c]).sum();
            worst = worst.max((s * self.scale[i]).abs());
        }
        worst
    }
}

/// Scaled Stokes (or linear) operator of `spec`.
pub fn assemble_stokes(spec: &ProblemSpec) -> Result<SaddleMatrix> {
    Ok(Discretization::new(*spec)?.linear_operator())
}

/// Scaled Jacobian at the flux state `x` (pressure entries ignored).
pub fn assemble_jacobian(spec: &ProblemSpec, x: &[f64]) -> Result<SaddleMatrix> {
    Discretization::new(*spec)?.jacobian(x, Linearization::Newton)
}

/// Scaled nonlinear residual at the flux state `x`.
pub fn residual(spec: &ProblemSpec, x: &[f64]) -> Result<Vec<f64>> {
    Discretization::new(*spec)?.residual(x)
}

/// Brings an unscaled operator to flux variables: `D A D` with `D` chosen
/// from the gradient rows so every gradient entry has the same magnitude.
/// Returns the scaled operator and `D`.
pub fn scale_to_fluxes(a: &SaddleMatrix, g: &StaggeredGrid) -> (SaddleMatrix, Vec<f64>) {
    let n = a.n();
    let default = g.h().powi(-(g.dim() as i32 - 1));
    let mut d = vec![1.0; n];
    for (i, di) in d.iter_mut().enumerate() {
        if a.is_pressure(i) {
            continue;
        }
        let (cs, vs) = a.matrix.row(i);
        let gmax = cs
            .iter()
            .zip(vs)
            .filter(|&(&c, _)| a.is_pressure(c))
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        *di = if gmax > 0.0 { 1.0 / gmax } else { default };
    }
    (
        SaddleMatrix {
            matrix: a.matrix.scale(&d, &d),
            kinds: a.kinds.clone(),
        },
        d,
    )
}

fn flux_scale(g: &StaggeredGrid, grad: &CsrMatrix<f64>) -> Vec<f64> {
    let default = g.h().powi(-(g.dim() as i32 - 1));
    (0..g.num_unknowns())
        .map(|i| {
            if g.kind_of(i) == VarKind::P {
                return 1.0;
            }
            let m = grad.row(i).1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m > 0.0 {
                1.0 / m
            } else {
                default
            }
        })
        .collect()
}

/// Unscaled body force integrated over velocity control volumes.
pub fn forcing_vector(g: &StaggeredGrid, forcing: Forcing) -> Vec<f64> {
    let n = g.num_unknowns();
    let mut f = vec![0.0; n];
    if let Forcing::Random { seed } = forcing {
        let vol = g.h().powi(g.dim() as i32);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, fi) in f.iter_mut().enumerate() {
            let v = g.decode(i);
            if v.kind.is_velocity() && !g.is_dummy(v) {
                *fi = rng.random_range(-1.0..1.0) * vol;
            }
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(a: &CsrMatrix<f64>) -> Vec<Vec<f64>> {
        let d = a.to_dense();
        d.chunks(a.ncols()).map(|r| r.to_vec()).collect()
    }

    #[test]
    fn small_stokes_structure() {
        let g = StaggeredGrid::new_2d(2, 2).unwrap();
        let a = assemble_stokes(&ProblemSpec::stokes(g)).unwrap();
        assert_eq!(a.n(), 12);
        assert_eq!(a.pressure_block_nnz(), 0);
        assert!(a.has_exact_duality());
    }

    #[test]
    fn gradient_entries_have_unit_magnitude() {
        let g = StaggeredGrid::new_3d(4, 4, 4).unwrap();
        let a = assemble_stokes(&ProblemSpec::stokes(g)).unwrap();
        let first = a
            .matrix
            .iter()
            .find(|&(r, c, _)| !a.is_pressure(r) && a.is_pressure(c))
            .map(|e| e.2.abs())
            .unwrap();
        for (r, c, v) in a.matrix.iter() {
            if a.is_pressure(r) != a.is_pressure(c) {
                assert_eq!(v.abs(), first);
            }
        }
    }

    #[test]
    fn interior_divergence_rows_sum_to_zero() {
        let g = StaggeredGrid::new_2d(6, 6).unwrap();
        let a = assemble_stokes(&ProblemSpec::stokes(g)).unwrap();
        for i in a.pressure_ids() {
            let v = g.decode(i);
            if v.i == 0 || v.j == 0 || v.i == 5 || v.j == 5 {
                continue;
            }
            let (cs, vs) = a.matrix.row(i);
            assert!(cs.len() <= 4);
            assert_eq!(vs.iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn velocity_block_symmetric() {
        let g = StaggeredGrid::new_2d(4, 4).unwrap();
        let a = assemble_stokes(&ProblemSpec::stokes(g)).unwrap();
        let d = dense(&a.matrix);
        for i in 0..a.n() {
            for j in 0..a.n() {
                assert!((d[i][j] - d[j][i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_pressure_is_null() {
        let g = StaggeredGrid::new_3d(3, 3, 3).unwrap();
        let a = assemble_stokes(&ProblemSpec::stokes(g)).unwrap();
        let x: Vec<f64> = (0..a.n())
            .map(|i| if a.is_pressure(i) { 1.0 } else { 0.0 })
            .collect();
        assert!(a.matrix.matvec(&x).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn jacobian_at_rest_is_scaled_stokes() {
        let g = StaggeredGrid::new_2d(4, 4).unwrap();
        let re = 250.0;
        let ns = Discretization::new(ProblemSpec::cavity(g, re)).unwrap();
        let j = ns
            .jacobian(&vec![0.0; ns.n()], Linearization::Newton)
            .unwrap();
        let st = assemble_stokes(&ProblemSpec::stokes(g)).unwrap();
        for (r, c, v) in st.matrix.iter() {
            let w = j.matrix.get(r, c).unwrap();
            if st.is_pressure(r) || st.is_pressure(c) {
                assert_eq!(v, w);
            } else {
                assert!((v / re - w).abs() < 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn lid_only_residual() {
        let g = StaggeredGrid::new_2d(4, 4).unwrap();
        let spec = ProblemSpec {
            lid_velocity: 1.0,
            forcing: Forcing::Zero,
            ..ProblemSpec::stokes(g)
        };
        let d = Discretization::new(spec).unwrap();
        let r = d.residual(&vec![0.0; d.n()]).unwrap();
        for (i, &v) in r.iter().enumerate() {
            let x = g.decode(i);
            let lid_row = x.kind == VarKind::U && x.j == 3 && x.i < 3;
            assert_eq!(v != 0.0, lid_row, "row {i}");
        }
    }

    #[test]
    fn scaling_matches_direct_assembly() {
        let g = StaggeredGrid::new_2d(4, 4).unwrap();
        let (lap, _) = laplacian(&g);
        let grad = gradient(&g);
        let n = g.num_unknowns();
        let mut coo = CooMatrix::new(n, n);
        for (r, c, v) in lap.iter() {
            coo.push(r, c, -v);
        }
        for (r, c, v) in grad.iter() {
            coo.push(r, c, v);
            coo.push(c, r, v);
        }
        let kinds = (0..n).map(|i| g.kind_of(i)).collect();
        let raw = SaddleMatrix {
            matrix: coo.to_csr(),
            kinds,
        };
        let (scaled, _) = scale_to_fluxes(&raw, &g);
        assert_eq!(scaled.pressure_block_nnz(), 0);
        assert_eq!(scaled, assemble_stokes(&ProblemSpec::stokes(g)).unwrap());
    }
}
