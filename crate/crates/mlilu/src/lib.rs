//! Multilevel incomplete LU preconditioning for saddle-point systems from
//! staggered-grid (Arakawa C) discretizations of Stokes and Navier–Stokes.
//!
//! The pipeline is: [`discretize`] assembles the flux-scaled operator,
//! [`partition`] splits the unknowns into decoupled subdomain interiors and
//! separator groups, [`precond`] eliminates interiors, reduces every
//! separator group to a single node with a Householder reflection and
//! recurses on the reduced system, [`krylov`] runs right-preconditioned
//! GMRES and [`nonlinear`] drives Newton iterations and Reynolds-number
//! continuation.

pub mod discretize;
pub mod grid;
pub mod krylov;
pub mod linalg;
pub mod mmio;
pub mod nonlinear;
pub mod partition;
pub mod precond;

/// Sparse matrix used throughout the solver.
pub type SparseMatrix = linalg::CsrMatrix<f64>;
/// Sparse LU factorization used throughout the solver.
pub type LuFactor = linalg::SparseLu<f64>;
