//! Multilevel incomplete factorization.
//!
//! Each level eliminates the subdomain interiors, transforms every
//! separator group with a Householder reflection built from the test
//! vector so that only its first node (the Σ node) keeps the group's
//! coupling to the pressure, drops all couplings of the remaining nodes
//! except their own diagonal block, and continues with the Σ-Σ block on a
//! tiling with larger subdomains. The last reduced matrix is factorized
//! directly.

mod householder;
mod level;

use rayon::prelude::*;
use thiserror::Error;

pub use householder::Householder;
pub use level::{
    eliminate_interiors, reduction_groups, transform_and_drop, InteriorBlock, ReductionGroup,
    SchurAssembly, Transformed,
};

use crate::discretize::SaddleMatrix;
use crate::grid::{StaggeredGrid, VarKind};
use crate::linalg::{CsrMatrix, DenseLu, DenseMatrix, LinalgError, LuOptions, SparseLu};
use crate::partition::{
    classify, detect_isolated_pressures, LevelNodes, NodeClassification, PartitionError,
    PartitionKind, Tiling,
};

/// Below this size the coarsest system is factorized densely.
pub const DENSE_COARSE_LIMIT: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrecondError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("level {level}: {count} isolated pressure nodes (first: {first})")]
    IsolatedPressures {
        level: usize,
        count: usize,
        first: usize,
    },
    #[error("level {level}: interior of subdomain {subdomain} is singular: {source}")]
    SingularInterior {
        level: usize,
        subdomain: usize,
        source: LinalgError,
    },
    #[error("non-retained block of separator chunk {group} is singular")]
    SingularBlock { group: usize },
    #[error("coarsest system is singular: {0}")]
    SingularCoarse(LinalgError),
    #[error("test vector vanishes on a separator group")]
    DegenerateGroup,
    #[error("test vector vanishes on separator group {group}")]
    DegenerateTestVector { group: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, PrecondError>;

/// Nodes kept per separator group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Retain {
    K(usize),
    /// Every node is kept and nothing is dropped (exact factorization).
    All,
}

/// Retain policy per level; levels past the end of the list use the last
/// entry (or 1 for an empty list).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RetainSchedule(pub Vec<Retain>);

impl RetainSchedule {
    pub fn uniform(r: Retain) -> Self {
        Self(vec![r])
    }

    /// One node per group on the first two levels and `k` from the third on.
    pub fn from_third_level(k: usize) -> Self {
        Self(vec![Retain::K(1), Retain::K(1), Retain::K(k)])
    }

    pub fn at(&self, level: usize) -> Retain {
        self.0
            .get(level - 1)
            .or(self.0.last())
            .copied()
            .unwrap_or(Retain::K(1))
    }
}

impl Default for RetainSchedule {
    fn default() -> Self {
        Self::uniform(Retain::K(1))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrecondConfig {
    pub partition: PartitionKind,
    /// Subdomain size on the first level.
    pub size: usize,
    /// Number of reductions; 0 is a direct solve.
    pub levels: usize,
    pub coarsening: usize,
    pub retain: RetainSchedule,
}

impl PrecondConfig {
    pub fn new(partition: PartitionKind, size: usize, levels: usize) -> Self {
        Self {
            partition,
            size,
            levels,
            coarsening: 2,
            retain: RetainSchedule::default(),
        }
    }

    /// Skew in 2D, parallelepiped in 3D.
    pub fn skew(dim: usize, size: usize, levels: usize) -> Self {
        let kind = if dim == 3 {
            PartitionKind::Parallelepiped
        } else {
            PartitionKind::Skew
        };
        Self::new(kind, size, levels)
    }

    pub fn with_retain(self, retain: RetainSchedule) -> Self {
        Self { retain, ..self }
    }
}

/// Partitioning data that depends only on the sparsity pattern, reused
/// across numeric factorizations (for example across Newton steps).
#[derive(Clone, Debug)]
pub struct PrecondSetup {
    pub config: PrecondConfig,
    pub tiling: Tiling,
    nodes: LevelNodes,
    first: Option<NodeClassification>,
}

impl PrecondSetup {
    pub fn new(a: &SaddleMatrix, grid: &StaggeredGrid, config: &PrecondConfig) -> Result<Self> {
        let tiling = Tiling::new(*grid, config.partition, config.size, config.coarsening)?;
        let tiles = tiling.level(1);
        let nodes = LevelNodes::from_grid(&tiling, &tiles);
        if a.n() != nodes.len() {
            return Err(PrecondError::DimensionMismatch {
                expected: nodes.len(),
                found: a.n(),
            });
        }
        let first = if config.levels > 0 {
            let c = classify(1, &nodes, &a.matrix, tiles.count())?;
            c.check_decoupling(&a.matrix)?;
            check_isolated(&c, &nodes.kinds, &a.matrix)?;
            Some(c)
        } else {
            None
        };
        Ok(Self {
            config: config.clone(),
            tiling,
            nodes,
            first,
        })
    }

    pub fn first_level(&self) -> Option<&NodeClassification> {
        self.first.as_ref()
    }

    pub fn nodes(&self) -> &LevelNodes {
        &self.nodes
    }
}

fn check_isolated(c: &NodeClassification, kinds: &[VarKind], a: &CsrMatrix<f64>) -> Result<()> {
    let iso = detect_isolated_pressures(c, kinds, a);
    if let Some(&first) = iso.first() {
        return Err(PrecondError::IsolatedPressures {
            level: c.level,
            count: iso.len(),
            first,
        });
    }
    Ok(())
}

/// Per-level sizes for reporting.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelDiagnostics {
    pub level: usize,
    pub n: usize,
    pub nnz: usize,
    pub subdomains: usize,
    pub interior: usize,
    pub separators: usize,
    pub groups: usize,
    pub sigma: usize,
    pub sigma_nnz: usize,
    pub interior_factor_nnz: usize,
    pub numeric_fallbacks: usize,
}

/// Factorization data of one level.
#[derive(Clone, Debug)]
pub struct LevelFactorization {
    pub level: usize,
    pub classification: NodeClassification,
    pub nodes: LevelNodes,
    a: CsrMatrix<f64>,
    interiors: Vec<InteriorBlock>,
    groups: Vec<ReductionGroup>,
    blocks: Vec<Option<DenseLu<f64>>>,
    /// Test vector on the level's nodes.
    pub test_vector: Vec<f64>,
    /// `(H S H)[Σ, Σ]` passed to the next level.
    pub s_sigma: CsrMatrix<f64>,
    pub diagnostics: LevelDiagnostics,
}

impl LevelFactorization {
    pub fn groups(&self) -> &[ReductionGroup] {
        &self.groups
    }

    pub fn operator(&self) -> &CsrMatrix<f64> {
        &self.a
    }

    pub fn interiors(&self) -> &[InteriorBlock] {
        &self.interiors
    }

    /// Kinds of the Σ nodes in the order of the next level.
    pub fn sigma_kinds(&self) -> Vec<VarKind> {
        self.groups.iter().map(|g| g.kind).collect()
    }
}

#[derive(Clone, Debug)]
enum CoarseFactor {
    Dense(DenseLu<f64>),
    Sparse(SparseLu<f64>),
}

#[derive(Clone, Debug)]
pub struct CoarseSolver {
    factor: CoarseFactor,
    /// Pressure fixed to zero to remove the constant-pressure null space.
    pinned: Option<usize>,
    pub n: usize,
    pub nnz: usize,
}

impl CoarseSolver {
    fn new(a: &CsrMatrix<f64>, kinds: &[VarKind]) -> Result<Self> {
        let n = a.nrows();
        let pinned = kinds.iter().position(|&k| k == VarKind::P);
        let m = match pinned {
            Some(p) => a.pin(p),
            None => a.clone(),
        };
        let factor = if n < DENSE_COARSE_LIMIT {
            let d = DenseMatrix::from_row_major(n, n, m.to_dense()).expect("square");
            CoarseFactor::Dense(DenseLu::factor(&d, 1e-12).map_err(PrecondError::SingularCoarse)?)
        } else {
            CoarseFactor::Sparse(
                SparseLu::factor(&m, &LuOptions::default())
                    .map_err(PrecondError::SingularCoarse)?,
            )
        };
        Ok(Self {
            factor,
            pinned,
            n,
            nnz: a.nnz(),
        })
    }

    fn solve(&self, r: &mut [f64]) {
        if let Some(p) = self.pinned {
            r[p] = 0.0;
        }
        match &self.factor {
            CoarseFactor::Dense(lu) => lu.solve_in_place(r),
            CoarseFactor::Sparse(lu) => {
                let mut work = vec![0.0; self.n];
                lu.solve_with(r, &mut work);
            }
        }
    }

    pub fn factor_nnz(&self) -> usize {
        match &self.factor {
            CoarseFactor::Dense(_) => self.n * self.n,
            CoarseFactor::Sparse(lu) => lu.nnz(),
        }
    }
}

/// The multilevel preconditioner `M ≈ A⁻¹`. Immutable after construction;
/// `apply` may be called concurrently.
#[derive(Clone, Debug)]
pub struct MultilevelPreconditioner {
    n: usize,
    levels: Vec<LevelFactorization>,
    coarse: CoarseSolver,
}

impl MultilevelPreconditioner {
    /// Partitions and factorizes `a` in one go.
    pub fn new(a: &SaddleMatrix, grid: &StaggeredGrid, config: &PrecondConfig) -> Result<Self> {
        let setup = PrecondSetup::new(a, grid, config)?;
        Self::factor(&setup, a)
    }

    /// Numeric factorization of `a`, which must have the pattern `setup` was
    /// built from.
    pub fn factor(setup: &PrecondSetup, a: &SaddleMatrix) -> Result<Self> {
        let cfg = &setup.config;
        let n = a.n();
        if n != setup.nodes.len() {
            return Err(PrecondError::DimensionMismatch {
                expected: setup.nodes.len(),
                found: n,
            });
        }
        let mut cur = a.matrix.clone();
        let mut nodes = setup.nodes.clone();
        let mut t: Vec<f64> = nodes
            .kinds
            .iter()
            .map(|&k| if k == VarKind::P { 0.0 } else { 1.0 })
            .collect();
        let mut tiles = setup.tiling.level(1);
        let mut levels = Vec::with_capacity(cfg.levels);
        for l in 1..=cfg.levels {
            let class = if l == 1 {
                setup
                    .first
                    .clone()
                    .expect("first level classified in setup")
            } else {
                let c = classify(l, &nodes, &cur, tiles.count())?;
                check_isolated(&c, &nodes.kinds, &cur)?;
                c
            };
            let (lev, next_t) = build_level(l, cur, nodes, class, t, cfg.retain.at(l))?;
            // next level: Σ nodes on the coarser tiling
            let coarse_tiles = setup.tiling.level(l + 1);
            let parent = setup.tiling.parents(&tiles, &coarse_tiles);
            nodes = sigma_nodes(&lev, &parent);
            cur = lev.s_sigma.clone();
            t = next_t;
            tiles = coarse_tiles;
            levels.push(lev);
        }
        let coarse = CoarseSolver::new(&cur, &nodes.kinds)?;
        Ok(Self { n, levels, coarse })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> &[LevelFactorization] {
        &self.levels
    }

    pub fn coarse(&self) -> &CoarseSolver {
        &self.coarse
    }

    pub fn diagnostics(&self) -> Vec<LevelDiagnostics> {
        self.levels.iter().map(|l| l.diagnostics.clone()).collect()
    }

    /// `M r`.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.n {
            return Err(PrecondError::DimensionMismatch {
                expected: self.n,
                found: r.len(),
            });
        }
        let mut x = r.to_vec();
        self.apply_from(0, &mut x);
        Ok(x)
    }

    /// Unchecked `x ← M x`.
    pub fn apply_in_place(&self, x: &mut [f64]) {
        self.apply_from(0, x);
    }

    fn apply_from(&self, l: usize, r: &mut [f64]) {
        let Some(lev) = self.levels.get(l) else {
            self.coarse.solve(r);
            return;
        };
        let a = &lev.a;
        let n = r.len();
        let sep = &lev.classification.separators;

        // y_I = A_II⁻¹ r_I
        let mut y = vec![0.0; n];
        interior_solve(&lev.interiors, r, &mut y);
        // z = H (r_S − A_SI y_I)
        let mut z: Vec<f64> = sep
            .par_iter()
            .map(|&s| {
                let (cs, vs) = a.row(s);
                r[s] - cs.iter().zip(vs).map(|(&c, &v)| v * y[c]).sum::<f64>()
            })
            .collect();
        let mut w = vec![0.0; sep.len()];
        let ng = lev.groups.len();
        let mut inner = vec![0.0; ng];
        let solved: Vec<(Vec<f64>, f64)> = lev
            .groups
            .par_iter()
            .zip(&lev.blocks)
            .map(|(g, b)| {
                let mut loc: Vec<f64> = g.members.iter().map(|&q| z[q]).collect();
                g.reflect(&mut loc);
                let sigma = loc[0];
                if let Some(lu) = b {
                    lu.solve_in_place(&mut loc[1..]);
                }
                (loc, sigma)
            })
            .collect();
        for (gi, (loc, sigma)) in solved.iter().enumerate() {
            inner[gi] = *sigma;
            for (&q, &v) in lev.groups[gi].members.iter().zip(loc).skip(1) {
                w[q] = v;
            }
        }
        self.apply_from(l + 1, &mut inner);
        for (g, &v) in lev.groups.iter().zip(&inner) {
            w[g.sigma()] = v;
        }
        // x_S = H w
        for g in &lev.groups {
            let mut loc: Vec<f64> = g.members.iter().map(|&q| w[q]).collect();
            g.reflect(&mut loc);
            for (&q, v) in g.members.iter().zip(loc) {
                z[q] = v;
            }
        }
        let mut xs = vec![0.0; n];
        for (&s, &v) in sep.iter().zip(&z) {
            xs[s] = v;
        }
        // x_I = y_I − A_II⁻¹ A_IS x_S
        let mut q = vec![0.0; n];
        for blk in &lev.interiors {
            for &i in &blk.ids {
                let (cs, vs) = a.row(i);
                q[i] = cs.iter().zip(vs).map(|(&c, &v)| v * xs[c]).sum();
            }
        }
        let mut corr = vec![0.0; n];
        interior_solve(&lev.interiors, &q, &mut corr);
        for blk in &lev.interiors {
            for &i in &blk.ids {
                xs[i] = y[i] - corr[i];
            }
        }
        r.copy_from_slice(&xs);
    }
}

fn interior_solve(blocks: &[InteriorBlock], r: &[f64], out: &mut [f64]) {
    let parts: Vec<Vec<f64>> = blocks
        .par_iter()
        .map(|b| {
            let mut x: Vec<f64> = b.ids.iter().map(|&i| r[i]).collect();
            let mut work = vec![0.0; x.len()];
            b.lu.solve_with(&mut x, &mut work);
            x
        })
        .collect();
    for (b, x) in blocks.iter().zip(parts) {
        for (&i, v) in b.ids.iter().zip(x) {
            out[i] = v;
        }
    }
}

fn build_level(
    level: usize,
    a: CsrMatrix<f64>,
    nodes: LevelNodes,
    class: NodeClassification,
    t: Vec<f64>,
    retain: Retain,
) -> Result<(LevelFactorization, Vec<f64>)> {
    let (interiors, schur) = eliminate_interiors(&a, &nodes.kinds, &class, level)?;
    let groups = reduction_groups(&class, &t, retain)?;
    let t_sep: Vec<f64> = class.separators.iter().map(|&x| t[x]).collect();
    let tr = transform_and_drop(&schur.matrix, &groups, &t_sep)?;
    // pressures carry no test value
    let next_t: Vec<f64> = groups
        .iter()
        .zip(&tr.t_sigma)
        .map(|(g, &v)| if g.kind == VarKind::P { 0.0 } else { v })
        .collect();
    let diagnostics = LevelDiagnostics {
        level,
        n: a.nrows(),
        nnz: a.nnz(),
        subdomains: interiors.len(),
        interior: interiors.iter().map(|b| b.ids.len()).sum(),
        separators: class.separators.len(),
        groups: class.groups.len(),
        sigma: tr.sigma.len(),
        sigma_nnz: tr.s_sigma.nnz(),
        interior_factor_nnz: interiors.iter().map(|b| b.lu.nnz()).sum(),
        numeric_fallbacks: schur.numeric_fallbacks,
    };
    Ok((
        LevelFactorization {
            level,
            classification: class,
            nodes,
            a,
            interiors,
            groups,
            blocks: tr.blocks,
            test_vector: t,
            s_sigma: tr.s_sigma,
            diagnostics,
        },
        next_t,
    ))
}

/// Σ nodes of `lev` as nodes of the next level. A node's footprint there
/// is the set of parents of its adjacent subdomains.
fn sigma_nodes(lev: &LevelFactorization, parent: &[usize]) -> LevelNodes {
    let c = &lev.classification;
    let nodes = &lev.nodes;
    let mut out = LevelNodes {
        kinds: Vec::new(),
        footprint: Vec::new(),
        coords: Vec::new(),
        origin: Vec::new(),
        oblique: None,
    };
    for g in &lev.groups {
        let x = c.separators[g.sigma()];
        let mut fp: Vec<usize> = c.groups[g.group]
            .adjacency
            .iter()
            .map(|&s| parent[s])
            .collect();
        fp.sort_unstable();
        fp.dedup();
        out.kinds.push(g.kind);
        out.footprint.push(fp);
        out.coords.push(nodes.coords[x]);
        out.origin.push(nodes.origin[x]);
    }
    out
}
