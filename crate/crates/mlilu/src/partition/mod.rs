//! Domain decomposition into subdomain interiors and separator groups.
//!
//! A node's footprint is the set of tiles it touches: the two cells of a
//! velocity face, or the single cell of a pressure. Nodes with a single
//! tile start out interior. A pass over the matrix graph then promotes one
//! node of every interior-interior coupling between different subdomains to
//! the separator, which makes the interiors decoupled by construction. One
//! pressure per interior is retained, and separators are grouped by kind,
//! adjacent subdomains and the pattern of their pressure couplings.

mod classify;
mod tiling;

use thiserror::Error;

pub use classify::{
    classify, detect_isolated_pressures, LevelNodes, NodeClass, NodeClassification, SeparatorGroup,
    WSide,
};
pub use tiling::{LevelTiles, PartitionKind, Shape, Subdomain, Tiling};

use crate::discretize::SaddleMatrix;
use crate::grid::StaggeredGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("grid extent {extent} is not a multiple of the subdomain size {size}")]
    Incompatible { extent: usize, size: usize },
    #[error("invalid partition parameters: {0}")]
    BadSize(String),
    #[error("interiors of subdomains {a} and {b} couple through A[{i}, {j}]")]
    Decoupling {
        i: usize,
        j: usize,
        a: usize,
        b: usize,
    },
    #[error("pressures {0} and {1} are coupled")]
    PressureCoupling(usize, usize),
    #[error("w-nodes {0} and {1} have the same oblique parity")]
    ParityClash(usize, usize),
    #[error("cannot coarsen: level {level} already has a single subdomain")]
    TooCoarse { level: usize },
}

pub type Result<T> = std::result::Result<T, PartitionError>;

/// Level-1 classification of `a` for the given geometry.
pub fn partition(
    a: &SaddleMatrix,
    g: &StaggeredGrid,
    kind: PartitionKind,
    size: usize,
) -> Result<(Vec<Subdomain>, NodeClassification)> {
    let tiling = Tiling::new(*g, kind, size, 2)?;
    let subs = tiling.subdomains(1);
    let c = classify_nodes(&tiling, a)?;
    Ok((subs, c))
}

pub fn partition_cartesian(
    a: &SaddleMatrix,
    g: &StaggeredGrid,
    s: usize,
) -> Result<(Vec<Subdomain>, NodeClassification)> {
    partition(a, g, PartitionKind::Cartesian, s)
}

pub fn partition_skew2d(
    a: &SaddleMatrix,
    g: &StaggeredGrid,
    s: usize,
) -> Result<(Vec<Subdomain>, NodeClassification)> {
    partition(a, g, PartitionKind::Skew, s)
}

pub fn partition_parallelepiped3d(
    a: &SaddleMatrix,
    g: &StaggeredGrid,
    s: usize,
) -> Result<(Vec<Subdomain>, NodeClassification)> {
    partition(a, g, PartitionKind::Parallelepiped, s)
}

/// Level-1 classification of the grid unknowns, verified against `a`.
pub fn classify_nodes(tiling: &Tiling, a: &SaddleMatrix) -> Result<NodeClassification> {
    let tiles = tiling.level(1);
    let nodes = LevelNodes::from_grid(tiling, &tiles);
    let c = classify(1, &nodes, &a.matrix, tiles.count())?;
    c.check_decoupling(&a.matrix)?;
    Ok(c)
}

/// Tiles of the level after `tiles`; fails when `tiles` is already a single
/// subdomain.
pub fn coarsen(tiling: &Tiling, tiles: &LevelTiles) -> Result<LevelTiles> {
    if tiles.count() <= 1 {
        return Err(PartitionError::TooCoarse { level: tiles.level });
    }
    Ok(tiling.level(tiles.level + 1))
}
