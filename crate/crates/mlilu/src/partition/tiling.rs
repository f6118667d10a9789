use std::collections::HashMap;

use super::{PartitionError, Result};
use crate::grid::StaggeredGrid;

/// Subdomain geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PartitionKind {
    /// Axis-aligned boxes; produces isolated pressures and is kept as the
    /// reference counterexample.
    Cartesian,
    /// 2D squares rotated by 45 degrees.
    Skew,
    /// 3D parallelepipeds whose horizontal sections are skew squares.
    Parallelepiped,
}

impl PartitionKind {
    pub fn name(self) -> &'static str {
        match self {
            PartitionKind::Cartesian => "cartesian",
            PartitionKind::Skew => "skew",
            PartitionKind::Parallelepiped => "parallelepiped",
        }
    }
}

/// Shape of one subdomain: the lattice key and the tile size at its level.
///
/// For Cartesian tiles the key is `(i/s, j/s, k/s)`. Skew tiles are
/// `(⌊(i+j)/s⌋, ⌊(i−j)/s⌋)`, and parallelepipeds add `⌊(i−j+k)/s⌋` as
/// third coordinate, so every horizontal section is a skew square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    pub kind: PartitionKind,
    pub key: [i64; 3],
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subdomain {
    pub id: usize,
    pub level: usize,
    pub shape: Shape,
    /// Cell ids (clipped at the domain boundary), increasing.
    pub cells: Vec<usize>,
}

/// Self-similar family of tilings: the tile size at level `ℓ` is
/// `s · factor^(ℓ−1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tiling {
    grid: StaggeredGrid,
    kind: PartitionKind,
    size: usize,
    factor: usize,
}

/// Tiles of one level. Subdomain ids are assigned in order of first
/// appearance when cells are scanned by id.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelTiles {
    pub level: usize,
    pub cell_tile: Vec<usize>,
    pub keys: Vec<[i64; 3]>,
    pub size: usize,
}

impl LevelTiles {
    pub fn count(&self) -> usize {
        self.keys.len()
    }
}

impl Tiling {
    pub fn new(
        grid: StaggeredGrid,
        kind: PartitionKind,
        size: usize,
        factor: usize,
    ) -> Result<Self> {
        if size == 0 {
            return Err(PartitionError::BadSize(
                "subdomain size must be positive".into(),
            ));
        }
        if factor < 2 {
            return Err(PartitionError::BadSize(format!(
                "coarsening factor must be at least 2, got {factor}"
            )));
        }
        match (kind, grid.dim()) {
            (PartitionKind::Skew, 3) => {
                return Err(PartitionError::BadSize(
                    "skew partitioning is 2D; use parallelepiped in 3D".into(),
                ))
            }
            (PartitionKind::Parallelepiped, 2) => {
                return Err(PartitionError::BadSize(
                    "parallelepiped partitioning is 3D; use skew in 2D".into(),
                ))
            }
            _ => {}
        }
        for a in 0..grid.dim() {
            if !grid.extent(a).is_multiple_of(size) {
                return Err(PartitionError::Incompatible {
                    extent: grid.extent(a),
                    size,
                });
            }
        }
        Ok(Self {
            grid,
            kind,
            size,
            factor,
        })
    }

    pub fn grid(&self) -> &StaggeredGrid {
        &self.grid
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn base_size(&self) -> usize {
        self.size
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn size_at(&self, level: usize) -> usize {
        self.size * self.factor.pow(level.saturating_sub(1) as u32)
    }

    /// Lattice key of a cell for tiles of size `s`.
    pub fn key(&self, c: [usize; 3], s: usize) -> [i64; 3] {
        let [i, j, k] = c.map(|v| v as i64);
        let s = s as i64;
        match self.kind {
            PartitionKind::Cartesian => [i / s, j / s, k / s],
            PartitionKind::Skew => [(i + j).div_euclid(s), (i - j).div_euclid(s), 0],
            PartitionKind::Parallelepiped => [
                (i + j).div_euclid(s),
                (i - j).div_euclid(s),
                (i - j + k).div_euclid(s),
            ],
        }
    }

    pub fn level(&self, level: usize) -> LevelTiles {
        let s = self.size_at(level);
        let mut ids: HashMap<[i64; 3], usize> = HashMap::new();
        let mut keys = Vec::new();
        let cell_tile = (0..self.grid.num_cells())
            .map(|cell| {
                let key = self.key(self.grid.cell_coords(cell), s);
                *ids.entry(key).or_insert_with(|| {
                    keys.push(key);
                    keys.len() - 1
                })
            })
            .collect();
        LevelTiles {
            level,
            cell_tile,
            keys,
            size: s,
        }
    }

    pub fn subdomains(&self, level: usize) -> Vec<Subdomain> {
        let t = self.level(level);
        let mut out: Vec<Subdomain> = t
            .keys
            .iter()
            .enumerate()
            .map(|(id, &key)| Subdomain {
                id,
                level,
                shape: Shape {
                    kind: self.kind,
                    key,
                    size: t.size,
                },
                cells: Vec::new(),
            })
            .collect();
        for (cell, &tile) in t.cell_tile.iter().enumerate() {
            out[tile].cells.push(cell);
        }
        out
    }

    /// Map from tile ids of `fine` to tile ids of the next level `coarse`.
    pub fn parents(&self, fine: &LevelTiles, coarse: &LevelTiles) -> Vec<usize> {
        let mut p = vec![usize::MAX; fine.count()];
        for (&f, &c) in fine.cell_tile.iter().zip(&coarse.cell_tile) {
            debug_assert!(p[f] == usize::MAX || p[f] == c, "tilings are nested");
            p[f] = c;
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let g = StaggeredGrid::new_2d(12, 12).unwrap();
        assert_eq!(
            Tiling::new(g, PartitionKind::Cartesian, 4, 2)
                .unwrap()
                .level(1)
                .count(),
            9
        );
        assert_eq!(
            Tiling::new(g, PartitionKind::Cartesian, 12, 2)
                .unwrap()
                .level(1)
                .count(),
            1
        );
        assert_eq!(
            Tiling::new(g, PartitionKind::Skew, 6, 2)
                .unwrap()
                .level(1)
                .count(),
            12
        );
        let g3 = StaggeredGrid::new_3d(16, 16, 16).unwrap();
        let t = Tiling::new(g3, PartitionKind::Cartesian, 4, 2).unwrap();
        assert_eq!(t.level(1).count(), 64);
        assert_eq!(t.level(2).count(), 8);
    }

    #[test]
    fn rejects_incompatible() {
        let g = StaggeredGrid::new_2d(10, 12).unwrap();
        assert!(Tiling::new(g, PartitionKind::Skew, 4, 2).is_err());
        assert!(Tiling::new(g, PartitionKind::Parallelepiped, 2, 2).is_err());
        assert!(Tiling::new(g, PartitionKind::Cartesian, 2, 1).is_err());
    }

    #[test]
    fn parallelepiped_volume() {
        // away from the boundary each tile holds s³/2 cells
        let g = StaggeredGrid::new_3d(32, 32, 32).unwrap();
        let t = Tiling::new(g, PartitionKind::Parallelepiped, 8, 2).unwrap();
        let subs = t.subdomains(1);
        let max = subs.iter().map(|s| s.cells.len()).max().unwrap();
        assert_eq!(max, 256);
    }
}
