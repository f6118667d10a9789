//! Index arithmetic for unknowns on a staggered (Arakawa C) grid.
//!
//! Unknowns are numbered cell by cell, `i` fastest, then `j`, then `k`.
//! Within a cell the order is u, v, (w), p. Velocity `u` lives on the east
//! face, `v` on the north face and `w` on the top face of its cell.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("dimension must be 2 or 3, got {0}")]
    BadDimension(usize),
    #[error("grid needs at least 2 cells per direction, got {0}")]
    TooSmall(usize),
    #[error("cell ({i}, {j}, {k}) is outside the {nx}x{ny}x{nz} grid")]
    OutOfBounds {
        i: usize,
        j: usize,
        k: usize,
        nx: usize,
        ny: usize,
        nz: usize,
    },
    #[error("variable W does not exist on a 2D grid")]
    NoW,
    #[error("index {id} out of range for {n} unknowns")]
    IndexOutOfRange { id: usize, n: usize },
}

/// Type of an unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    U,
    V,
    W,
    P,
}

impl VarKind {
    pub fn is_velocity(self) -> bool {
        self != VarKind::P
    }

    /// Axis of a velocity component.
    pub fn axis(self) -> Option<usize> {
        match self {
            VarKind::U => Some(0),
            VarKind::V => Some(1),
            VarKind::W => Some(2),
            VarKind::P => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VarKind::U => "u",
            VarKind::V => "v",
            VarKind::W => "w",
            VarKind::P => "p",
        }
    }
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An unknown addressed by its cell and kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VarIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub kind: VarKind,
}

impl VarIndex {
    pub fn new(i: usize, j: usize, k: usize, kind: VarKind) -> Self {
        Self { i, j, k, kind }
    }

    pub fn cell(&self) -> [usize; 3] {
        [self.i, self.j, self.k]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StaggeredGrid {
    dim: usize,
    n: [usize; 3],
}

impl StaggeredGrid {
    pub fn new_2d(nx: usize, ny: usize) -> Result<Self, GridError> {
        Self::new(2, [nx, ny, 1])
    }

    pub fn new_3d(nx: usize, ny: usize, nz: usize) -> Result<Self, GridError> {
        Self::new(3, [nx, ny, nz])
    }

    /// Square or cubic grid with `n` cells per direction.
    pub fn cube(dim: usize, n: usize) -> Result<Self, GridError> {
        Self::new(dim, [n, n, if dim == 3 { n } else { 1 }])
    }

    pub fn new(dim: usize, n: [usize; 3]) -> Result<Self, GridError> {
        if dim != 2 && dim != 3 {
            return Err(GridError::BadDimension(dim));
        }
        for &m in &n[..dim] {
            if m < 2 {
                return Err(GridError::TooSmall(m));
            }
        }
        let nz = if dim == 3 { n[2] } else { 1 };
        Ok(Self {
            dim,
            n: [n[0], n[1], nz],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.n[0]
    }

    pub fn ny(&self) -> usize {
        self.n[1]
    }

    pub fn nz(&self) -> usize {
        self.n[2]
    }

    /// Cells along `axis`.
    pub fn extent(&self, axis: usize) -> usize {
        self.n[axis]
    }

    /// Mesh width; the domain is `[0, 1]` along x.
    pub fn h(&self) -> f64 {
        1.0 / self.n[0] as f64
    }

    pub fn vars_per_cell(&self) -> usize {
        self.dim + 1
    }

    pub fn num_cells(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn num_unknowns(&self) -> usize {
        self.num_cells() * self.vars_per_cell()
    }

    /// Kinds present on this grid in cell order.
    pub fn kinds(&self) -> &'static [VarKind] {
        if self.dim == 2 {
            &[VarKind::U, VarKind::V, VarKind::P]
        } else {
            &[VarKind::U, VarKind::V, VarKind::W, VarKind::P]
        }
    }

    /// Offset of `kind` inside a cell.
    pub fn var_offset(&self, kind: VarKind) -> Option<usize> {
        match kind {
            VarKind::P => Some(self.dim),
            VarKind::W if self.dim == 2 => None,
            v => v.axis(),
        }
    }

    pub fn cell_id(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    pub fn cell_coords(&self, cell: usize) -> [usize; 3] {
        let i = cell % self.n[0];
        let j = (cell / self.n[0]) % self.n[1];
        let k = cell / (self.n[0] * self.n[1]);
        [i, j, k]
    }

    pub fn contains(&self, c: [isize; 3]) -> bool {
        (0..3).all(|a| c[a] >= 0 && (c[a] as usize) < self.n[a])
    }

    pub fn linear_index(&self, v: VarIndex) -> Result<usize, GridError> {
        if v.i >= self.n[0] || v.j >= self.n[1] || v.k >= self.n[2] {
            return Err(GridError::OutOfBounds {
                i: v.i,
                j: v.j,
                k: v.k,
                nx: self.n[0],
                ny: self.n[1],
                nz: self.n[2],
            });
        }
        let off = self.var_offset(v.kind).ok_or(GridError::NoW)?;
        Ok(self.cell_id(v.i, v.j, v.k) * self.vars_per_cell() + off)
    }

    pub fn decode_index(&self, id: usize) -> Result<VarIndex, GridError> {
        if id >= self.num_unknowns() {
            return Err(GridError::IndexOutOfRange {
                id,
                n: self.num_unknowns(),
            });
        }
        Ok(self.decode(id))
    }

    /// Unchecked decode for ids known to be in range.
    pub fn decode(&self, id: usize) -> VarIndex {
        let nv = self.vars_per_cell();
        let [i, j, k] = self.cell_coords(id / nv);
        VarIndex {
            i,
            j,
            k,
            kind: self.kinds()[id % nv],
        }
    }

    /// Unchecked index of `kind` in cell `c`.
    pub fn index(&self, c: [usize; 3], kind: VarKind) -> usize {
        let off = self.var_offset(kind).expect("kind exists on this grid");
        self.cell_id(c[0], c[1], c[2]) * self.vars_per_cell() + off
    }

    pub fn kind_of(&self, id: usize) -> VarKind {
        self.kinds()[id % self.vars_per_cell()]
    }

    /// Wall-normal velocity on the last face of its axis. These carry no
    /// physics (the value is the Dirichlet zero) and are kept as decoupled
    /// unknowns so every cell has `dim + 1` unknowns.
    pub fn is_dummy(&self, v: VarIndex) -> bool {
        match v.kind.axis() {
            Some(a) => v.cell()[a] == self.n[a] - 1,
            None => false,
        }
    }

    pub fn is_dummy_id(&self, id: usize) -> bool {
        self.is_dummy(self.decode(id))
    }
}
