use std::collections::HashMap;

use super::{LevelTiles, PartitionError, PartitionKind, Result, Tiling};
use crate::grid::VarKind;
use crate::linalg::CsrMatrix;

const NONE: usize = usize::MAX;

/// Nodes of one level with the geometric data classification needs.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelNodes {
    pub kinds: Vec<VarKind>,
    /// Tiles touched by each node, increasing.
    pub footprint: Vec<Vec<usize>>,
    /// Cell coordinates of the grid unknown each node descends from.
    pub coords: Vec<[usize; 3]>,
    /// Grid id each node descends from.
    pub origin: Vec<usize>,
    /// Coordinate whose parity alternates w-separators between the two
    /// sides of a parallelepiped face (level 1 in 3D only).
    pub oblique: Option<Vec<i64>>,
}

impl LevelNodes {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn from_grid(tiling: &Tiling, tiles: &LevelTiles) -> Self {
        let g = tiling.grid();
        let n = g.num_unknowns();
        let mut kinds = Vec::with_capacity(n);
        let mut footprint = Vec::with_capacity(n);
        let mut coords = Vec::with_capacity(n);
        for id in 0..n {
            let v = g.decode(id);
            let c = v.cell();
            let own = tiles.cell_tile[g.cell_id(c[0], c[1], c[2])];
            let mut fp = vec![own];
            if let Some(a) = v.kind.axis() {
                if !g.is_dummy(v) {
                    let mut e = c;
                    e[a] += 1;
                    let other = tiles.cell_tile[g.cell_id(e[0], e[1], e[2])];
                    if other != own {
                        fp.push(other);
                        fp.sort_unstable();
                    }
                }
            }
            kinds.push(v.kind);
            footprint.push(fp);
            coords.push(c);
        }
        let oblique = (tiling.kind() == PartitionKind::Parallelepiped).then(|| {
            coords
                .iter()
                .map(|c| c[0] as i64 - c[1] as i64 + c[2] as i64)
                .collect()
        });
        Self {
            kinds,
            footprint,
            coords,
            origin: (0..n).collect(),
            oblique,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    Interior(usize),
    Separator(usize),
}

/// Side of a w-separator relative to its adjacent subdomain pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WSide {
    NotApplicable,
    /// Promoted from the lower-id subdomain.
    Inside,
    Outside,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparatorGroup {
    pub id: usize,
    pub kind: VarKind,
    pub adjacency: Vec<usize>,
    pub side: WSide,
    /// Subdomain and sign of every pressure coupling of the members.
    pub pressure_signature: Vec<(usize, i8)>,
    /// Level node ids, increasing.
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeClassification {
    pub level: usize,
    pub class: Vec<NodeClass>,
    /// Tile of every node with a single-tile footprint.
    pub owner: Vec<Option<usize>>,
    /// Interior nodes per subdomain, increasing.
    pub interiors: Vec<Vec<usize>>,
    /// Retained pressure per subdomain.
    pub retained: Vec<Option<usize>>,
    /// All separator nodes, increasing.
    pub separators: Vec<usize>,
    pub groups: Vec<SeparatorGroup>,
}

impl NodeClassification {
    pub fn num_subdomains(&self) -> usize {
        self.interiors.len()
    }

    pub fn is_interior(&self, x: usize) -> bool {
        matches!(self.class[x], NodeClass::Interior(_))
    }

    /// Verifies that interiors of different subdomains never couple in `a`.
    pub fn check_decoupling(&self, a: &CsrMatrix<f64>) -> Result<()> {
        for (i, j, _) in a.iter() {
            if let (NodeClass::Interior(p), NodeClass::Interior(q)) = (self.class[i], self.class[j])
            {
                if p != q {
                    return Err(PartitionError::Decoupling { i, j, a: p, b: q });
                }
            }
        }
        Ok(())
    }
}

/// Classifies the nodes of one level against the pattern of `a`.
pub fn classify(
    level: usize,
    nodes: &LevelNodes,
    a: &CsrMatrix<f64>,
    ntiles: usize,
) -> Result<NodeClassification> {
    let n = nodes.len();
    let is_p = |x: usize| nodes.kinds[x] == VarKind::P;
    let owner: Vec<Option<usize>> = nodes
        .footprint
        .iter()
        .map(|f| if f.len() == 1 { Some(f[0]) } else { None })
        .collect();
    let mut interior: Vec<bool> = owner.iter().map(Option::is_some).collect();
    let mut side = vec![WSide::NotApplicable; n];

    for x in 0..n {
        for &y in a.row(x).0 {
            if x == y || !interior[x] || !interior[y] || owner[x] == owner[y] {
                continue;
            }
            let (ox, oy) = (owner[x].unwrap(), owner[y].unwrap());
            let z = match (is_p(x), is_p(y)) {
                (true, true) => return Err(PartitionError::PressureCoupling(x, y)),
                (true, false) => y,
                (false, true) => x,
                _ => {
                    let lo = if ox < oy { x } else { y };
                    match &nodes.oblique {
                        Some(ob)
                            if nodes.kinds[x] == VarKind::W && nodes.kinds[y] == VarKind::W =>
                        {
                            if ob[x].rem_euclid(2) == ob[y].rem_euclid(2) {
                                return Err(PartitionError::ParityClash(x, y));
                            }
                            let z = if ob[x].rem_euclid(2) == 1 { x } else { y };
                            side[z] = if z == lo {
                                WSide::Inside
                            } else {
                                WSide::Outside
                            };
                            z
                        }
                        _ => lo,
                    }
                }
            };
            interior[z] = false;
        }
    }

    let mut interiors: Vec<Vec<usize>> = vec![Vec::new(); ntiles];
    for x in 0..n {
        if interior[x] {
            interiors[owner[x].unwrap()].push(x);
        }
    }

    // retained pressure: the interior pressure closest to the centroid of
    // the interior pressures, ties to the smallest id
    let mut retained = vec![None; ntiles];
    for (t, members) in interiors.iter().enumerate() {
        let ps: Vec<usize> = members.iter().copied().filter(|&x| is_p(x)).collect();
        if ps.is_empty() {
            continue;
        }
        let m = ps.len() as f64;
        let mut centre = [0.0; 3];
        for &x in &ps {
            for (c, &v) in centre.iter_mut().zip(&nodes.coords[x]) {
                *c += v as f64;
            }
        }
        centre.iter_mut().for_each(|c| *c /= m);
        let dist = |x: usize| -> f64 {
            nodes.coords[x]
                .iter()
                .zip(&centre)
                .map(|(&v, c)| (v as f64 - c).powi(2))
                .sum()
        };
        let best = ps
            .iter()
            .copied()
            .fold(ps[0], |b, x| if dist(x) < dist(b) { x } else { b });
        retained[t] = Some(best);
        interior[best] = false;
    }
    for list in interiors.iter_mut() {
        list.retain(|&x| interior[x]);
    }

    let separators: Vec<usize> = (0..n).filter(|&x| !interior[x]).collect();
    type Key = (VarKind, Vec<usize>, WSide, Vec<(usize, i8)>);
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut groups: Vec<SeparatorGroup> = Vec::new();
    for &x in &separators {
        let adjacency = if is_p(x) {
            vec![owner[x].expect("pressures have a single tile")]
        } else {
            let mut adj: Vec<usize> = a
                .row(x)
                .0
                .iter()
                .filter(|&&y| interior[y])
                .map(|&y| owner[y].unwrap())
                .collect();
            adj.sort_unstable();
            adj.dedup();
            if adj.is_empty() {
                nodes.footprint[x].clone()
            } else {
                adj
            }
        };
        let mut sig: Vec<(usize, i8)> = Vec::new();
        if !is_p(x) {
            let (cs, vs) = a.row(x);
            for (&y, &v) in cs.iter().zip(vs) {
                if is_p(y) && v != 0.0 {
                    sig.push((owner[y].unwrap_or(NONE), if v > 0.0 { 1 } else { -1 }));
                }
            }
            sig.sort_unstable();
            sig.dedup();
        }
        let kind = nodes.kinds[x];
        let key = (kind, adjacency, side[x], sig);
        let gid = *index.entry(key.clone()).or_insert_with(|| {
            groups.push(SeparatorGroup {
                id: groups.len(),
                kind,
                adjacency: key.1,
                side: key.2,
                pressure_signature: key.3,
                members: Vec::new(),
            });
            groups.len() - 1
        });
        groups[gid].members.push(x);
    }
    // separators are scanned in increasing order, so groups are already
    // ordered by their smallest member

    let mut class: Vec<NodeClass> = (0..n)
        .map(|x| NodeClass::Interior(owner[x].unwrap_or(NONE)))
        .collect();
    for gr in &groups {
        for &m in &gr.members {
            class[m] = NodeClass::Separator(gr.id);
        }
    }
    Ok(NodeClassification {
        level,
        class,
        owner,
        interiors,
        retained,
        separators,
        groups,
    })
}

/// Interior pressures whose coupled velocities are all separators.
pub fn detect_isolated_pressures(
    c: &NodeClassification,
    kinds: &[VarKind],
    a: &CsrMatrix<f64>,
) -> Vec<usize> {
    (0..kinds.len())
        .filter(|&x| kinds[x] == VarKind::P && c.is_interior(x))
        .filter(|&x| {
            let mut vel = a
                .row(x)
                .0
                .iter()
                .filter(|&&y| kinds[y] != VarKind::P)
                .peekable();
            vel.peek().is_some() && vel.all(|&y| !c.is_interior(y))
        })
        .collect()
}
