//! One reduction step: interior elimination, Schur assembly, Householder
//! transformation of the separator groups and dropping.

use rayon::prelude::*;

use super::householder::Householder;
use super::{PrecondError, Result, Retain};
use crate::grid::VarKind;
use crate::linalg::{CooMatrix, CsrMatrix, DenseLu, DenseMatrix, LuOptions, SparseLu, SCHUR_PRUNE};
use crate::partition::NodeClassification;

const NONE: usize = usize::MAX;
/// Relative tolerance for the gradient identities behind the closed-form
/// pressure couplings.
const STRUCTURE_TOL: f64 = 1e-10;
const BLOCK_PIVOT_TOL: f64 = 1e-12;

/// LU factors of one subdomain interior.
#[derive(Clone, Debug)]
pub struct InteriorBlock {
    pub subdomain: usize,
    /// Level node ids, increasing.
    pub ids: Vec<usize>,
    pub lu: SparseLu<f64>,
}

/// Schur complement on the separators (in the order of
/// `NodeClassification::separators`).
#[derive(Clone, Debug)]
pub struct SchurAssembly {
    pub matrix: CsrMatrix<f64>,
    /// Subdomains whose pressure couplings had to be computed numerically.
    pub numeric_fallbacks: usize,
}

/// Interior factor, its Schur update triplets and whether a numeric
/// fallback was needed.
type InteriorResult = (InteriorBlock, Vec<(usize, usize, f64)>, bool);

/// Factorizes every interior and assembles
/// `S = A_SS + Σ_α (−A_Sα A_αα⁻¹ A_αS)`.
///
/// Velocity-velocity couplings are computed by sparse solves. Couplings
/// with the retained pressure `p_α` use the gradient identity
/// `A_αα⁻¹ A_{α,p_α} = −(0, 1)` on the interior pressures, which gives
/// `S[x, p_α] = A[x, p_α] + Σ_{p ∈ α} A[x, p]` exactly and keeps the
/// divergence the transpose of the gradient. When the identity does not
/// hold (non-saddle input) every coupling is computed numerically.
pub fn eliminate_interiors(
    a: &CsrMatrix<f64>,
    kinds: &[VarKind],
    c: &NodeClassification,
    level: usize,
) -> Result<(Vec<InteriorBlock>, SchurAssembly)> {
    let n = a.nrows();
    let at = a.transpose();
    let mut sep_pos = vec![NONE; n];
    for (q, &x) in c.separators.iter().enumerate() {
        sep_pos[x] = q;
    }
    let subs: Vec<usize> = (0..c.num_subdomains())
        .filter(|&s| !c.interiors[s].is_empty())
        .collect();

    let results: Vec<Result<InteriorResult>> = subs
        .par_iter()
        .map_init(
            || vec![NONE; n],
            |local, &s| {
                let out = eliminate_one(a, &at, kinds, c, s, &sep_pos, local, level);
                for &x in &c.interiors[s] {
                    local[x] = NONE;
                }
                out
            },
        )
        .collect();

    let ns = c.separators.len();
    let mut coo = CooMatrix::new(ns, ns);
    for &x in &c.separators {
        let (cs, vs) = a.row(x);
        for (&y, &v) in cs.iter().zip(vs) {
            if sep_pos[y] != NONE {
                coo.push(sep_pos[x], sep_pos[y], v);
            }
        }
    }
    let mut blocks = Vec::with_capacity(results.len());
    let mut fallbacks = 0;
    for r in results {
        let (block, entries, numeric) = r?;
        fallbacks += numeric as usize;
        for (i, j, v) in entries {
            coo.push(i, j, v);
        }
        blocks.push(block);
    }
    let matrix = coo.to_csr().prune(SCHUR_PRUNE);
    Ok((
        blocks,
        SchurAssembly {
            matrix,
            numeric_fallbacks: fallbacks,
        },
    ))
}

#[allow(clippy::too_many_arguments)]
fn eliminate_one(
    a: &CsrMatrix<f64>,
    at: &CsrMatrix<f64>,
    kinds: &[VarKind],
    c: &NodeClassification,
    s: usize,
    sep_pos: &[usize],
    local: &mut [usize],
    level: usize,
) -> Result<InteriorResult> {
    let ids = &c.interiors[s];
    for (k, &x) in ids.iter().enumerate() {
        local[x] = k;
    }
    let a_ii = a.submatrix_mapped(ids, local, ids.len());
    let lu = SparseLu::factor(&a_ii, &LuOptions::default()).map_err(|source| {
        PrecondError::SingularInterior {
            level,
            subdomain: s,
            source,
        }
    })?;

    // separators coupled to this interior through A_IS (columns) or A_SI (rows)
    let mut cols: Vec<usize> = ids
        .iter()
        .flat_map(|&x| a.row(x).0)
        .copied()
        .filter(|&y| sep_pos[y] != NONE)
        .collect();
    cols.sort_unstable();
    cols.dedup();
    let mut rows: Vec<usize> = ids
        .iter()
        .flat_map(|&x| at.row(x).0)
        .copied()
        .filter(|&y| sep_pos[y] != NONE)
        .collect();
    rows.sort_unstable();
    rows.dedup();

    let is_p = |x: usize| kinds[x] == VarKind::P;
    let closed = closed_form_applies(a, at, kinds, ids, local, c.retained[s], &rows, &cols);
    let mut entries = Vec::new();
    let (num_rows, num_cols): (Vec<usize>, Vec<usize>) = if closed {
        (
            rows.iter().copied().filter(|&x| !is_p(x)).collect(),
            cols.iter().copied().filter(|&x| !is_p(x)).collect(),
        )
    } else {
        (rows.clone(), cols.clone())
    };

    // A_SI restricted to the numeric rows, in local interior numbering
    let a_si: Vec<Vec<(usize, f64)>> = num_rows
        .iter()
        .map(|&r| {
            let (cs, vs) = a.row(r);
            cs.iter()
                .zip(vs)
                .filter(|&(&y, _)| local[y] != NONE)
                .map(|(&y, &v)| (local[y], v))
                .collect()
        })
        .collect();
    let ni = ids.len();
    let mut x = vec![0.0; ni];
    let mut work = vec![0.0; ni];
    for &col in &num_cols {
        x.iter_mut().for_each(|v| *v = 0.0);
        let (rs, vs) = at.row(col);
        for (&r, &v) in rs.iter().zip(vs) {
            if local[r] != NONE {
                x[local[r]] = v;
            }
        }
        lu.solve_with(&mut x, &mut work);
        for (&r, row) in num_rows.iter().zip(&a_si) {
            if row.is_empty() {
                continue;
            }
            let acc: f64 = row.iter().map(|&(k, v)| v * x[k]).sum();
            entries.push((sep_pos[r], sep_pos[col], -acc));
        }
    }

    if closed {
        if let Some(p) = c.retained[s] {
            let pq = sep_pos[p];
            let interior_p = |y: usize| is_p(y) && local[y] != NONE;
            let mut touched: Vec<usize> = rows
                .iter()
                .chain(&cols)
                .copied()
                .filter(|&x| !is_p(x))
                .collect();
            touched.sort_unstable();
            touched.dedup();
            for &xv in &touched {
                // same summation order on both sides keeps the duality bitwise
                let (cs, vs) = a.row(xv);
                let mut terms = cs
                    .iter()
                    .zip(vs)
                    .filter(|&(&y, _)| interior_p(y))
                    .peekable();
                if terms.peek().is_some() {
                    let sum: f64 = terms.fold(0.0, |acc, (_, &v)| acc + v);
                    entries.push((sep_pos[xv], pq, sum));
                }
                let (rs, vs) = at.row(xv);
                let mut terms = rs
                    .iter()
                    .zip(vs)
                    .filter(|&(&y, _)| interior_p(y))
                    .peekable();
                if terms.peek().is_some() {
                    let sum: f64 = terms.fold(0.0, |acc, (_, &v)| acc + v);
                    entries.push((pq, sep_pos[xv], sum));
                }
            }
        }
    }
    Ok((
        InteriorBlock {
            subdomain: s,
            ids: ids.clone(),
            lu,
        },
        entries,
        !closed,
    ))
}

/// Checks the saddle-point identities the closed-form pressure couplings
/// rely on: the only separator pressure touching the interior is the
/// retained one, interior pressures do not couple to pressures, and every
/// interior velocity has gradient and divergence entries summing to zero.
#[allow(clippy::too_many_arguments)]
fn closed_form_applies(
    a: &CsrMatrix<f64>,
    at: &CsrMatrix<f64>,
    kinds: &[VarKind],
    ids: &[usize],
    local: &[usize],
    retained: Option<usize>,
    rows: &[usize],
    cols: &[usize],
) -> bool {
    let is_p = |x: usize| kinds[x] == VarKind::P;
    if rows
        .iter()
        .chain(cols)
        .any(|&x| is_p(x) && Some(x) != retained)
    {
        return false;
    }
    let balanced = |cs: &[usize], vs: &[f64]| -> bool {
        let mut sum = 0.0;
        let mut mag = 0.0;
        for (&y, &v) in cs.iter().zip(vs) {
            if is_p(y) {
                if local[y] == NONE && Some(y) != retained {
                    return false;
                }
                sum += v;
                mag += v.abs();
            }
        }
        sum.abs() <= STRUCTURE_TOL * mag
    };
    for &x in ids {
        if is_p(x) {
            if a.row(x).0.iter().any(|&y| is_p(y)) {
                return false;
            }
        } else if !balanced(a.row(x).0, a.row(x).1) || !balanced(at.row(x).0, at.row(x).1) {
            return false;
        }
    }
    true
}

/// Separator nodes reduced by one reflection. Pressures and singleton
/// chunks carry no reflection.
#[derive(Clone, Debug)]
pub struct ReductionGroup {
    /// Source separator group id.
    pub group: usize,
    pub kind: VarKind,
    /// Positions in the separator list, increasing. The first is the
    /// retained (Σ) node.
    pub members: Vec<usize>,
    pub householder: Option<Householder>,
}

impl ReductionGroup {
    pub fn sigma(&self) -> usize {
        self.members[0]
    }

    /// Applies the group's reflection to the gathered vector.
    pub fn reflect(&self, x: &mut [f64]) {
        if let Some(h) = &self.householder {
            h.apply(x);
        }
    }

    fn first_row(&self) -> Vec<f64> {
        match &self.householder {
            Some(h) => h.first_row(),
            None => vec![1.0],
        }
    }
}

/// Splits every velocity group into `min(k, |g|)` contiguous chunks and
/// builds a reflection from the test vector on each.
pub fn reduction_groups(
    c: &NodeClassification,
    t: &[f64],
    retain: Retain,
) -> Result<Vec<ReductionGroup>> {
    let mut pos = std::collections::HashMap::with_capacity(c.separators.len());
    for (q, &x) in c.separators.iter().enumerate() {
        pos.insert(x, q);
    }
    let mut out = Vec::new();
    for g in &c.groups {
        let members: Vec<usize> = g.members.iter().map(|x| pos[x]).collect();
        if g.kind == VarKind::P {
            for &m in &members {
                out.push(ReductionGroup {
                    group: g.id,
                    kind: g.kind,
                    members: vec![m],
                    householder: None,
                });
            }
            continue;
        }
        let m = members.len();
        let chunks = match retain {
            Retain::All => m,
            Retain::K(k) => k.clamp(1, m),
        };
        let (base, extra) = (m / chunks, m % chunks);
        let mut start = 0;
        for ch in 0..chunks {
            let len = base + usize::from(ch < extra);
            let part = members[start..start + len].to_vec();
            start += len;
            let tv: Vec<f64> = part.iter().map(|&q| t[c.separators[q]]).collect();
            let h = Householder::new(&tv)
                .map_err(|_| PrecondError::DegenerateTestVector { group: g.id })?;
            out.push(ReductionGroup {
                group: g.id,
                kind: g.kind,
                members: part,
                householder: Some(h),
            });
        }
    }
    Ok(out)
}

/// Result of transforming and dropping the Schur complement.
#[derive(Clone, Debug)]
pub struct Transformed {
    /// Dense factors of the non-Σ diagonal block of each group.
    pub blocks: Vec<Option<DenseLu<f64>>>,
    /// Σ positions (one per group) in group order.
    pub sigma: Vec<usize>,
    /// `(H S H)[Σ, Σ]`
    pub s_sigma: CsrMatrix<f64>,
    /// Test vector on the Σ nodes after the transformation.
    pub t_sigma: Vec<f64>,
}

/// Applies `H S H` group-block-wise, keeps the Σ-Σ block and the non-Σ
/// diagonal blocks of every group, and drops all other couplings.
pub fn transform_and_drop(
    s: &CsrMatrix<f64>,
    groups: &[ReductionGroup],
    t_sep: &[f64],
) -> Result<Transformed> {
    let ns = s.nrows();
    let mut group_of = vec![NONE; ns];
    let mut slot = vec![0usize; ns];
    for (g, gr) in groups.iter().enumerate() {
        for (k, &q) in gr.members.iter().enumerate() {
            group_of[q] = g;
            slot[q] = k;
        }
    }
    let rows: Vec<Vec<f64>> = groups.iter().map(ReductionGroup::first_row).collect();

    // Σ rows: R_g = r_gᵀ S[g, :], then ST[σ_g, σ_h] = R_g[h] · r_h
    let sigma_rows: Vec<Vec<(usize, f64)>> = groups
        .par_iter()
        .enumerate()
        .map_init(
            || (vec![0.0; ns], vec![false; ns]),
            |(acc, mark), (g, gr)| {
                let mut touched = Vec::new();
                for (k, &y) in gr.members.iter().enumerate() {
                    let w = rows[g][k];
                    let (cs, vs) = s.row(y);
                    for (&q, &v) in cs.iter().zip(vs) {
                        if !mark[q] {
                            mark[q] = true;
                            touched.push(q);
                        }
                        acc[q] += w * v;
                    }
                }
                touched.sort_unstable();
                let mut terms: Vec<(usize, f64)> = touched
                    .iter()
                    .map(|&q| {
                        let h = group_of[q];
                        let term = acc[q] * rows[h][slot[q]];
                        acc[q] = 0.0;
                        mark[q] = false;
                        (h, term)
                    })
                    .collect();
                // stable: terms of one group stay in member order, so both
                // sides of a velocity-pressure pair sum in the same order
                terms.sort_by_key(|e| e.0);
                let mut out: Vec<(usize, f64)> = Vec::new();
                for (h, v) in terms {
                    match out.last_mut() {
                        Some(last) if last.0 == h => last.1 += v,
                        _ => out.push((h, v)),
                    }
                }
                out
            },
        )
        .collect();

    let ng = groups.len();
    let mut coo = CooMatrix::new(ng, ng);
    for (g, row) in sigma_rows.iter().enumerate() {
        for &(h, v) in row {
            if v.abs() >= SCHUR_PRUNE {
                coo.push(g, h, v);
            }
        }
    }
    let s_sigma = coo.to_csr();

    let blocks: Vec<Option<DenseLu<f64>>> = groups
        .par_iter()
        .enumerate()
        .map(|(g, gr)| non_sigma_block(s, gr).map_err(|_| PrecondError::SingularBlock { group: g }))
        .collect::<Result<_>>()?;

    let t_sigma = groups
        .iter()
        .map(|gr| match &gr.householder {
            Some(h) => {
                let tv: Vec<f64> = gr.members.iter().map(|&q| t_sep[q]).collect();
                h.image(&tv)
            }
            None => 0.0,
        })
        .collect();
    let sigma = groups.iter().map(ReductionGroup::sigma).collect();
    Ok(Transformed {
        blocks,
        sigma,
        s_sigma,
        t_sigma,
    })
}

/// Dense LU of `(H S_gg H)` without its first row and column.
fn non_sigma_block(
    s: &CsrMatrix<f64>,
    gr: &ReductionGroup,
) -> std::result::Result<Option<DenseLu<f64>>, ()> {
    let m = gr.members.len();
    if m == 1 {
        return Ok(None);
    }
    let h = gr
        .householder
        .as_ref()
        .expect("multi-node groups carry a reflection");
    let mut sgg = DenseMatrix::zeros(m, m);
    for (i, &y) in gr.members.iter().enumerate() {
        let (cs, vs) = s.row(y);
        for (&q, &v) in cs.iter().zip(vs) {
            if let Ok(j) = gr.members.binary_search(&q) {
                sgg[(i, j)] = v;
            }
        }
    }
    let hm = h.matrix();
    let full = hm
        .matmul(&sgg)
        .and_then(|t| t.matmul(&hm))
        .map_err(|_| ())?;
    let mut b = DenseMatrix::zeros(m - 1, m - 1);
    for i in 1..m {
        for j in 1..m {
            b[(i - 1, j - 1)] = full[(i, j)];
        }
    }
    DenseLu::factor(&b, BLOCK_PIVOT_TOL)
        .map(Some)
        .map_err(|_| ())
}
