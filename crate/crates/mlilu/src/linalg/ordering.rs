use std::collections::BTreeSet;

use super::{CsrMatrix, Scalar};

/// Column ordering applied before sparse LU.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Ordering {
    Natural,
    #[default]
    MinimumDegree,
}

impl Ordering {
    pub fn permutation<T: Scalar>(self, a: &CsrMatrix<T>) -> Vec<usize> {
        match self {
            Ordering::Natural => (0..a.ncols()).collect(),
            Ordering::MinimumDegree => minimum_degree(a),
        }
    }
}

/// Minimum-degree ordering of the pattern of `A + Aᵀ`.
///
/// Eliminated nodes are kept as elements of a quotient graph so cliques are
/// never formed explicitly; degrees are exact external degrees. Ties are
/// broken by the smaller index, which makes the result deterministic.
pub fn minimum_degree<T: Scalar>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let at = a.transpose();
    let mut var_adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut v: Vec<usize> = a
                .row(i)
                .0
                .iter()
                .chain(at.row(i).0)
                .copied()
                .filter(|&j| j != i)
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let mut elem_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut elem_vars: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut eliminated = vec![false; n];
    let mut absorbed = vec![false; n];
    let mut degree: Vec<usize> = var_adj.iter().map(Vec::len).collect();
    let mut heap: BTreeSet<(usize, usize)> = (0..n).map(|i| (degree[i], i)).collect();
    let mut mark = vec![0usize; n];
    let mut stamp = 0usize;
    let mut order = Vec::with_capacity(n);

    while let Some((_, p)) = heap.pop_first() {
        order.push(p);
        stamp += 1;
        mark[p] = stamp;
        let mut lp = Vec::new();
        for &v in &var_adj[p] {
            if !eliminated[v] && mark[v] != stamp {
                mark[v] = stamp;
                lp.push(v);
            }
        }
        for &e in &elem_adj[p] {
            if absorbed[e] {
                continue;
            }
            for &v in &elem_vars[e] {
                if !eliminated[v] && mark[v] != stamp {
                    mark[v] = stamp;
                    lp.push(v);
                }
            }
            absorbed[e] = true;
            elem_vars[e] = Vec::new();
        }
        eliminated[p] = true;
        var_adj[p] = Vec::new();
        lp.sort_unstable();
        let lp_stamp = stamp;
        for &v in &lp {
            heap.remove(&(degree[v], v));
            // edges inside the new element are implied by it
            var_adj[v].retain(|&u| mark[u] != lp_stamp && !eliminated[u]);
            elem_adj[v].retain(|&e| !absorbed[e]);
            elem_adj[v].push(p);
        }
        elem_vars[p] = lp.clone();
        for &v in &lp {
            stamp += 1;
            mark[v] = stamp;
            let mut count = 0;
            for &u in &var_adj[v] {
                if mark[u] != stamp {
                    mark[u] = stamp;
                    count += 1;
                }
            }
            for &e in &elem_adj[v] {
                for &u in &elem_vars[e] {
                    if !eliminated[u] && mark[u] != stamp {
                        mark[u] = stamp;
                        count += 1;
                    }
                }
            }
            degree[v] = count;
            heap.insert((count, v));
        }
    }
    order
}
