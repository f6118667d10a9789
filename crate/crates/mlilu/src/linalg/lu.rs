use super::{CooMatrix, CsrMatrix, LinalgError, Ordering, Result, Scalar};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LuOptions {
    pub ordering: Ordering,
    /// A column is singular when its best pivot is at most this fraction of
    /// the largest magnitude in the original column.
    pub pivot_tol: f64,
    /// The diagonal entry is kept as pivot when it is at least this fraction
    /// of the largest candidate, preserving the fill-reducing ordering.
    pub diag_preference: f64,
}

impl Default for LuOptions {
    fn default() -> Self {
        Self {
            ordering: Ordering::MinimumDegree,
            pivot_tol: 1e-12,
            diag_preference: 0.1,
        }
    }
}

/// Sparse LU factorization `P A Q = L U` computed column by column
/// (left-looking, sparse triangular solves with a depth-first reach).
#[derive(Clone, Debug)]
pub struct SparseLu<T> {
    n: usize,
    /// Column `k` of the factors is column `q[k]` of `A`.
    q: Vec<usize>,
    /// Row `i` of `A` is pivot row `pinv[i]`.
    pinv: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<T>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<T>,
    udiag: Vec<T>,
}

impl<T: Scalar> SparseLu<T> {
    pub fn factor(a: &CsrMatrix<T>, opts: &LuOptions) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LinalgError::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let q = opts.ordering.permutation(a);
        let cols = a.transpose(); // row j of `cols` is column j of `a`
        let tol = T::of(opts.pivot_tol);
        let pref = T::of(opts.diag_preference);

        let mut pinv = vec![NONE; n];
        let mut lp = Vec::with_capacity(n + 1);
        let mut li: Vec<usize> = Vec::new();
        let mut lx: Vec<T> = Vec::new();
        let mut up = Vec::with_capacity(n + 1);
        let mut ui: Vec<usize> = Vec::new();
        let mut ux: Vec<T> = Vec::new();
        let mut udiag = Vec::with_capacity(n);
        lp.push(0);
        up.push(0);

        let mut x = vec![T::zero(); n];
        let mut xi = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut mark = vec![NONE; n];

        for k in 0..n {
            let col = q[k];
            let (rows, vals) = cols.row(col);
            let colmax = super::norm_max(vals);

            // reach of the column pattern in the graph of L, in topological order
            let mut top = n;
            for &r in rows {
                if mark[r] == k {
                    continue;
                }
                let mut head = 0;
                stack[0] = r;
                while let Some(&j) = stack[..=head].last() {
                    let jc = pinv[j];
                    if mark[j] != k {
                        mark[j] = k;
                        pstack[head] = if jc == NONE { 0 } else { lp[jc] + 1 };
                    }
                    let mut done = true;
                    if jc != NONE {
                        let end = lp[jc + 1];
                        while pstack[head] < end {
                            let child = li[pstack[head]];
                            pstack[head] += 1;
                            if mark[child] != k {
                                head += 1;
                                stack[head] = child;
                                done = false;
                                break;
                            }
                        }
                    }
                    if done {
                        top -= 1;
                        xi[top] = j;
                        if head == 0 {
                            break;
                        }
                        head -= 1;
                    }
                }
            }

            for (&r, &v) in rows.iter().zip(vals) {
                x[r] = v;
            }
            for px in top..n {
                let j = xi[px];
                let jc = pinv[j];
                if jc == NONE {
                    continue;
                }
                let xj = x[j];
                if xj == T::zero() {
                    continue;
                }
                for p in lp[jc] + 1..lp[jc + 1] {
                    x[li[p]] -= lx[p] * xj;
                }
            }

            let mut ipiv = NONE;
            let mut best = T::zero();
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    let t = x[i].abs();
                    if ipiv == NONE || t > best {
                        best = t;
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == NONE || colmax == T::zero() || best <= tol * colmax {
                return Err(LinalgError::Singular {
                    column: col,
                    pivot: best.to_f64().unwrap_or(0.0),
                });
            }
            if pinv[col] == NONE && mark[col] == k && x[col].abs() >= pref * best {
                ipiv = col;
            }
            let pivot = x[ipiv];
            udiag.push(pivot);
            up.push(ui.len());
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(T::one());
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = T::zero();
            }
            lp.push(li.len());
        }
        for r in li.iter_mut() {
            *r = pinv[*r];
        }
        Ok(Self {
            n,
            q,
            pinv,
            lp,
            li,
            lx,
            up,
            ui,
            ux,
            udiag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of L (including the unit diagonal) and U.
    pub fn nnz(&self) -> usize {
        self.li.len() + self.ui.len() + self.udiag.len()
    }

    /// Entries created by elimination beyond those of `A`.
    pub fn fill_in(&self, a: &CsrMatrix<T>) -> usize {
        // L's unit diagonal is implicit in the factor, so it is not fill
        (self.nnz() - self.n).saturating_sub(a.nnz())
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: b.len(),
            });
        }
        let mut x = b.to_vec();
        let mut work = vec![T::zero(); self.n];
        self.solve_with(&mut x, &mut work);
        Ok(x)
    }

    /// Solves in place using caller-provided scratch of length `n`.
    pub fn solve_with(&self, x: &mut [T], work: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            work[self.pinv[i]] = x[i];
        }
        for k in 0..n {
            let yk = work[k];
            if yk != T::zero() {
                for p in self.lp[k] + 1..self.lp[k + 1] {
                    work[self.li[p]] -= self.lx[p] * yk;
                }
            }
        }
        for k in (0..n).rev() {
            let yk = work[k] / self.udiag[k];
            work[k] = yk;
            if yk != T::zero() {
                for p in self.up[k]..self.up[k + 1] {
                    work[self.ui[p]] -= self.ux[p] * yk;
                }
            }
        }
        for k in 0..n {
            x[self.q[k]] = work[k];
        }
    }

    /// Solves `Aᵀ x = b` in place.
    pub fn solve_transpose_with(&self, x: &mut [T], work: &mut [T]) {
        let n = self.n;
        for k in 0..n {
            work[k] = x[self.q[k]];
        }
        // Uᵀ z = b
        for k in 0..n {
            let mut acc = work[k];
            for p in self.up[k]..self.up[k + 1] {
                acc -= self.ux[p] * work[self.ui[p]];
            }
            work[k] = acc / self.udiag[k];
        }
        // Lᵀ y = z
        for k in (0..n).rev() {
            let mut acc = work[k];
            for p in self.lp[k] + 1..self.lp[k + 1] {
                acc -= self.lx[p] * work[self.li[p]];
            }
            work[k] = acc;
        }
        for i in 0..n {
            x[i] = work[self.pinv[i]];
        }
    }

    /// Row permutation: pivot row `k` is row `row_perm()[k]` of `A`.
    pub fn row_perm(&self) -> Vec<usize> {
        let mut p = vec![0; self.n];
        for (i, &k) in self.pinv.iter().enumerate() {
            p[k] = i;
        }
        p
    }

    /// Column permutation: factor column `k` is column `col_perm()[k]` of `A`.
    pub fn col_perm(&self) -> &[usize] {
        &self.q
    }

    /// Strictly lower factor (unit diagonal not stored), in pivot numbering.
    pub fn lower(&self) -> CsrMatrix<T> {
        let mut coo = CooMatrix::new(self.n, self.n);
        for k in 0..self.n {
            for p in self.lp[k] + 1..self.lp[k + 1] {
                coo.push(self.li[p], k, self.lx[p]);
            }
        }
        coo.to_csr()
    }

    /// Upper factor including the diagonal, in pivot numbering.
    pub fn upper(&self) -> CsrMatrix<T> {
        let mut coo = CooMatrix::new(self.n, self.n);
        for k in 0..self.n {
            for p in self.up[k]..self.up[k + 1] {
                coo.push(self.ui[p], k, self.ux[p]);
            }
            coo.push(k, k, self.udiag[k]);
        }
        coo.to_csr()
    }
}
