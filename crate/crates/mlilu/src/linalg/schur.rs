use super::{CooMatrix, CsrMatrix, LinalgError, LuOptions, Result, Scalar, SparseLu};

/// Absolute magnitude below which computed Schur entries are dropped.
pub const SCHUR_PRUNE: f64 = 1e-14;

/// `A_SS − A_SI A_II⁻¹ A_IS` for the index sets `interior` and `separator`.
pub fn schur_complement<T: Scalar>(
    a: &CsrMatrix<T>,
    interior: &[usize],
    separator: &[usize],
) -> Result<CsrMatrix<T>> {
    let a_ii = a.submatrix(interior, interior);
    let lu = SparseLu::factor(&a_ii, &LuOptions::default())?;
    schur_complement_factored(a, interior, separator, &lu)
}

/// Same as [`schur_complement`] with a factorization of `A_II` supplied.
pub fn schur_complement_factored<T: Scalar>(
    a: &CsrMatrix<T>,
    interior: &[usize],
    separator: &[usize],
    lu: &SparseLu<T>,
) -> Result<CsrMatrix<T>> {
    if lu.dim() != interior.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: interior.len(),
            found: lu.dim(),
        });
    }
    let ns = separator.len();
    let ni = interior.len();
    // columns of A_IS and A_SS are rows of the transposed blocks
    let a_is_t = a.submatrix(interior, separator).transpose();
    let a_si = a.submatrix(separator, interior);
    let a_ss_t = a.submatrix(separator, separator).transpose();

    let mut coo = CooMatrix::new(ns, ns);
    let mut x = vec![T::zero(); ni];
    let mut work = vec![T::zero(); ni];
    let mut col = vec![T::zero(); ns];
    for j in 0..ns {
        col.iter_mut().for_each(|v| *v = T::zero());
        let (rs, vs) = a_ss_t.row(j);
        for (&r, &v) in rs.iter().zip(vs) {
            col[r] = v;
        }
        let (rs, vs) = a_is_t.row(j);
        if !rs.is_empty() {
            x.iter_mut().for_each(|v| *v = T::zero());
            for (&r, &v) in rs.iter().zip(vs) {
                x[r] = v;
            }
            lu.solve_with(&mut x, &mut work);
            for (r, c) in col.iter_mut().enumerate() {
                let (cs, avs) = a_si.row(r);
                let mut acc = T::zero();
                for (&k, &v) in cs.iter().zip(avs) {
                    acc += v * x[k];
                }
                *c -= acc;
            }
        }
        for (r, &v) in col.iter().enumerate() {
            if v.abs() >= T::of(SCHUR_PRUNE) {
                coo.push(r, j, v);
            }
        }
    }
    Ok(coo.to_csr())
}
