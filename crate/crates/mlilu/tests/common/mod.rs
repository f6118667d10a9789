//! Independent dense oracles shared by the integration tests.
#![allow(dead_code)]

use mlilu::linalg::CsrMatrix;

pub type Dense = Vec<Vec<f64>>;

pub fn to_dense(a: &CsrMatrix<f64>) -> Dense {
    let mut d = vec![vec![0.0; a.ncols()]; a.nrows()];
    for (i, j, v) in a.iter() {
        d[i][j] += v;
    }
    d
}

/// Gaussian elimination with partial pivoting on a copy; solves `A X = B`
/// for every column of `b`.
pub fn gauss_solve(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut a = a.clone();
    let mut b = b.clone();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        let piv = a[k][k];
        assert!(piv.abs() > 1e-300, "oracle hit a singular matrix");
        for i in k + 1..n {
            let f = a[i][k] / piv;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            for j in 0..m {
                b[i][j] -= f * b[k][j];
            }
        }
    }
    let mut x = vec![vec![0.0; m]; n];
    for i in (0..n).rev() {
        for j in 0..m {
            let mut s = b[i][j];
            for k in i + 1..n {
                s -= a[i][k] * x[k][j];
            }
            x[i][j] = s / a[i][i];
        }
    }
    x
}

pub fn gauss_solve_vec(a: &Dense, b: &[f64]) -> Vec<f64> {
    let col: Dense = b.iter().map(|&v| vec![v]).collect();
    gauss_solve(a, &col).into_iter().map(|r| r[0]).collect()
}

/// `A_SS − A_SI A_II⁻¹ A_IS` by dense elimination.
pub fn dense_schur(a: &Dense, interior: &[usize], sep: &[usize]) -> Dense {
    let pick = |rows: &[usize], cols: &[usize]| -> Dense {
        rows.iter()
            .map(|&r| cols.iter().map(|&c| a[r][c]).collect())
            .collect()
    };
    let a_ii = pick(interior, interior);
    let a_is = pick(interior, sep);
    let a_si = pick(sep, interior);
    let mut s = pick(sep, sep);
    if interior.is_empty() {
        return s;
    }
    let y = gauss_solve(&a_ii, &a_is);
    for (i, row) in s.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v -= (0..interior.len())
                .map(|k| a_si[i][k] * y[k][j])
                .sum::<f64>();
        }
    }
    s
}

pub fn max_abs(d: &Dense) -> f64 {
    d.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn max_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

pub fn rel_err(x: &[f64], y: &[f64]) -> f64 {
    let d = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let n = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    d / n.max(f64::MIN_POSITIVE)
}
