use super::{PrecondError, Result};
use crate::linalg::DenseMatrix;

/// Reflection `H = I − β v vᵀ` with `β = 2 / vᵀv` that maps the test
/// vector `t` of a group onto its first member:
/// `v = t + sign(t₁) ‖t‖ e₁`, so `H t = −sign(t₁) ‖t‖ e₁`.
///
/// The sign follows `t₁` (with `sign(0) = +1`) so that `v` never cancels,
/// including single-node groups with a negative test value.
#[derive(Clone, Debug, PartialEq)]
pub struct Householder {
    v: Vec<f64>,
    beta: f64,
}

impl Householder {
    pub fn new(t: &[f64]) -> Result<Self> {
        let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        if t.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(PrecondError::DegenerateGroup);
        }
        let mut v = t.to_vec();
        v[0] += norm.copysign(sign(t[0]));
        let vv: f64 = v.iter().map(|x| x * x).sum();
        Ok(Self { v, beta: 2.0 / vv })
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn vector(&self) -> &[f64] {
        &self.v
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `x ← H x`
    pub fn apply(&self, x: &mut [f64]) {
        let s = self.beta * self.v.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
        for (xi, vi) in x.iter_mut().zip(&self.v) {
            *xi -= s * vi;
        }
    }

    /// Entry `H[i, j]`; symmetric bitwise.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let d = if i == j { 1.0 } else { 0.0 };
        d - self.beta * (self.v[i] * self.v[j])
    }

    /// First row of `H`, the combination that forms the retained node.
    pub fn first_row(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.entry(0, j)).collect()
    }

    pub fn matrix(&self) -> DenseMatrix<f64> {
        let m = self.len();
        let mut h = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                h[(i, j)] = self.entry(i, j);
            }
        }
        h
    }

    /// Value of `H t` at the first member.
    pub fn image(&self, t: &[f64]) -> f64 {
        let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        -norm.copysign(sign(t[0]))
    }
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_is_minus_one() {
        let h = Householder::new(&[1.0]).unwrap();
        assert_eq!(h.entry(0, 0), -1.0);
        let h = Householder::new(&[-3.0]).unwrap();
        assert_eq!(h.entry(0, 0), -1.0);
    }

    #[test]
    fn ones_of_four() {
        let h = Householder::new(&[1.0; 4]).unwrap();
        let mut x = vec![1.0; 4];
        h.apply(&mut x);
        let expected = [-2.0, 0.0, 0.0, 0.0];
        for (a, b) in x.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_vector_is_degenerate() {
        assert!(matches!(
            Householder::new(&[0.0, 0.0]),
            Err(PrecondError::DegenerateGroup)
        ));
    }
}
