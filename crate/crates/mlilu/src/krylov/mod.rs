//! Restarted GMRES with right preconditioning.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::linalg::{dot, norm2, CsrMatrix, Scalar};
use crate::precond::MultilevelPreconditioner;

/// Loss of orthogonality that triggers a second Gram–Schmidt pass.
pub const REORTH_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrylovError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid GMRES configuration: {0}")]
    BadConfig(String),
}

pub type Result<T> = std::result::Result<T, KrylovError>;

pub trait LinearOperator<T> {
    fn dim(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[T], y: &mut [T]);
}

impl<T: Scalar> LinearOperator<T> for CsrMatrix<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.matvec_into(x, y);
    }
}

pub trait Preconditioner<T> {
    /// `z = M r`
    fn apply(&self, r: &[T], z: &mut [T]);
}

/// `M = I`
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl<T: Copy> Preconditioner<T> for Identity {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.copy_from_slice(r);
    }
}

impl Preconditioner<f64> for MultilevelPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        self.apply_in_place(z);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresConfig {
    /// Restart length.
    pub restart: usize,
    /// Relative residual tolerance `‖b − A x‖ / ‖b‖`.
    pub tol: f64,
    /// Cap on the total number of Arnoldi steps.
    pub max_iter: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            restart: 250,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restart == 0 {
            return Err(KrylovError::BadConfig(
                "restart length must be at least 1".into(),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(KrylovError::BadConfig(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseTimes {
    pub operator: Duration,
    pub preconditioner: Duration,
    pub orthogonalization: Duration,
    pub total: Duration,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    /// Arnoldi steps summed over all cycles.
    pub iterations: usize,
    pub restarts: usize,
    /// Relative residual before the first step and after every step
    /// (Arnoldi estimate, true residual at each cycle start).
    pub history: Vec<f64>,
    pub converged: bool,
    /// Arnoldi produced a vanishing new direction.
    pub breakdown: bool,
    /// Recomputed `‖b − A x‖ / ‖b‖` of the returned solution.
    pub final_residual: f64,
    pub reorthogonalizations: usize,
    pub times: PhaseTimes,
}

/// Solves `A x = b` from `x0` (zero if `None`) with `A M y = b`, `x = M y`.
pub fn gmres<T, A, M>(
    a: &A,
    m: &M,
    b: &[T],
    x0: Option<&[T]>,
    cfg: &GmresConfig,
) -> Result<(Vec<T>, SolveStats)>
where
    T: Scalar,
    A: LinearOperator<T> + ?Sized,
    M: Preconditioner<T> + ?Sized,
{
    cfg.validate()?;
    let n = a.dim();
    if b.len() != n {
        return Err(KrylovError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let mut x = match x0 {
        Some(x0) if x0.len() != n => {
            return Err(KrylovError::DimensionMismatch {
                expected: n,
                found: x0.len(),
            })
        }
        Some(x0) => x0.to_vec(),
        None => vec![T::zero(); n],
    };
    let start = Instant::now();
    let mut stats = SolveStats::default();
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        stats.converged = true;
        stats.history.push(0.0);
        stats.times.total = start.elapsed();
        return Ok((x, stats));
    }
    let tol = T::of(cfg.tol);
    let mdim = cfg.restart.min(n.max(1));
    let mut v: Vec<Vec<T>> = Vec::with_capacity(mdim + 1);
    let mut z = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    // Hessenberg columns, Givens rotations, rotated right-hand side
    let mut h: Vec<Vec<T>> = Vec::with_capacity(mdim);
    let mut cs: Vec<T> = Vec::with_capacity(mdim);
    let mut sn: Vec<T> = Vec::with_capacity(mdim);
    let mut g: Vec<T> = Vec::with_capacity(mdim + 1);

    let mut r = residual(a, b, &x, &mut stats.times);
    let mut rel = norm2(&r) / bnorm;
    stats.history.push(rel.to_f64().unwrap_or(f64::NAN));

    loop {
        if rel <= tol || stats.iterations >= cfg.max_iter || stats.breakdown {
            break;
        }
        let beta = norm2(&r);
        v.clear();
        h.clear();
        cs.clear();
        sn.clear();
        g.clear();
        v.push(r.iter().map(|&ri| ri / beta).collect());
        g.push(beta);
        let mut k = 0;
        while k < mdim && stats.iterations < cfg.max_iter {
            let t = Instant::now();
            m.apply(&v[k], &mut z);
            stats.times.preconditioner += t.elapsed();
            let t = Instant::now();
            a.apply(&z, &mut w);
            stats.times.operator += t.elapsed();

            let t = Instant::now();
            let mut col = vec![T::zero(); k + 2];
            for (i, vi) in v.iter().enumerate() {
                let c = dot(&w, vi);
                col[i] = c;
                sub_scaled(&mut w, c, vi);
            }
            let mut wn = norm2(&w);
            if wn > T::zero() {
                let lost = v.iter().map(|vi| dot(&w, vi).abs()).fold(T::zero(), T::max) / wn;
                if lost > T::of(REORTH_THRESHOLD) {
                    stats.reorthogonalizations += 1;
                    for (i, vi) in v.iter().enumerate() {
                        let c = dot(&w, vi);
                        col[i] += c;
                        sub_scaled(&mut w, c, vi);
                    }
                    wn = norm2(&w);
                }
            }
            col[k + 1] = wn;
            stats.times.orthogonalization += t.elapsed();

            for i in 0..k {
                let (a0, a1) = (col[i], col[i + 1]);
                col[i] = cs[i] * a0 + sn[i] * a1;
                col[i + 1] = -sn[i] * a0 + cs[i] * a1;
            }
            let (c, s) = givens(col[k], col[k + 1]);
            col[k] = c * col[k] + s * col[k + 1];
            col[k + 1] = T::zero();
            cs.push(c);
            sn.push(s);
            let gk = g[k];
            g[k] = c * gk;
            g.push(-s * gk);
            h.push(col);
            stats.iterations += 1;
            k += 1;
            rel = g[k].abs() / bnorm;
            stats.history.push(rel.to_f64().unwrap_or(f64::NAN));

            let tiny = T::epsilon() * T::of(10.0) * beta;
            if wn <= tiny {
                stats.breakdown = true;
                break;
            }
            if rel <= tol {
                break;
            }
            v.push(w.iter().map(|&wi| wi / wn).collect());
        }

        // y = R⁻¹ g, x += M V y
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut u = vec![T::zero(); n];
        for (vi, &yi) in v.iter().zip(&y) {
            for (ue, &ve) in u.iter_mut().zip(vi) {
                *ue += yi * ve;
            }
        }
        let t = Instant::now();
        m.apply(&u, &mut z);
        stats.times.preconditioner += t.elapsed();
        for (xe, &ze) in x.iter_mut().zip(&z) {
            *xe += ze;
        }
        r = residual(a, b, &x, &mut stats.times);
        rel = norm2(&r) / bnorm;
        if rel > tol && stats.iterations < cfg.max_iter && !stats.breakdown {
            stats.restarts += 1;
            // the next cycle starts from the true residual
            if let Some(last) = stats.history.last_mut() {
                *last = rel.to_f64().unwrap_or(f64::NAN);
            }
        }
    }
    stats.final_residual = rel.to_f64().unwrap_or(f64::NAN);
    stats.converged = rel <= tol;
    stats.times.total = start.elapsed();
    Ok((x, stats))
}

fn residual<T: Scalar, A: LinearOperator<T> + ?Sized>(
    a: &A,
    b: &[T],
    x: &[T],
    times: &mut PhaseTimes,
) -> Vec<T> {
    let t = Instant::now();
    let mut r = vec![T::zero(); b.len()];
    a.apply(x, &mut r);
    times.operator += t.elapsed();
    r.iter_mut().zip(b).for_each(|(ri, &bi)| *ri = bi - *ri);
    r
}

fn sub_scaled<T: Scalar>(w: &mut [T], c: T, v: &[T]) {
    for (we, &ve) in w.iter_mut().zip(v) {
        *we -= c * ve;
    }
}

/// Rotation `(c, s)` with `[c s; −s c] (a, b)ᵀ = (r, 0)ᵀ`.
fn givens<T: Scalar>(a: T, b: T) -> (T, T) {
    if b == T::zero() {
        (T::one(), T::zero())
    } else if a == T::zero() {
        (T::zero(), T::one())
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}
