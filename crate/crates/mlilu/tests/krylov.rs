mod common;

use mlilu::discretize::{Discretization, ProblemSpec};
use mlilu::grid::StaggeredGrid;
use mlilu::krylov::{gmres, GmresConfig, Identity, KrylovError};
use mlilu::linalg::{norm2, CooMatrix, CsrMatrix};
use mlilu::precond::{MultilevelPreconditioner, PrecondConfig};
use proptest::prelude::*;

use common::*;

/// 5-point Laplacian on an `n × n` grid (SPD).
fn laplacian_2d(n: usize) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let r = i * n + j;
            coo.push(r, r, 4.0);
            for (di, dj) in [(0isize, 1isize), (0, -1), (1, 0), (-1, 0)] {
                let (a, b) = (i as isize + di, j as isize + dj);
                if (0..n as isize).contains(&a) && (0..n as isize).contains(&b) {
                    coo.push(r, a as usize * n + b as usize, -1.0);
                }
            }
        }
    }
    coo.to_csr()
}

/// Minimal residuals over the Krylov spaces `K_k(A, b)`, `k = 1..=steps`,
/// from a dense twice-orthogonalized basis and normal equations.
fn least_squares_oracle(a: &CsrMatrix<f64>, b: &[f64], steps: usize) -> Vec<f64> {
    let bn = norm2(b);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut next = b.to_vec();
    let mut out = Vec::new();
    for _ in 0..steps {
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = next.iter().zip(q).map(|(x, y)| x * y).sum();
                next.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nn = norm2(&next);
        basis.push(next.iter().map(|x| x / nn).collect());
        let aq: Vec<Vec<f64>> = basis.iter().map(|q| a.matvec(q).unwrap()).collect();
        let k = basis.len();
        let gram: Dense = (0..k)
            .map(|i| (0..k).map(|j| dot(&aq[i], &aq[j])).collect())
            .collect();
        let rhs: Vec<f64> = (0..k).map(|i| dot(&aq[i], b)).collect();
        let y = gauss_solve_vec(&gram, &rhs);
        let mut r = b.to_vec();
        for (col, yi) in aq.iter().zip(&y) {
            r.iter_mut().zip(col).for_each(|(x, c)| *x -= yi * c);
        }
        out.push(norm2(&r) / bn);
        next = a.matvec(basis.last().unwrap()).unwrap();
    }
    out
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[test]
fn unpreconditioned_history_matches_least_squares_oracle() {
    let a = laplacian_2d(12);
    let b: Vec<f64> = (0..a.nrows())
        .map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0)
        .collect();
    let cfg = GmresConfig {
        max_iter: 20,
        tol: 1e-14,
        ..GmresConfig::default()
    };
    let (_, st) = gmres(&a, &Identity, &b, None, &cfg).unwrap();
    assert_eq!(st.iterations, 20);
    let oracle = least_squares_oracle(&a, &b, 20);
    for (k, (h, o)) in st.history[1..].iter().zip(&oracle).enumerate() {
        assert!((h - o).abs() < 1e-10, "step {}: {h:e} vs {o:e}", k + 1);
    }
}

#[test]
fn reported_residual_is_the_true_residual() {
    let a = laplacian_2d(10);
    let b = vec![1.0; a.nrows()];
    let (x, st) = gmres(
        &a,
        &Identity,
        &b,
        None,
        &GmresConfig {
            restart: 7,
            ..GmresConfig::default()
        },
    )
    .unwrap();
    assert!(st.converged);
    let ax = a.matvec(&x).unwrap();
    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    assert_eq!(st.final_residual, norm2(&r) / norm2(&b));
    assert!(st.final_residual <= 1e-8);
}

#[test]
fn restart_longer_than_the_run_changes_nothing() {
    let g = StaggeredGrid::cube(2, 16).unwrap();
    let d = Discretization::new(ProblemSpec::stokes(g)).unwrap();
    let a = d.linear_operator();
    let m = MultilevelPreconditioner::new(&a, &g, &PrecondConfig::skew(2, 4, 2)).unwrap();
    let run = |restart| {
        gmres(
            &a.matrix,
            &m,
            &d.rhs(),
            None,
            &GmresConfig {
                restart,
                ..GmresConfig::default()
            },
        )
        .unwrap()
    };
    let (x1, s1) = run(250);
    let (x2, s2) = run(1000);
    assert_eq!(s1.restarts, 0);
    assert_eq!(x1, x2);
    assert_eq!(s1.history, s2.history);
    assert_eq!(s1.iterations, s2.iterations);
}

#[test]
fn non_convergence_is_reported_with_history() {
    let a = laplacian_2d(16);
    let b = vec![1.0; a.nrows()];
    let cfg = GmresConfig {
        restart: 5,
        max_iter: 12,
        tol: 1e-12,
    };
    let (_, st) = gmres(&a, &Identity, &b, None, &cfg).unwrap();
    assert!(!st.converged);
    assert_eq!(st.iterations, 12);
    assert_eq!(st.history.len(), 13);
    assert_eq!(st.restarts, 2);
}

#[test]
fn dimension_mismatch_is_an_error() {
    let a = laplacian_2d(3);
    assert!(matches!(
        gmres(&a, &Identity, &[1.0; 4], None, &GmresConfig::default()),
        Err(KrylovError::DimensionMismatch { .. })
    ));
}

#[test]
fn warm_start_at_the_solution_needs_no_steps() {
    let a = laplacian_2d(4);
    let x: Vec<f64> = (0..16).map(|i| i as f64).collect();
    let b = a.matvec(&x).unwrap();
    let (y, st) = gmres(&a, &Identity, &b, Some(&x), &GmresConfig::default()).unwrap();
    assert_eq!(st.iterations, 0);
    assert_eq!(y, x);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn history_does_not_increase_within_a_cycle(restart in 2usize..12, seed in 0u64..500) {
        let a = laplacian_2d(9);
        let b: Vec<f64> = (0..a.nrows()).map(|i| (((i as u64 + 1) * (seed + 3)) % 17) as f64 - 8.0).collect();
        prop_assume!(norm2(&b) > 0.0);
        let cfg = GmresConfig { restart, tol: 1e-10, max_iter: 400 };
        let (_, st) = gmres(&a, &Identity, &b, None, &cfg).unwrap();
        prop_assert!(st.converged);
        for i in 0..st.history.len() - 1 {
            // the entry closing a cycle is replaced by the true residual
            if (i + 1) % restart == 0 {
                continue;
            }
            prop_assert!(st.history[i + 1] <= st.history[i] * (1.0 + 1e-12));
        }
    }
}
