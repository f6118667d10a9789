use mlilu::discretize::{Discretization, Linearization, ProblemSpec};
use mlilu::grid::StaggeredGrid;
use mlilu::krylov::GmresConfig;
use mlilu::linalg::norm2;
use mlilu::nonlinear::{continue_in_re, newton_solve, ContinuationRun, NewtonConfig, SetupCache};
use mlilu::precond::PrecondConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pcfg() -> PrecondConfig {
    PrecondConfig::skew(2, 4, 2)
}

#[test]
fn stokes_takes_exactly_one_step() {
    let g = StaggeredGrid::cube(2, 16).unwrap();
    let disc = Discretization::new(ProblemSpec::stokes(g)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for start in 0..3 {
        let x0: Vec<f64> = (0..disc.n())
            .map(|_| {
                if start == 0 {
                    0.0
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let out = newton_solve(
            &disc,
            &x0,
            &NewtonConfig::default(),
            &GmresConfig::default(),
            &pcfg(),
            &mut SetupCache::default(),
        )
        .unwrap();
        assert_eq!(out.steps.len(), 1);
        assert!(out.converged);
        assert!(out.final_residual() <= 1e-8 * out.initial_residual * 1.01);
    }
}

/// Converged state at `re` from a short continuation.
fn cavity_state(g: StaggeredGrid, re: f64) -> Vec<f64> {
    let spec = ProblemSpec::cavity(g, re);
    let run = continue_in_re(
        &spec,
        ContinuationRun::to(re),
        &NewtonConfig::default(),
        &GmresConfig::default(),
        &pcfg(),
    )
    .unwrap();
    assert!(run.converged());
    run.last().unwrap().outcome.x.clone()
}

#[test]
fn newton_converges_quadratically() {
    let g = StaggeredGrid::cube(2, 16).unwrap();
    let x0 = cavity_state(g, 200.0);
    let disc = Discretization::new(ProblemSpec::cavity(g, 400.0)).unwrap();
    let lin = GmresConfig {
        tol: 1e-13,
        ..GmresConfig::default()
    };
    let cfg = NewtonConfig {
        tol: 1e-13,
        ..NewtonConfig::default()
    };
    let out = newton_solve(&disc, &x0, &cfg, &lin, &pcfg(), &mut SetupCache::default()).unwrap();
    assert!(out.converged);
    let mut res = vec![out.initial_residual];
    res.extend(out.steps.iter().map(|s| s.residual));
    // steps above the round-off floor
    let usable: Vec<f64> = res.into_iter().filter(|&r| r > 1e-11).collect();
    assert!(usable.len() >= 3, "{usable:?}");
    let k = usable.len();
    for w in usable[k - 3..].windows(2) {
        let ratio = w[1] / (w[0] * w[0]);
        assert!(ratio < 10.0, "‖r_k+1‖/‖r_k‖² = {ratio} in {usable:?}");
    }
}

#[test]
fn picard_needs_more_steps_than_newton() {
    let g = StaggeredGrid::cube(2, 16).unwrap();
    let x0 = cavity_state(g, 400.0);
    let disc = Discretization::new(ProblemSpec::cavity(g, 500.0)).unwrap();
    let lin = GmresConfig::default();
    let steps = |linearization| {
        let cfg = NewtonConfig {
            linearization,
            max_steps: 60,
            ..NewtonConfig::default()
        };
        let out =
            newton_solve(&disc, &x0, &cfg, &lin, &pcfg(), &mut SetupCache::default()).unwrap();
        (out.steps.len(), out.converged)
    };
    let (newton, ok) = steps(Linearization::Newton);
    assert!(ok);
    let (picard, _) = steps(Linearization::Picard);
    assert!(picard > newton, "Picard {picard} vs Newton {newton}");
}

#[test]
fn continuation_is_deterministic_and_reuses_the_partition() {
    let g = StaggeredGrid::cube(2, 16).unwrap();
    let spec = ProblemSpec::cavity(g, 300.0);
    let go = || {
        continue_in_re(
            &spec,
            ContinuationRun::to(300.0),
            &NewtonConfig::default(),
            &GmresConfig::default(),
            &pcfg(),
        )
        .unwrap()
    };
    let (a, b) = (go(), go());
    let its = |r: &ContinuationRun| -> Vec<Vec<usize>> {
        r.steps
            .iter()
            .map(|s| {
                s.outcome
                    .steps
                    .iter()
                    .map(|t| t.linear.iterations)
                    .collect()
            })
            .collect()
    };
    assert_eq!(its(&a), its(&b));
    assert_eq!(a.last().unwrap().outcome.x, b.last().unwrap().outcome.x);
    assert_eq!(
        a.steps.iter().map(|s| s.reynolds).collect::<Vec<_>>(),
        vec![100.0, 200.0, 300.0]
    );

    let disc = Discretization::new(spec).unwrap();
    let mut cache = SetupCache::default();
    let x0 = vec![0.0; disc.n()];
    newton_solve(
        &disc,
        &x0,
        &NewtonConfig::default(),
        &GmresConfig::default(),
        &pcfg(),
        &mut cache,
    )
    .unwrap();
    assert_eq!(cache.rebuilds, 1);
}

#[test]
fn converged_state_has_small_residual_and_divergence() {
    let g = StaggeredGrid::cube(2, 16).unwrap();
    let x = cavity_state(g, 100.0);
    let disc = Discretization::new(ProblemSpec::cavity(g, 100.0)).unwrap();
    let r = norm2(&disc.residual(&x).unwrap());
    let r0 = norm2(&disc.residual(&vec![0.0; disc.n()]).unwrap());
    assert!(r / r0 < 1e-10);
    assert!(disc.divergence_max(&x) < 1e-9);
}
