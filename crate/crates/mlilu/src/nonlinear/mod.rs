//! Newton's method on the steady residual and continuation in the
//! Reynolds number.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::discretize::{
    Discretization, DiscretizeError, Linearization, ProblemKind, ProblemSpec, SaddleMatrix,
};
use crate::grid::VarKind;
use crate::krylov::{gmres, GmresConfig, KrylovError, SolveStats};
use crate::linalg::norm2;
use crate::precond::{
    LevelDiagnostics, MultilevelPreconditioner, PrecondConfig, PrecondError, PrecondSetup,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearError {
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Precond(#[from] PrecondError),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error("invalid continuation: {0}")]
    BadContinuation(String),
}

pub type Result<T> = std::result::Result<T, NonlinearError>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Stop when `‖R(x)‖ ≤ tol ‖R(0)‖`.
    pub tol: f64,
    pub max_steps: usize,
    pub linearization: Linearization,
    /// Abort after this many consecutive residual increases.
    pub growth_limit: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_steps: 20,
            linearization: Linearization::Newton,
            growth_limit: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonStep {
    /// Relative residual after the step.
    pub residual: f64,
    pub linear: SolveStats,
    pub build_time: Duration,
    pub levels: Vec<LevelDiagnostics>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome {
    /// Flux state.
    pub x: Vec<f64>,
    /// Relative residual of `x0`.
    pub initial_residual: f64,
    pub steps: Vec<NewtonStep>,
    pub converged: bool,
    /// Stopped because the residual kept growing.
    pub diverged: bool,
}

impl NewtonOutcome {
    pub fn final_residual(&self) -> f64 {
        self.steps
            .last()
            .map_or(self.initial_residual, |s| s.residual)
    }

    /// Linear iterations of the first step (0 when no step was taken).
    pub fn first_linear_iterations(&self) -> usize {
        self.steps.first().map_or(0, |s| s.linear.iterations)
    }
}

/// Partitioning reused between Jacobians with the same pattern.
#[derive(Debug, Default)]
pub struct SetupCache {
    setup: Option<(PrecondSetup, Vec<usize>, Vec<usize>)>,
    pub rebuilds: usize,
}

impl SetupCache {
    pub fn get(
        &mut self,
        a: &SaddleMatrix,
        d: &Discretization,
        cfg: &PrecondConfig,
    ) -> Result<&PrecondSetup> {
        let m = &a.matrix;
        let fresh = match &self.setup {
            Some((s, ip, ix)) => s.config != *cfg || ip != m.indptr() || ix != m.indices(),
            None => true,
        };
        if fresh {
            let s = PrecondSetup::new(a, d.grid(), cfg)?;
            self.setup = Some((s, m.indptr().to_vec(), m.indices().to_vec()));
            self.rebuilds += 1;
        }
        Ok(&self.setup.as_ref().expect("just set").0)
    }
}

/// Newton iteration from the flux state `x0` with a freshly factorized
/// preconditioner every step. The linear Stokes problem takes exactly one
/// step.
pub fn newton_solve(
    disc: &Discretization,
    x0: &[f64],
    cfg: &NewtonConfig,
    lin: &GmresConfig,
    pcfg: &PrecondConfig,
    cache: &mut SetupCache,
) -> Result<NewtonOutcome> {
    let mut x = x0.to_vec();
    let r0 = norm2(&disc.residual(&vec![0.0; disc.n()])?);
    let r0 = if r0 > 0.0 { r0 } else { 1.0 };
    let mut r = disc.residual(&x)?;
    let initial = norm2(&r) / r0;
    let linear = disc.spec().kind == ProblemKind::Stokes;
    let mut out = NewtonOutcome {
        x: Vec::new(),
        initial_residual: initial,
        steps: Vec::new(),
        converged: false,
        diverged: false,
    };
    let mut rel = initial;
    let mut growth = 0;
    while (linear && out.steps.is_empty())
        || (!linear && rel > cfg.tol && out.steps.len() < cfg.max_steps)
    {
        let t = Instant::now();
        let j = disc.jacobian(&x, cfg.linearization)?;
        let setup = cache.get(&j, disc, pcfg)?;
        let m = MultilevelPreconditioner::factor(setup, &j)?;
        let build_time = t.elapsed();
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        // near the target the linear solve need not go below round-off
        let step_lin = if linear {
            *lin
        } else {
            GmresConfig {
                tol: lin.tol.max(0.01 * cfg.tol / rel),
                ..*lin
            }
        };
        let (dx, stats) = gmres(&j.matrix, &m, &rhs, None, &step_lin)?;
        for (a, b) in x.iter_mut().zip(&dx) {
            *a += b;
        }
        r = disc.residual(&x)?;
        let next = norm2(&r) / r0;
        growth = if next > rel { growth + 1 } else { 0 };
        rel = next;
        let lin_ok = stats.converged;
        out.steps.push(NewtonStep {
            residual: rel,
            linear: stats,
            build_time,
            levels: m.diagnostics(),
        });
        if linear {
            out.converged = lin_ok;
            break;
        }
        if growth >= cfg.growth_limit {
            out.diverged = true;
            break;
        }
    }
    if !linear {
        out.converged = rel <= cfg.tol;
    }
    out.x = x;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationStep {
    pub reynolds: f64,
    pub outcome: NewtonOutcome,
}

/// Continuation in `Re` from the Stokes solution of the same boundary
/// data: `re_start, re_start + re_step, …, re_end`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationRun {
    pub re_start: f64,
    pub re_end: f64,
    pub re_step: f64,
    /// Stokes solve that provides the initial state.
    pub stokes: Option<NewtonOutcome>,
    pub steps: Vec<ContinuationStep>,
}

impl ContinuationRun {
    pub fn new(re_start: f64, re_end: f64, re_step: f64) -> Self {
        Self {
            re_start,
            re_end,
            re_step,
            stokes: None,
            steps: Vec::new(),
        }
    }

    /// Default schedule `100, 200, …, re_end`.
    pub fn to(re_end: f64) -> Self {
        Self::new(100.0, re_end, 100.0)
    }

    pub fn schedule(&self) -> Result<Vec<f64>> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.re_start)
            || !ok(self.re_step)
            || !ok(self.re_end)
            || self.re_end < self.re_start
        {
            return Err(NonlinearError::BadContinuation(format!(
                "start {} end {} step {}",
                self.re_start, self.re_end, self.re_step
            )));
        }
        let count = ((self.re_end - self.re_start) / self.re_step + 1e-9).floor() as usize;
        let mut res: Vec<f64> = (0..=count)
            .map(|i| self.re_start + i as f64 * self.re_step)
            .collect();
        if res
            .last()
            .is_some_and(|&l| l < self.re_end - 1e-9 * self.re_end)
        {
            res.push(self.re_end);
        }
        Ok(res)
    }

    pub fn last(&self) -> Option<&ContinuationStep> {
        self.steps.last()
    }

    pub fn converged(&self) -> bool {
        self.stokes.as_ref().is_some_and(|s| s.converged)
            && self.steps.iter().all(|s| s.outcome.converged)
    }
}

/// Runs the continuation for the cavity-type problem `spec` (its Reynolds
/// number is replaced along the schedule). Stops early at the first step
/// that fails to converge.
pub fn continue_in_re(
    spec: &ProblemSpec,
    mut run: ContinuationRun,
    cfg: &NewtonConfig,
    lin: &GmresConfig,
    pcfg: &PrecondConfig,
) -> Result<ContinuationRun> {
    let schedule = run.schedule()?;
    let stokes_spec = ProblemSpec {
        kind: ProblemKind::Stokes,
        ..*spec
    };
    let stokes = Discretization::new(stokes_spec)?;
    let mut cache = SetupCache::default();
    let s = newton_solve(&stokes, &vec![0.0; stokes.n()], cfg, lin, pcfg, &mut cache)?;
    // Stokes pressure has unit viscosity; Navier–Stokes pressure scales with 1/Re
    let p_scale = 1.0 / schedule[0];
    let mut x: Vec<f64> =
        s.x.iter()
            .zip(stokes.kinds())
            .map(|(&v, &k)| if k == VarKind::P { v * p_scale } else { v })
            .collect();
    let ok = s.converged;
    run.stokes = Some(s);
    run.steps.clear();
    if !ok {
        return Ok(run);
    }
    for re in schedule {
        let disc = Discretization::new(ProblemSpec {
            kind: ProblemKind::NavierStokes,
            ..spec.with_reynolds(re)
        })?;
        let outcome = newton_solve(&disc, &x, cfg, lin, pcfg, &mut cache)?;
        let done = outcome.converged;
        x.clone_from(&outcome.x);
        run.steps.push(ContinuationStep {
            reynolds: re,
            outcome,
        });
        if !done {
            break;
        }
    }
    Ok(run)
}
