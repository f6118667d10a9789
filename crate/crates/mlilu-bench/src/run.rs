//! Case execution: assemble, partition, factorize, solve (or continue in
//! Re) and collect report rows.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use mlilu::discretize::{Discretization, Linearization, ProblemKind, SaddleMatrix};
use mlilu::krylov::gmres;
use mlilu::mmio;
use mlilu::nonlinear::{continue_in_re, ContinuationRun};
use mlilu::partition::NodeClass;
use mlilu::precond::{LevelDiagnostics, MultilevelPreconditioner, PrecondSetup};

use crate::config::{ProblemName, RunConfig};
use crate::report::{
    self, ContinuationRow, DiagnosticsRow, HistoryRow, PartitionRow, ReportRow, TimingRow,
};
use crate::BenchError;

/// Everything one case produces.
#[derive(Clone, Debug)]
pub struct CaseResult {
    pub report: ReportRow,
    pub timing: TimingRow,
    pub history: Vec<f64>,
    pub continuation: Vec<ContinuationRow>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub partition: Vec<PartitionRow>,
}

impl CaseResult {
    pub fn converged(&self) -> bool {
        self.report.converged
    }
}

pub fn run_case(cfg: &RunConfig) -> Result<CaseResult, BenchError> {
    cfg.validate()?;
    match cfg.problem.kind {
        ProblemName::Stokes => run_stokes(cfg),
        ProblemName::Cavity => run_cavity(cfg),
    }
}

fn base_row(cfg: &RunConfig, unknowns: usize, levels: usize) -> ReportRow {
    ReportRow {
        case: cfg.name.clone(),
        problem: match cfg.problem.kind {
            ProblemName::Stokes => "stokes".into(),
            ProblemName::Cavity => "cavity".into(),
        },
        dim: cfg.problem.dim,
        nx: cfg.problem.n,
        unknowns,
        partition: cfg.partition_kind().name().into(),
        size: cfg.precond.size,
        levels,
        retain: cfg.retain_label(),
        reynolds: match cfg.problem.kind {
            ProblemName::Stokes => 0.0,
            ProblemName::Cavity => cfg.problem.reynolds,
        },
        iterations: 0,
        newton_steps: 0,
        total_iterations: 0,
        converged: false,
        final_residual: f64::NAN,
        sigma_dims: String::new(),
        sigma_nnz: String::new(),
    }
}

fn join<T: ToString>(v: impl Iterator<Item = T>) -> String {
    v.map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn fill_levels(row: &mut ReportRow, levels: &[LevelDiagnostics]) {
    row.sigma_dims = join(levels.iter().map(|d| d.sigma));
    row.sigma_nnz = join(levels.iter().map(|d| d.sigma_nnz));
}

fn timing(
    cfg: &RunConfig,
    setup: Duration,
    build: Duration,
    solve: Duration,
    total: Duration,
) -> TimingRow {
    TimingRow {
        case: cfg.name.clone(),
        threads: rayon::current_num_threads(),
        setup_s: setup.as_secs_f64(),
        build_s: build.as_secs_f64(),
        solve_s: solve.as_secs_f64(),
        total_s: total.as_secs_f64(),
        peak_rss_kb_indicative: report::peak_rss_kb(),
    }
}

fn run_stokes(cfg: &RunConfig) -> Result<CaseResult, BenchError> {
    let start = Instant::now();
    let spec = cfg.problem_spec()?;
    let pcfg = cfg.precond_config()?;
    let disc = Discretization::new(spec)?;
    let a = disc.linear_operator();
    let t = Instant::now();
    let setup = PrecondSetup::new(&a, &spec.grid, &pcfg)?;
    let setup_time = t.elapsed();
    let t = Instant::now();
    let m = MultilevelPreconditioner::factor(&setup, &a)?;
    let build_time = t.elapsed();
    let t = Instant::now();
    let (_, stats) = gmres(&a.matrix, &m, &disc.rhs(), None, &cfg.gmres_config())?;
    let solve_time = t.elapsed();

    let diagnostics = m.diagnostics();
    let mut row = base_row(cfg, disc.n(), pcfg.levels);
    row.iterations = stats.iterations;
    row.newton_steps = 1;
    row.total_iterations = stats.iterations;
    row.converged = stats.converged;
    row.final_residual = stats.final_residual;
    fill_levels(&mut row, &diagnostics);
    let partition = if cfg.output.partition_dump {
        partition_rows(&m)
    } else {
        Vec::new()
    };
    Ok(CaseResult {
        report: row,
        timing: timing(cfg, setup_time, build_time, solve_time, start.elapsed()),
        history: stats.history,
        continuation: Vec::new(),
        diagnostics: diagnostics.iter().map(DiagnosticsRow::from).collect(),
        partition,
    })
}

fn run_cavity(cfg: &RunConfig) -> Result<CaseResult, BenchError> {
    let start = Instant::now();
    let spec = cfg.problem_spec()?;
    let pcfg = cfg.precond_config()?;
    let newton = cfg.newton_config();
    let plan = ContinuationRun::new(
        cfg.newton.re_start,
        cfg.problem.reynolds,
        cfg.newton.re_step,
    );
    let run = continue_in_re(&spec, plan.clone(), &newton, &cfg.gmres_config(), &pcfg)?;
    let target = *plan.schedule()?.last().expect("non-empty schedule");

    let outcomes = run
        .stokes
        .iter()
        .chain(run.steps.iter().map(|s| &s.outcome));
    let (mut build, mut solve) = (Duration::ZERO, Duration::ZERO);
    let mut total_its = 0;
    for o in outcomes {
        for s in &o.steps {
            build += s.build_time;
            solve += s.linear.times.total;
            total_its += s.linear.iterations;
        }
    }
    let n = Discretization::new(spec)?.n();
    let mut row = base_row(cfg, n, pcfg.levels);
    row.total_iterations = total_its;
    let last = run.last();
    let reached = last.is_some_and(|s| s.reynolds == target);
    row.converged = run.converged() && reached;
    let mut history = Vec::new();
    let mut diagnostics = Vec::new();
    if let Some(last) = last {
        row.newton_steps = last.outcome.steps.len();
        row.iterations = last.outcome.first_linear_iterations();
        row.final_residual = last.outcome.final_residual();
        if let Some(first) = last.outcome.steps.first() {
            fill_levels(&mut row, &first.levels);
            history = first.linear.history.clone();
            diagnostics = first.levels.iter().map(DiagnosticsRow::from).collect();
        }
    }
    let continuation = run
        .steps
        .iter()
        .map(|s| ContinuationRow {
            reynolds: s.reynolds,
            newton_steps: s.outcome.steps.len(),
            first_step_gmres: s.outcome.first_linear_iterations(),
            final_residual: s.outcome.final_residual(),
        })
        .collect();
    let partition = match (cfg.output.partition_dump, last) {
        (true, Some(last)) => {
            let disc = Discretization::new(spec.with_reynolds(last.reynolds))?;
            let j = disc.jacobian(&last.outcome.x, newton.linearization)?;
            partition_rows(&MultilevelPreconditioner::new(&j, &spec.grid, &pcfg)?)
        }
        _ => Vec::new(),
    };
    Ok(CaseResult {
        report: row,
        timing: timing(cfg, Duration::ZERO, build, solve, start.elapsed()),
        history,
        continuation,
        diagnostics,
        partition,
    })
}

/// Class of every node on every level, identified by the grid unknown it
/// descends from.
pub fn partition_rows(m: &MultilevelPreconditioner) -> Vec<PartitionRow> {
    let mut rows = Vec::new();
    for lev in m.levels() {
        let c = &lev.classification;
        for (x, class) in c.class.iter().enumerate() {
            let (class, id) = match *class {
                NodeClass::Interior(s) => ("interior", s),
                NodeClass::Separator(g) => match c.owner[x] {
                    Some(s) if c.retained[s] == Some(x) => ("retained-pressure", s),
                    _ => ("separator", g),
                },
            };
            rows.push(PartitionRow {
                global_id: lev.nodes.origin[x],
                level: lev.level,
                class: class.into(),
                id,
                kind: lev.nodes.kinds[x].as_str().into(),
            });
        }
    }
    rows
}

/// Writes every artifact of `res` into `dir` and appends its rows to the
/// combined report and timing tables.
pub fn write_case(dir: &Path, cfg: &RunConfig, res: &CaseResult) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir)?;
    let name = &cfg.name;
    report::append_rows(&dir.join("report.csv"), std::slice::from_ref(&res.report))?;
    report::append_rows(&dir.join("timings.csv"), std::slice::from_ref(&res.timing))?;
    report::write_json(&dir.join(format!("{name}_config.json")), cfg)?;
    if cfg.output.residual_history {
        let rows: Vec<HistoryRow> = res
            .history
            .iter()
            .enumerate()
            .map(|(iteration, &relative_residual)| HistoryRow {
                iteration,
                relative_residual,
            })
            .collect();
        report::write_rows(&dir.join(format!("{name}_residuals.csv")), &rows)?;
    }
    if cfg.output.precond_diagnostics {
        report::write_rows(&dir.join(format!("{name}_precond.csv")), &res.diagnostics)?;
    }
    if cfg.output.partition_dump {
        report::write_rows(&dir.join(format!("{name}_partition.csv")), &res.partition)?;
    }
    if !res.continuation.is_empty() {
        report::write_rows(
            &dir.join(format!("{name}_continuation.csv")),
            &res.continuation,
        )?;
    }
    if cfg.output.matrix_market {
        export_matrix(cfg, dir)?;
    }
    Ok(())
}

/// The case's first linear system in flux variables: the Stokes operator,
/// or the Jacobian at rest for the target Reynolds number.
pub fn system(cfg: &RunConfig) -> Result<(SaddleMatrix, Vec<f64>), BenchError> {
    let spec = cfg.problem_spec()?;
    let disc = Discretization::new(spec)?;
    Ok(match spec.kind {
        ProblemKind::Stokes => (disc.linear_operator(), disc.rhs()),
        ProblemKind::NavierStokes => {
            let x = vec![0.0; disc.n()];
            let b = disc.residual(&x)?.into_iter().map(|v| -v).collect();
            (disc.jacobian(&x, Linearization::Newton)?, b)
        }
    })
}

/// Writes `<name>_A.mtx` and `<name>_b.mtx` into `dir`.
pub fn export_matrix(cfg: &RunConfig, dir: &Path) -> Result<(PathBuf, PathBuf), BenchError> {
    std::fs::create_dir_all(dir)?;
    let (a, b) = system(cfg)?;
    let pa = dir.join(format!("{}_A.mtx", cfg.name));
    let pb = dir.join(format!("{}_b.mtx", cfg.name));
    mmio::write_matrix(BufWriter::new(File::create(&pa)?), &a.matrix)?;
    mmio::write_vector(BufWriter::new(File::create(&pb)?), &b)?;
    Ok((pa, pb))
}
