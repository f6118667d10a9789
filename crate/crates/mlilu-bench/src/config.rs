//! JSON run configuration and named presets.

use serde::{Deserialize, Serialize};

use mlilu::discretize::{Forcing, Linearization, ProblemKind, ProblemSpec, DEFAULT_SEED};
use mlilu::grid::StaggeredGrid;
use mlilu::krylov::GmresConfig;
use mlilu::nonlinear::NewtonConfig;
use mlilu::partition::PartitionKind;
use mlilu::precond::{PrecondConfig, Retain, RetainSchedule};

use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemName {
    /// Randomly forced Stokes flow with no-slip walls.
    Stokes,
    /// Lid-driven cavity reached by continuation in Re.
    Cavity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionName {
    /// Skew in 2D, parallelepiped in 3D.
    Auto,
    Cartesian,
    Skew,
    Parallelepiped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearizationName {
    Newton,
    Picard,
}

/// Number of reductions: a count or `"log2"` for `log2(nx) − 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Levels {
    Fixed(usize),
    Rule(String),
}

/// Nodes kept per separator group on each level: a list (the last entry
/// repeats) or `"all"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RetainSpec {
    PerLevel(Vec<usize>),
    Keyword(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemName,
    pub dim: usize,
    pub n: usize,
    /// Target Reynolds number (cavity only).
    pub reynolds: f64,
    pub lid_velocity: f64,
    /// Random forcing seed (Stokes only).
    pub seed: u64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            kind: ProblemName::Stokes,
            dim: 3,
            n: 16,
            reynolds: 500.0,
            lid_velocity: 1.0,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrecondSection {
    pub partition: PartitionName,
    pub size: usize,
    pub levels: Levels,
    pub coarsening: usize,
    pub retain: RetainSpec,
}

impl Default for PrecondSection {
    fn default() -> Self {
        Self {
            partition: PartitionName::Auto,
            size: 8,
            levels: Levels::Fixed(2),
            coarsening: 2,
            retain: RetainSpec::PerLevel(vec![1]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmresSection {
    pub restart: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmresSection {
    fn default() -> Self {
        let d = GmresConfig::default();
        Self {
            restart: d.restart,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonSection {
    pub tol: f64,
    pub max_steps: usize,
    pub linearization: LinearizationName,
    pub re_start: f64,
    pub re_step: f64,
}

impl Default for NewtonSection {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_steps: 20,
            linearization: LinearizationName::Newton,
            re_start: 100.0,
            re_step: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub residual_history: bool,
    pub partition_dump: bool,
    pub precond_diagnostics: bool,
    /// MatrixMarket dump of the (first) system matrix and right-hand side.
    pub matrix_market: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            residual_history: true,
            partition_dump: false,
            precond_diagnostics: true,
            matrix_market: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Case label used in reports and file names.
    pub name: String,
    pub problem: ProblemSection,
    pub precond: PrecondSection,
    pub gmres: GmresSection,
    pub newton: NewtonSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "case".into(),
            problem: ProblemSection::default(),
            precond: PrecondSection::default(),
            gmres: GmresSection::default(),
            newton: NewtonSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// A config file holds one case or a list of cases.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    Many(Vec<RunConfig>),
    One(Box<RunConfig>),
}

pub fn parse_configs(json: &str) -> Result<Vec<RunConfig>, BenchError> {
    let parsed: ConfigFile =
        serde_json::from_str(json).map_err(|e| BenchError::Config(vec![e.to_string()]))?;
    let list = match parsed {
        ConfigFile::Many(v) => v,
        ConfigFile::One(c) => vec![*c],
    };
    if list.is_empty() {
        return Err(BenchError::Config(vec!["config lists no cases".into()]));
    }
    for c in &list {
        c.validate()?;
    }
    Ok(list)
}

impl RunConfig {
    /// Checks everything up front and reports all problems together.
    pub fn validate(&self) -> Result<(), BenchError> {
        let mut errs = Vec::new();
        let p = &self.problem;
        if !(p.dim == 2 || p.dim == 3) {
            errs.push(format!("problem.dim must be 2 or 3, got {}", p.dim));
        }
        if p.n < 2 {
            errs.push(format!("problem.n must be at least 2, got {}", p.n));
        }
        if p.kind == ProblemName::Cavity {
            if !(p.reynolds.is_finite() && p.reynolds > 0.0) {
                errs.push(format!(
                    "problem.reynolds must be positive, got {}",
                    p.reynolds
                ));
            }
            let n = &self.newton;
            if !(n.re_start > 0.0 && n.re_start.is_finite())
                || !(n.re_step > 0.0 && n.re_step.is_finite())
            {
                errs.push("newton.re_start and newton.re_step must be positive".into());
            } else if n.re_start > p.reynolds {
                errs.push(format!(
                    "newton.re_start {} exceeds problem.reynolds {}",
                    n.re_start, p.reynolds
                ));
            }
        }
        if !p.lid_velocity.is_finite() {
            errs.push("problem.lid_velocity must be finite".into());
        }
        if !self
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            || self.name.is_empty()
        {
            errs.push(format!(
                "name {:?} must be non-empty and use only [A-Za-z0-9_-]",
                self.name
            ));
        }

        let pc = &self.precond;
        let levels = match self.levels() {
            Ok(l) => Some(l),
            Err(e) => {
                errs.push(e);
                None
            }
        };
        if pc.size == 0 {
            errs.push("precond.size must be positive".into());
        }
        if pc.coarsening < 2 {
            errs.push(format!(
                "precond.coarsening must be at least 2, got {}",
                pc.coarsening
            ));
        }
        match (self.partition_kind(), p.dim) {
            (PartitionKind::Skew, 3) => {
                errs.push("skew partitioning is 2D only; use parallelepiped".into())
            }
            (PartitionKind::Parallelepiped, 2) => {
                errs.push("parallelepiped partitioning is 3D only; use skew".into())
            }
            _ => {}
        }
        if let (Some(l), true) = (levels, pc.size > 0 && pc.coarsening >= 2) {
            // the largest subdomain used must still tile the grid
            let top = (1..l.max(1)).fold(pc.size, |s, _| s.saturating_mul(pc.coarsening));
            for (lvl, s) in [(1, pc.size), (l.max(1), top)] {
                if l > 0 && !p.n.is_multiple_of(s) {
                    errs.push(format!(
                        "level {lvl} subdomain size {s} does not divide n = {}",
                        p.n
                    ));
                }
            }
        }
        if let Err(e) = self.retain_schedule() {
            errs.push(e);
        }
        if self.gmres.restart == 0 {
            errs.push("gmres.restart must be at least 1".into());
        }
        if !(self.gmres.tol > 0.0 && self.gmres.tol.is_finite()) {
            errs.push(format!(
                "gmres.tol must be positive, got {}",
                self.gmres.tol
            ));
        }
        if self.gmres.max_iter == 0 {
            errs.push("gmres.max_iter must be at least 1".into());
        }
        if !(self.newton.tol > 0.0 && self.newton.tol.is_finite()) {
            errs.push(format!(
                "newton.tol must be positive, got {}",
                self.newton.tol
            ));
        }
        if self.newton.max_steps == 0 {
            errs.push("newton.max_steps must be at least 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(BenchError::Config(errs))
        }
    }

    pub fn levels(&self) -> Result<usize, String> {
        match &self.precond.levels {
            Levels::Fixed(l) => Ok(*l),
            Levels::Rule(r) if r == "log2" => {
                let n = self.problem.n;
                if !n.is_power_of_two() || n < 8 {
                    return Err(format!(
                        "levels rule \"log2\" needs a power-of-two n >= 8, got {n}"
                    ));
                }
                Ok(n.trailing_zeros() as usize - 2)
            }
            Levels::Rule(r) => Err(format!(
                "precond.levels must be a count or \"log2\", got {r:?}"
            )),
        }
    }

    pub fn partition_kind(&self) -> PartitionKind {
        match self.precond.partition {
            PartitionName::Auto if self.problem.dim == 3 => PartitionKind::Parallelepiped,
            PartitionName::Auto | PartitionName::Skew => PartitionKind::Skew,
            PartitionName::Cartesian => PartitionKind::Cartesian,
            PartitionName::Parallelepiped => PartitionKind::Parallelepiped,
        }
    }

    pub fn retain_schedule(&self) -> Result<RetainSchedule, String> {
        match &self.precond.retain {
            RetainSpec::Keyword(k) if k == "all" => Ok(RetainSchedule::uniform(Retain::All)),
            RetainSpec::Keyword(k) => Err(format!(
                "precond.retain must be a list or \"all\", got {k:?}"
            )),
            RetainSpec::PerLevel(v) if v.is_empty() || v.contains(&0) => {
                Err("precond.retain must list positive counts".into())
            }
            RetainSpec::PerLevel(v) => {
                Ok(RetainSchedule(v.iter().map(|&k| Retain::K(k)).collect()))
            }
        }
    }

    /// Short label of the retain schedule for reports.
    pub fn retain_label(&self) -> String {
        match &self.precond.retain {
            RetainSpec::Keyword(k) => k.clone(),
            RetainSpec::PerLevel(v) => v.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
        }
    }

    pub fn grid(&self) -> Result<StaggeredGrid, BenchError> {
        StaggeredGrid::cube(self.problem.dim, self.problem.n)
            .map_err(|e| BenchError::Config(vec![e.to_string()]))
    }

    /// The problem solved directly (Stokes) or the target of the
    /// continuation (cavity).
    pub fn problem_spec(&self) -> Result<ProblemSpec, BenchError> {
        let grid = self.grid()?;
        let p = &self.problem;
        Ok(match p.kind {
            ProblemName::Stokes => ProblemSpec {
                grid,
                reynolds: 1.0,
                lid_velocity: 0.0,
                kind: ProblemKind::Stokes,
                forcing: Forcing::Random { seed: p.seed },
            },
            ProblemName::Cavity => ProblemSpec {
                lid_velocity: p.lid_velocity,
                ..ProblemSpec::cavity(grid, p.reynolds)
            },
        })
    }

    pub fn precond_config(&self) -> Result<PrecondConfig, BenchError> {
        let levels = self.levels().map_err(|e| BenchError::Config(vec![e]))?;
        let retain = self
            .retain_schedule()
            .map_err(|e| BenchError::Config(vec![e]))?;
        Ok(PrecondConfig {
            partition: self.partition_kind(),
            size: self.precond.size,
            levels,
            coarsening: self.precond.coarsening,
            retain,
        })
    }

    pub fn gmres_config(&self) -> GmresConfig {
        GmresConfig {
            restart: self.gmres.restart,
            tol: self.gmres.tol,
            max_iter: self.gmres.max_iter,
        }
    }

    pub fn newton_config(&self) -> NewtonConfig {
        NewtonConfig {
            tol: self.newton.tol,
            max_steps: self.newton.max_steps,
            linearization: match self.newton.linearization {
                LinearizationName::Newton => Linearization::Newton,
                LinearizationName::Picard => Linearization::Picard,
            },
            ..NewtonConfig::default()
        }
    }
}

/// Named cases; `bench` suites are lists of these.
pub const PRESETS: &[(&str, &str)] = &[
    ("stokes2d-16", "2D Stokes 16^2, skew s=4, L=2"),
    ("stokes-16", "3D Stokes 16^3, parallelepiped s=8, L=2"),
    ("stokes-32", "3D Stokes 32^3, parallelepiped s=8, L=2"),
    ("stokes-32-l3", "3D Stokes 32^3, L=log2(nx)-2=3, retain 1"),
    (
        "stokes-32-l3-r4",
        "3D Stokes 32^3, L=3, retain 4 from level 3",
    ),
    (
        "exact2d-16",
        "2D Stokes 16^2, retain all (exact factorization)",
    ),
    ("exact-8", "3D Stokes 8^3, retain all (exact factorization)"),
    ("cavity2d-500", "2D cavity 32^2, Re=500 by continuation"),
    ("cavity-500", "3D cavity 16^3, Re=500 by continuation, L=2"),
    (
        "cavity-2000",
        "3D cavity 16^3, Re=2000 by continuation, L=2",
    ),
];

/// Benchmark suites.
pub const SUITES: &[(&str, &[&str])] = &[
    ("weak-scaling", &["stokes-16", "stokes-32"]),
    (
        "level-growth",
        &["stokes-16", "stokes-32-l3", "stokes-32-l3-r4"],
    ),
    ("exactness", &["exact2d-16", "exact-8"]),
    ("cavity", &["cavity-500", "cavity-2000"]),
    ("quick", &["stokes2d-16", "exact2d-16", "cavity2d-500"]),
];

pub fn preset(name: &str) -> Result<RunConfig, BenchError> {
    let base = RunConfig {
        name: name.to_string(),
        ..RunConfig::default()
    };
    let stokes =
        |dim: usize, n: usize, size: usize, levels: Levels, retain: RetainSpec| RunConfig {
            problem: ProblemSection {
                kind: ProblemName::Stokes,
                dim,
                n,
                ..ProblemSection::default()
            },
            precond: PrecondSection {
                size,
                levels,
                retain,
                ..PrecondSection::default()
            },
            ..base.clone()
        };
    let cavity = |dim: usize, n: usize, size: usize, re: f64| RunConfig {
        problem: ProblemSection {
            kind: ProblemName::Cavity,
            dim,
            n,
            reynolds: re,
            ..ProblemSection::default()
        },
        precond: PrecondSection {
            size,
            ..PrecondSection::default()
        },
        ..base.clone()
    };
    let one = || RetainSpec::PerLevel(vec![1]);
    let all = || RetainSpec::Keyword("all".into());
    let exact = |c: RunConfig| RunConfig {
        gmres: GmresSection {
            tol: 1e-10,
            ..GmresSection::default()
        },
        ..c
    };
    let cfg = match name {
        "stokes2d-16" => stokes(2, 16, 4, Levels::Fixed(2), one()),
        "stokes-16" => stokes(3, 16, 8, Levels::Fixed(2), one()),
        "stokes-32" => stokes(3, 32, 8, Levels::Fixed(2), one()),
        "stokes-32-l3" => stokes(3, 32, 8, Levels::Rule("log2".into()), one()),
        "stokes-32-l3-r4" => stokes(
            3,
            32,
            8,
            Levels::Rule("log2".into()),
            RetainSpec::PerLevel(vec![1, 1, 4]),
        ),
        "exact2d-16" => exact(stokes(2, 16, 4, Levels::Fixed(2), all())),
        "exact-8" => exact(stokes(3, 8, 4, Levels::Fixed(2), all())),
        "cavity2d-500" => cavity(2, 32, 8, 500.0),
        "cavity-500" => cavity(3, 16, 8, 500.0),
        "cavity-2000" => cavity(3, 16, 8, 2000.0),
        _ => return Err(unknown_preset(name)),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn suite(name: &str) -> Result<Vec<RunConfig>, BenchError> {
    match SUITES.iter().find(|(n, _)| *n == name) {
        Some((_, cases)) => cases.iter().map(|c| preset(c)).collect(),
        // a single preset is a suite of one
        None => preset(name)
            .map(|c| vec![c])
            .map_err(|_| unknown_preset(name)),
    }
}

fn unknown_preset(name: &str) -> BenchError {
    let presets: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
    let suites: Vec<&str> = SUITES.iter().map(|s| s.0).collect();
    BenchError::Config(vec![format!(
        "unknown preset {name:?}; presets: {}; suites: {}",
        presets.join(", "),
        suites.join(", ")
    )])
}
