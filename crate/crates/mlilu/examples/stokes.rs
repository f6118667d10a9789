//! Stokes solve with the multilevel preconditioner.
//!
//! `cargo run --release --example stokes -- <dim> <n> <size> <levels> [retain]`

use std::time::Instant;

use mlilu::discretize::{Discretization, ProblemSpec};
use mlilu::grid::StaggeredGrid;
use mlilu::krylov::{gmres, GmresConfig};
use mlilu::precond::{MultilevelPreconditioner, PrecondConfig, RetainSchedule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let [dim, n, size, levels] = args[..4] else {
        return Err("usage: stokes <dim> <n> <size> <levels> [retain]".into());
    };
    let retain = args.get(4).copied().unwrap_or(1);
    let grid = StaggeredGrid::cube(dim, n)?;
    let disc = Discretization::new(ProblemSpec::stokes(grid))?;
    let a = disc.linear_operator();
    let cfg = PrecondConfig::skew(dim, size, levels).with_retain(if retain == 1 {
        RetainSchedule::default()
    } else {
        RetainSchedule::from_third_level(retain)
    });
    let t = Instant::now();
    let m = MultilevelPreconditioner::new(&a, &grid, &cfg)?;
    let build = t.elapsed();
    for d in m.diagnostics() {
        println!(
            "level {}: n {} sep {} sigma {} nnz {}",
            d.level, d.n, d.separators, d.sigma, d.sigma_nnz
        );
    }
    let t = Instant::now();
    let (_, st) = gmres(&a.matrix, &m, &disc.rhs(), None, &GmresConfig::default())?;
    println!(
        "unknowns {} iterations {} converged {} residual {:.3e} build {:.2?} solve {:.2?}",
        disc.n(),
        st.iterations,
        st.converged,
        st.final_residual,
        build,
        t.elapsed()
    );
    Ok(())
}
