//! Lid-driven cavity by continuation in the Reynolds number.
//!
//! `cargo run --release --example cavity -- <dim> <n> <size> <levels> <re>`

use mlilu::discretize::ProblemSpec;
use mlilu::grid::StaggeredGrid;
use mlilu::krylov::GmresConfig;
use mlilu::nonlinear::{continue_in_re, ContinuationRun, NewtonConfig};
use mlilu::precond::PrecondConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 5 {
        return Err("usage: cavity <dim> <n> <size> <levels> <re>".into());
    }
    let (dim, n, size, levels): (usize, usize, usize, usize) = (
        args[0].parse()?,
        args[1].parse()?,
        args[2].parse()?,
        args[3].parse()?,
    );
    let re: f64 = args[4].parse()?;
    let grid = StaggeredGrid::cube(dim, n)?;
    let spec = ProblemSpec::cavity(grid, re);
    let pcfg = PrecondConfig::skew(dim, size, levels);
    let run = continue_in_re(
        &spec,
        ContinuationRun::to(re),
        &NewtonConfig::default(),
        &GmresConfig::default(),
        &pcfg,
    )?;
    for s in &run.steps {
        let its: Vec<usize> = s
            .outcome
            .steps
            .iter()
            .map(|st| st.linear.iterations)
            .collect();
        println!(
            "Re {} newton {} its {:?} residual {:.3e}",
            s.reynolds,
            s.outcome.steps.len(),
            its,
            s.outcome.final_residual()
        );
    }
    Ok(())
}
