use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mlilu_bench::config::{self, PRESETS, SUITES};
use mlilu_bench::{run, BenchError, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "mlilu",
    version,
    about = "Multilevel ILU preconditioned Stokes and Navier-Stokes solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// JSON config holding one case or a list of cases.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset or suite (see `mlilu presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run each case once and write its artifacts.
    Solve(Common),
    /// Run a suite of cases and print a summary table.
    Bench(Common),
    /// Write the first linear system of each case in MatrixMarket format.
    ExportMatrix(Common),
    /// List presets and suites.
    Presets,
}

fn load(c: &Common) -> Result<Vec<RunConfig>, BenchError> {
    match (&c.config, &c.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                BenchError::Config(vec![format!("cannot read {}: {e}", path.display())])
            })?;
            config::parse_configs(&text)
        }
        (None, Some(name)) => config::suite(name),
        _ => Err(BenchError::Config(vec![
            "pass exactly one of --config or --preset".into(),
        ])),
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), BenchError> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(BenchError::Config(vec![
            "--threads must be at least 1".into()
        ]));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| BenchError::Config(vec![e.to_string()]))
}

/// Runs the cases; returns whether all converged.
fn solve(c: &Common, table: bool) -> Result<bool, BenchError> {
    let cases = load(c)?;
    init_threads(c.threads)?;
    std::fs::create_dir_all(&c.out)?;
    // fresh tables per invocation
    for f in ["report.csv", "timings.csv"] {
        let p = c.out.join(f);
        if p.exists() {
            std::fs::remove_file(p)?;
        }
    }
    let mut all = true;
    if table {
        println!(
            "{:<18} {:>4} {:>3} {:>7} {:>6} {:>10} {:>9} {:>9}",
            "case", "nx", "L", "retain", "its", "residual", "build_s", "solve_s"
        );
    }
    for cfg in &cases {
        let res = run::run_case(cfg)?;
        run::write_case(&c.out, cfg, &res)?;
        let r = &res.report;
        if table {
            println!(
                "{:<18} {:>4} {:>3} {:>7} {:>6} {:>10.3e} {:>9.2} {:>9.2}",
                r.case,
                r.nx,
                r.levels,
                r.retain,
                r.iterations,
                r.final_residual,
                res.timing.build_s,
                res.timing.solve_s
            );
        } else {
            println!(
                "{}: {} iterations, {} Newton steps, residual {:.3e}, {}",
                r.case,
                r.iterations,
                r.newton_steps,
                r.final_residual,
                if r.converged {
                    "converged"
                } else {
                    "NOT converged"
                }
            );
        }
        all &= res.converged();
    }
    Ok(all)
}

fn export(c: &Common) -> Result<(), BenchError> {
    for cfg in load(c)? {
        let (a, b) = run::export_matrix(&cfg, &c.out)?;
        println!("{} {}", a.display(), b.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(c) => solve(c, false),
        Command::Bench(c) => solve(c, true),
        Command::ExportMatrix(c) => export(c).map(|()| true),
        Command::Presets => {
            for (name, what) in PRESETS {
                println!("{name:<18} {what}");
            }
            for (name, cases) in SUITES {
                println!("{name:<18} suite: {}", cases.join(", "));
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
