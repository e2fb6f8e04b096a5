use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use gibbs_tree_core::{
    check_consistency, classify, solve_set, total_lower_bound, Classification, FiniteTree, InvariantSet, ModelParams,
    OracleConfig, SolverConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{Command, CountArgs, PlotArgs, SolveArgs, SweepArgs, VerifyArgs};
use crate::records::{read_csv, write_csv, SolutionEntry, SweepRecord};
use crate::{svg, CliError, MAX_ENUM_ENV};

pub fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Count(a) => cmd_count(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Plot(a) => cmd_plot(&a, out),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn stdout_err(source: std::io::Error) -> CliError {
    CliError::Io { path: "<stdout>".into(), source }
}

/// Solves every set in `sets` at `params` and classifies the solutions.
pub fn solve_records(
    params: &ModelParams,
    sets: &[InvariantSet],
    config: &SolverConfig,
) -> Result<Vec<SweepRecord>, CliError> {
    sets.iter()
        .map(|&set| {
            let outcome = solve_set(params, set, config)?;
            let solutions = outcome
                .solutions
                .iter()
                .map(|sol| {
                    let desc = classify(sol, params)?;
                    Ok(SolutionEntry {
                        x: sol.x,
                        y: sol.y,
                        z: sol.z,
                        t: sol.t,
                        classification: desc.classification,
                        residual_full: desc.source_solution.residual_full,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(SweepRecord::new(params.theta(), set, solutions))
        })
        .collect()
}

/// `θ_i = θ_min + i(θ_max - θ_min)/(steps - 1)`; a single step is `θ_min`.
pub fn theta_grid(theta_min: f64, theta_max: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    if !(theta_min > 0.0 && theta_min < 1.0) {
        return Err(CliError::Usage(format!("--theta-min must lie in (0, 1), got {theta_min}")));
    }
    if steps == 1 {
        return Ok(vec![theta_min]);
    }
    if !(theta_max > theta_min && theta_max < 1.0) {
        return Err(CliError::Usage(format!("need theta_min < theta_max < 1, got {theta_min} and {theta_max}")));
    }
    let step = (theta_max - theta_min) / (steps - 1) as f64;
    let mut grid: Vec<f64> = (0..steps).map(|i| theta_min + i as f64 * step).collect();
    grid[steps - 1] = theta_max;
    Ok(grid)
}

/// Solves on every grid θ in parallel; records come back ordered by θ, then
/// by set.
pub fn sweep_records(
    q: usize,
    k: usize,
    grid: &[f64],
    sets: &[InvariantSet],
    config: &SolverConfig,
) -> Result<Vec<SweepRecord>, CliError> {
    let per_theta = grid
        .par_iter()
        .map(|&theta| {
            let params = ModelParams::new(q, k, theta)?;
            solve_records(&params, sets, config)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(per_theta.into_iter().flatten().collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.12e}"))
}

fn print_solutions(out: &mut dyn Write, records: &[SweepRecord]) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<10} {:>3} {:>20} {:>20} {:>20} {:>20} {:>5} {:>10}",
        "set", "#", "x", "y", "z", "t", "class", "residual"
    )?;
    for r in records {
        for (i, s) in r.solutions.iter().enumerate() {
            writeln!(
                out,
                "{:<10} {:>3} {:>20.12e} {:>20.12e} {:>20} {:>20} {:>5} {:>10.2e}",
                r.set.to_string(),
                i,
                s.x,
                s.y,
                fmt_opt(s.z),
                fmt_opt(s.t),
                s.classification.short(),
                s.residual_full
            )?;
        }
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = a.theta.params(&a.shape)?;
    params.check_solver_hypothesis()?;
    let sets = a.set.sets(params.q())?;
    let records = solve_records(&params, &sets, &a.solver.config()?)?;

    if let Some(path) = &a.out {
        if path.extension().is_some_and(|e| e == "json") {
            write_file(path, serde_json::to_string_pretty(&records)?.as_bytes())?;
        } else {
            write_csv(create(path)?, &records)?;
        }
    }
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&records)?).map_err(stdout_err)
    } else {
        writeln!(out, "q = {}, k = {}, θ = {}", params.q(), params.k(), params.theta()).map_err(stdout_err)?;
        print_solutions(out, &records).map_err(stdout_err)
    }
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let grid = theta_grid(a.theta_min, a.theta_max, a.steps)?;
    let (q, k) = (a.shape.q, a.shape.k);
    ModelParams::new(q, k, grid[0]).map_err(|e| CliError::Usage(e.to_string()))?.check_solver_hypothesis()?;
    let sets = a.set.sets(q)?;
    let records = sweep_records(q, k, &grid, &sets, &a.solver.config()?)?;

    if let Some(path) = &a.svg {
        let names: Vec<String> = sets.iter().map(ToString::to_string).collect();
        let title = format!("q = {q}, k = {k}, {}", names.join(" "));
        write_file(path, svg::render(&records, &title).as_bytes())?;
    }
    match (&a.out, a.json) {
        (Some(path), _) => write_csv(create(path)?, &records)?,
        (None, false) => return write_csv(out, &records),
        (None, true) => {}
    }
    if a.json {
        return writeln!(out, "{}", serde_json::to_string_pretty(&records)?).map_err(stdout_err);
    }
    writeln!(out, "{:<10} {:<10} {:>5}", "theta", "set", "count").map_err(stdout_err)?;
    for r in &records {
        writeln!(out, "{:<10.6} {:<10} {:>5}", r.theta, r.set.to_string(), r.count).map_err(stdout_err)?;
    }
    Ok(())
}

fn cmd_count(a: &CountArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let report = total_lower_bound(a.q)?;
    if a.json {
        return writeln!(out, "{}", serde_json::to_string_pretty(&report)?).map_err(stdout_err);
    }
    let mut w = || -> std::io::Result<()> {
        writeln!(out, "q = {}", report.q)?;
        for (m, c) in &report.per_im {
            writeln!(out, "im:{m:<8} {c}")?;
        }
        for (m, c) in &report.per_im_prime {
            writeln!(out, "imprime:{m:<3} {c}")?;
        }
        writeln!(out, "total       {}", report.total_lower_bound)
    };
    w().map_err(stdout_err)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyEntry {
    pub set: InvariantSet,
    pub sol_index: usize,
    pub x: f64,
    pub y: f64,
    pub classification: Classification,
    pub max_relative_error: f64,
    pub passed: bool,
}

/// Solves, embeds and runs the consistency oracle on every solution.
pub fn verify_entries(
    params: &ModelParams,
    sets: &[InvariantSet],
    depth: usize,
    oracle: &OracleConfig,
    solver: &SolverConfig,
) -> Result<Vec<VerifyEntry>, CliError> {
    let tree = FiniteTree::build(params.k(), depth)?;
    let mut entries = Vec::new();
    for &set in sets {
        for (i, sol) in solve_set(params, set, solver)?.solutions.iter().enumerate() {
            let desc = classify(sol, params)?;
            let report = check_consistency(&tree, params, &desc.field, oracle)?;
            entries.push(VerifyEntry {
                set,
                sol_index: i,
                x: sol.x,
                y: sol.y,
                classification: desc.classification,
                max_relative_error: report.max_relative_error,
                passed: report.passed,
            });
        }
    }
    Ok(entries)
}

fn max_enum_from_env() -> Result<u64, CliError> {
    match std::env::var(MAX_ENUM_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{MAX_ENUM_ENV}={v:?} is not an integer"))),
        Err(_) => Ok(OracleConfig::default().max_enum),
    }
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = a.theta.params(&a.shape)?;
    params.check_solver_hypothesis()?;
    let sets = a.set.sets(params.q())?;
    if a.depth == 0 {
        return Err(CliError::Usage("--depth must be at least 1".into()));
    }
    let oracle = OracleConfig { tol: a.tol, seed: a.seed, max_enum: max_enum_from_env()?, ..OracleConfig::default() };
    let solver = SolverConfig { grid_points: a.grid, ..SolverConfig::default() };
    let entries = verify_entries(&params, &sets, a.depth, &oracle, &solver)?;

    if a.json {
        return writeln!(out, "{}", serde_json::to_string_pretty(&entries)?).map_err(stdout_err);
    }
    let mut w = || -> std::io::Result<()> {
        writeln!(out, "depth {}, tolerance {:e}", a.depth, a.tol)?;
        writeln!(out, "{:<10} {:>3} {:>20} {:>20} {:>5} {:>12} result", "set", "#", "x", "y", "class", "max_rel_err")?;
        for e in &entries {
            writeln!(
                out,
                "{:<10} {:>3} {:>20.12e} {:>20.12e} {:>5} {:>12.3e} {}",
                e.set.to_string(),
                e.sol_index,
                e.x,
                e.y,
                e.classification.short(),
                e.max_relative_error,
                if e.passed { "pass" } else { "FAIL" }
            )?;
        }
        Ok(())
    };
    w().map_err(stdout_err)
}

fn cmd_plot(a: &PlotArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = File::open(&a.csv).map_err(io_err(&a.csv))?;
    let records = read_csv(file)?;
    let title = a.csv.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    write_file(&a.svg, svg::render(&records, &title).as_bytes())?;
    let points: usize = records.iter().map(|r| r.count).sum();
    writeln!(out, "wrote {} ({points} points)", a.svg.display()).map_err(stdout_err)
}
