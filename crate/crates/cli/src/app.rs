use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rasqp::bench::{self, BenchmarkPlan, IterationTrace, SolverKind, SolverSpec};
use rasqp::rng::DEFAULT_SEED;
use rasqp::{brute_force_solve, Family, GeneratorSpec, QpProblem, SolveStatus};

use crate::plan::{default_solvers, parse_plan, solver_specs, Axes};
use crate::problem_file::{self, MatrixFormat};

/// Exit code for solver outcomes other than Optimal.
pub const EXIT_NOT_OPTIMAL: i32 = 2;
/// Exit code for bad input: files, flags, invalid problems.
pub const EXIT_INPUT: i32 = 1;

#[derive(Parser)]
#[command(name = "rasqp", version)]
#[command(about = "Active set solvers for convex QPs with x >= 0")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file
    Solve(SolveArgs),
    /// Run a benchmark grid and print the aggregated table
    Bench(BenchArgs),
    /// Run one traced solve and write per-solve infeasible counts as CSV
    Trace(TraceArgs),
    /// Write a generated problem to a problem file
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SolverName {
    Ras,
    Generic,
    Kr,
    Fletcher,
    Brute,
}

impl SolverName {
    fn kind(self) -> Option<SolverKind> {
        match self {
            SolverName::Ras => Some(SolverKind::Ras),
            SolverName::Generic => Some(SolverKind::Generic),
            SolverName::Kr => Some(SolverKind::Kr),
            SolverName::Fletcher => Some(SolverKind::Fletcher),
            SolverName::Brute => None,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Problem file
    path: PathBuf,
    #[arg(long, value_enum, default_value = "ras")]
    solver: SolverName,
    /// Seed of the solver's random stream
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Dual feasibility tolerance
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Solve (or iteration) cap
    #[arg(long)]
    max_solves: Option<usize>,
    /// Print a JSON report instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GeneratorArgs {
    /// Problem family: easy, medium or hard
    #[arg(long)]
    family: Option<Family>,
    #[arg(long)]
    n: Option<usize>,
    /// Easy family only
    #[arg(long)]
    epsilon: Option<f64>,
    /// Medium family only
    #[arg(long)]
    density: Option<f64>,
    /// Medium and hard families
    #[arg(long)]
    cond: Option<f64>,
}

impl GeneratorArgs {
    fn spec(&self, seed: u64) -> Result<GeneratorSpec> {
        let Some(family) = self.family else {
            bail!("--family is required");
        };
        let Some(n) = self.n else {
            bail!("--n is required");
        };
        let mut gens = Axes {
            family,
            n: vec![n],
            epsilon: self.epsilon.into_iter().collect(),
            density: self.density.into_iter().collect(),
            cond: self.cond.into_iter().collect(),
        }
        .expand()?;
        Ok(gens.remove(0).with_seed(seed))
    }
}

#[derive(Args)]
struct BenchArgs {
    /// TOML plan file; replaces the grid flags
    #[arg(long, conflicts_with_all = ["family", "n", "epsilon", "density", "cond", "solvers", "desk"])]
    plan: Option<PathBuf>,
    #[arg(long)]
    family: Option<Family>,
    /// Comma-separated dimensions
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    epsilon: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    density: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    cond: Vec<f64>,
    /// Comma-separated solvers: ras, generic, kr, fletcher
    #[arg(long, value_delimiter = ',')]
    solvers: Vec<SolverKind>,
    /// Use the built-in reduced grid for --family
    #[arg(long, requires = "family", conflicts_with_all = ["n", "epsilon", "density", "cond"])]
    desk: bool,
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial t uses seed + t
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds of solver time per trial before it counts as failed
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Dual tolerance; defaults to the family's tolerance
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_solves: Option<usize>,
    /// Write per-trial rows as CSV to this file
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Trace a problem file instead of a generated problem
    #[arg(long, conflicts_with_all = ["family", "n", "epsilon", "density", "cond"])]
    problem: Option<PathBuf>,
    #[arg(long, default_value = "ras")]
    solver: SolverKind,
    /// Seed of both the generator and the solver
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_solves: Option<usize>,
    /// Write zeros in the time column, for byte-identical repeat runs
    #[arg(long)]
    no_timing: bool,
    /// CSV destination; stdout when absent
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Matrix section format; dense for the hard family and coo otherwise by default
    #[arg(long, value_enum)]
    format: Option<FormatName>,
    /// Destination; stdout when absent
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatName {
    Dense,
    Coo,
}

/// Parses `args` (including the program name), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INPUT
        }
    }
}

fn read_problem(path: &PathBuf) -> Result<QpProblem> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file = problem_file::parse(&text).with_context(|| format!("{}", path.display()))?;
    file.problem
        .validate()
        .with_context(|| format!("{}: invalid problem", path.display()))?;
    Ok(file.problem)
}

fn write_output(path: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => io::stdout()
            .write_all(bytes)
            .context("cannot write to stdout"),
    }
}

fn exit_for(status: SolveStatus) -> i32 {
    if status == SolveStatus::Optimal {
        0
    } else {
        EXIT_NOT_OPTIMAL
    }
}

#[derive(Serialize)]
struct Residuals {
    stationarity: f64,
    relative_stationarity: f64,
    primal_viol: f64,
    dual_viol: f64,
    comp_viol: f64,
}

#[derive(Serialize)]
struct SolveReport {
    solver: String,
    status: SolveStatus,
    objective: f64,
    solves: usize,
    #[serde(rename = "avgI")]
    avg_i: f64,
    residuals: Residuals,
    x: Vec<f64>,
    s: Vec<f64>,
}

fn cmd_solve(a: SolveArgs) -> Result<i32> {
    let problem = read_problem(&a.path)?;
    let (point, status, solves, avg_i) = match a.solver.kind() {
        Some(kind) => {
            let spec = SolverSpec {
                kind,
                tol: Some(a.tol),
                max_solves: a.max_solves,
            };
            let r = spec.run(&problem, a.tol, a.seed)?;
            (r.point, r.status, r.solves, r.avg_subsystem_size)
        }
        None => {
            let p = brute_force_solve(&problem, a.tol)?;
            let n = problem.n();
            // every subset of {1..n} is solved once; mean |I| is n/2
            (p, SolveStatus::Optimal, 1usize << n, n as f64 / 2.0)
        }
    };
    let res = problem.kkt_residual(&point)?;
    let report = SolveReport {
        solver: format!("{:?}", a.solver).to_lowercase(),
        status,
        objective: problem.objective(&point.x)?,
        solves,
        avg_i,
        residuals: Residuals {
            stationarity: res.stationarity,
            relative_stationarity: res.relative_stationarity(),
            primal_viol: res.primal_viol,
            dual_viol: res.dual_viol,
            comp_viol: res.comp_viol,
        },
        x: point.x,
        s: point.s,
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        println!("solver        {}", report.solver);
        println!("status        {}", report.status);
        println!("objective     {:?}", report.objective);
        println!("solves        {}", report.solves);
        println!("avgI          {:.3}", report.avg_i);
        println!("stationarity  {:e}", report.residuals.stationarity);
        println!("primal_viol   {:e}", report.residuals.primal_viol);
        println!("dual_viol     {:e}", report.residuals.dual_viol);
        println!("comp_viol     {:e}", report.residuals.comp_viol);
        println!("x             {}", join(&report.x));
    }
    Ok(exit_for(status))
}

fn cmd_bench(a: BenchArgs) -> Result<i32> {
    let mut plan = match (&a.plan, a.desk) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            parse_plan(&text)?
        }
        (None, true) => {
            let mut plan = BenchmarkPlan::desk(a.family.expect("clap requires family"));
            if !a.solvers.is_empty() {
                let gens: Vec<GeneratorSpec> = plan
                    .grid
                    .iter()
                    .map(|c| c.generator.clone())
                    .collect::<Vec<_>>();
                let mut uniq: Vec<GeneratorSpec> = Vec::new();
                for g in gens {
                    if !uniq.contains(&g) {
                        uniq.push(g);
                    }
                }
                plan.grid =
                    BenchmarkPlan::from_grid(&uniq, &solver_specs(&a.solvers, None, None)).grid;
            }
            plan
        }
        (None, false) => {
            let Some(family) = a.family else {
                bail!("either --plan, --family or --desk is required");
            };
            let gens = Axes {
                family,
                n: a.n.clone(),
                epsilon: a.epsilon.clone(),
                density: a.density.clone(),
                cond: a.cond.clone(),
            }
            .expand()?;
            let kinds = if a.solvers.is_empty() {
                default_solvers()
            } else {
                a.solvers.clone()
            };
            BenchmarkPlan::from_grid(&gens, &solver_specs(&kinds, None, None))
        }
    };
    for cell in &mut plan.grid {
        if a.tol.is_some() {
            cell.solver.tol = a.tol;
        }
        if a.max_solves.is_some() {
            cell.solver.max_solves = a.max_solves;
        }
    }
    if let Some(t) = a.trials {
        plan.trials = t;
    }
    if let Some(s) = a.seed {
        plan.base_seed = s;
    }
    if let Some(t) = a.time_limit {
        plan.time_limit = t;
    }
    if a.threads.is_some() {
        plan.threads = a.threads;
    }
    let records = bench::run_plan(&plan)?;
    for r in &records {
        for (trial, msg) in &r.errors {
            eprintln!("{} n={} {} trial {trial}: {msg}", r.family, r.n, r.solver);
        }
    }
    print!("{}", bench::emit_table(&records));
    if let Some(path) = &a.output {
        let mut buf = Vec::new();
        bench::write_rows(&bench::all_rows(&records), &mut buf)?;
        write_output(Some(path), &buf)?;
    }
    Ok(0)
}

fn cmd_trace(a: TraceArgs) -> Result<i32> {
    let (problem, tol) = match &a.problem {
        Some(path) => (read_problem(path)?, a.tol.unwrap_or(1e-8)),
        None => {
            let spec = a.generator.spec(a.seed)?;
            let tol = a.tol.unwrap_or_else(|| spec.family.default_tol());
            (spec.generate()?.problem, tol)
        }
    };
    let spec = SolverSpec {
        kind: a.solver,
        tol: Some(tol),
        max_solves: a.max_solves,
    };
    let result = spec.run(&problem, tol, a.seed)?;
    let mut trace = IterationTrace::from_result(a.solver, &result);
    if a.no_timing {
        trace = trace.without_timing();
    }
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    write_output(a.output.as_ref(), &buf)?;
    if a.output.is_some() {
        eprintln!(
            "{}: {} after {} solves",
            a.solver, result.status, result.solves
        );
    }
    Ok(exit_for(result.status))
}

fn cmd_gen(a: GenArgs) -> Result<i32> {
    let spec = a.generator.spec(a.seed)?;
    let generated = spec.generate()?;
    if !generated.density_reached {
        eprintln!(
            "warning: target density not reached, achieved {:.4}",
            generated.density
        );
    }
    let mut meta = vec![
        ("family".to_string(), spec.family.to_string()),
        ("seed".to_string(), spec.seed.to_string()),
    ];
    for (k, v) in [
        ("epsilon", spec.epsilon),
        ("density", spec.density),
        ("cond", spec.cond),
    ] {
        if let Some(v) = v {
            meta.push((k.to_string(), format!("{v:e}")));
        }
    }
    let format = match a.format {
        Some(FormatName::Dense) => MatrixFormat::Dense,
        Some(FormatName::Coo) => MatrixFormat::Coo,
        None if spec.family == Family::Hard => MatrixFormat::Dense,
        None => MatrixFormat::Coo,
    };
    let text = problem_file::write(&generated.problem, &meta, format);
    write_output(a.output.as_ref(), text.as_bytes())?;
    Ok(0)
}
