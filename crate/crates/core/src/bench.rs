//! Benchmark grids: repeated seeded trials per (generator, solver) cell, aggregated
//! into time / solve / avgI / fail rows, plus CSV emitters for rows and traces.

use std::fmt::{self, Write as _};
use std::io;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::{Family, GeneratorSpec};
use crate::model::{QpProblem, SolveResult, SolveStatus, TraceRow};
use crate::solvers::{
    fletcher_solve, generic_ras_solve, kr_solve, ras_solve, FletcherConfig, GenericRasConfig,
    KrConfig, RasConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Ras,
    Generic,
    Kr,
    Fletcher,
}

impl SolverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Ras => "ras",
            SolverKind::Generic => "generic",
            SolverKind::Kr => "kr",
            SolverKind::Fletcher => "fletcher",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ras" => Ok(SolverKind::Ras),
            "generic" => Ok(SolverKind::Generic),
            "kr" => Ok(SolverKind::Kr),
            "fletcher" => Ok(SolverKind::Fletcher),
            other => Err(Error::InvalidParameter(format!("unknown solver {other:?}"))),
        }
    }
}

/// Solver choice plus the knobs a benchmark cell may override.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub kind: SolverKind,
    /// `None` uses the family's default tolerance.
    #[serde(default)]
    pub tol: Option<f64>,
    /// Solve cap; `None` keeps each solver's default.
    #[serde(default)]
    pub max_solves: Option<usize>,
}

impl SolverSpec {
    pub fn new(kind: SolverKind) -> Self {
        SolverSpec {
            kind,
            tol: None,
            max_solves: None,
        }
    }

    /// Runs the solver with RNG seed `seed` (ignored by deterministic solvers).
    pub fn run(&self, problem: &QpProblem, tol: f64, seed: u64) -> Result<SolveResult> {
        match self.kind {
            SolverKind::Ras => {
                let mut cfg = RasConfig {
                    tol,
                    seed,
                    ..RasConfig::default()
                };
                if let Some(m) = self.max_solves {
                    cfg.max_solves = m;
                }
                ras_solve(problem, &cfg)
            }
            SolverKind::Generic => {
                let mut cfg = GenericRasConfig {
                    tol,
                    seed,
                    ..GenericRasConfig::default()
                };
                if let Some(m) = self.max_solves {
                    cfg.max_solves = m;
                }
                generic_ras_solve(problem, &cfg)
            }
            SolverKind::Kr => {
                let mut cfg = KrConfig {
                    tol,
                    ..KrConfig::default()
                };
                if let Some(m) = self.max_solves {
                    cfg.max_iterations = m;
                }
                kr_solve(problem, &cfg)
            }
            SolverKind::Fletcher => fletcher_solve(
                problem,
                &FletcherConfig {
                    tol,
                    max_solves: self.max_solves,
                    ..FletcherConfig::default()
                },
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    /// The seed of this spec is replaced per trial.
    pub generator: GeneratorSpec,
    pub solver: SolverSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkPlan {
    pub grid: Vec<BenchCell>,
    pub trials: usize,
    pub base_seed: u64,
    /// Seconds of solver time after which a trial counts as failed.
    pub time_limit: f64,
    /// Worker threads; `None` lets the pool decide.
    pub threads: Option<usize>,
}

impl Default for BenchmarkPlan {
    fn default() -> Self {
        BenchmarkPlan {
            grid: Vec::new(),
            trials: 10,
            base_seed: crate::rng::DEFAULT_SEED,
            time_limit: 300.0,
            threads: None,
        }
    }
}

impl BenchmarkPlan {
    /// Cross product of generator specs and solvers.
    pub fn from_grid(generators: &[GeneratorSpec], solvers: &[SolverSpec]) -> Self {
        let grid = generators
            .iter()
            .flat_map(|g| {
                solvers.iter().map(move |s| BenchCell {
                    generator: g.clone(),
                    solver: s.clone(),
                })
            })
            .collect();
        BenchmarkPlan {
            grid,
            ..BenchmarkPlan::default()
        }
    }

    /// Reduced version of the reference grids, `n` in {200, 500, 1000}, RAS and KR.
    pub fn desk(family: Family) -> Self {
        let ns = [200, 500, 1000];
        let mut gens = Vec::new();
        for &n in &ns {
            match family {
                Family::Easy => {
                    for e in [1.0, 1e-5, 1e-10, 1e-14] {
                        gens.push(GeneratorSpec::easy(n, e, 0));
                    }
                }
                Family::Medium => {
                    for d in [0.1, 0.01] {
                        for c in [1e2, 1e6, 1e10, 1e14] {
                            gens.push(GeneratorSpec::medium(n, d, c, 0));
                        }
                    }
                }
                Family::Hard => {
                    for c in [1e6, 1e10, 1e14] {
                        gens.push(GeneratorSpec::hard(n, c, 0));
                    }
                }
            }
        }
        let solvers = [
            SolverSpec::new(SolverKind::Ras),
            SolverSpec::new(SolverKind::Kr),
        ];
        BenchmarkPlan::from_grid(&gens, &solvers)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if !(self.time_limit > 0.0) {
            return Err(Error::InvalidParameter("time limit must be > 0".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be >= 1".into()));
        }
        for cell in &self.grid {
            cell.generator.validate()?;
        }
        Ok(())
    }
}

/// Outcome of a single trial; the solver statuses plus harness-level failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialStatus {
    Optimal,
    IterationCapReached,
    CycleDetected,
    NumericalFailure,
    TimeLimit,
    Error,
}

impl From<SolveStatus> for TrialStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => TrialStatus::Optimal,
            SolveStatus::IterationCapReached => TrialStatus::IterationCapReached,
            SolveStatus::CycleDetected => TrialStatus::CycleDetected,
            SolveStatus::NumericalFailure => TrialStatus::NumericalFailure,
        }
    }
}

/// One machine-format row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub family: Family,
    pub n: usize,
    pub density: Option<f64>,
    pub cond: Option<f64>,
    pub epsilon: Option<f64>,
    pub solver: SolverKind,
    pub trial: usize,
    pub time_s: f64,
    pub solves: usize,
    #[serde(rename = "avgI")]
    pub avg_i: f64,
    pub status: TrialStatus,
}

impl TrialRow {
    fn same_cell(&self, other: &TrialRow) -> bool {
        self.family == other.family
            && self.n == other.n
            && self.density == other.density
            && self.cond == other.cond
            && self.epsilon == other.epsilon
            && self.solver == other.solver
    }

    /// Whether the row's metrics enter the cell means.
    fn included(&self) -> bool {
        match self.solver {
            SolverKind::Kr => self.status == TrialStatus::Optimal,
            _ => !matches!(self.status, TrialStatus::TimeLimit | TrialStatus::Error),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRecord {
    pub family: Family,
    pub n: usize,
    pub density: Option<f64>,
    pub cond: Option<f64>,
    pub epsilon: Option<f64>,
    pub solver: SolverKind,
    /// `None` when no trial was included.
    pub time_mean: Option<f64>,
    pub solve_mean: Option<f64>,
    pub avg_i_mean: Option<f64>,
    /// Trials whose status is not `Optimal`.
    pub fail_count: usize,
    /// Number of trials that entered the means.
    pub included: usize,
    pub rows: Vec<TrialRow>,
    /// Generator or solver error messages, by trial.
    pub errors: Vec<(usize, String)>,
}

impl BenchmarkRecord {
    pub fn trials(&self) -> usize {
        self.rows.len()
    }
}

/// Groups rows by cell (first-appearance order) and computes the means.
pub fn aggregate(rows: &[TrialRow]) -> Vec<BenchmarkRecord> {
    let mut groups: Vec<Vec<TrialRow>> = Vec::new();
    for row in rows {
        match groups.iter_mut().find(|g| g[0].same_cell(row)) {
            Some(g) => g.push(row.clone()),
            None => groups.push(vec![row.clone()]),
        }
    }
    groups.into_iter().map(record_from_rows).collect()
}

fn record_from_rows(rows: Vec<TrialRow>) -> BenchmarkRecord {
    let first = &rows[0];
    let inc: Vec<&TrialRow> = rows.iter().filter(|r| r.included()).collect();
    let mean = |f: &dyn Fn(&TrialRow) -> f64| {
        if inc.is_empty() {
            None
        } else {
            Some(inc.iter().map(|r| f(r)).sum::<f64>() / inc.len() as f64)
        }
    };
    BenchmarkRecord {
        family: first.family,
        n: first.n,
        density: first.density,
        cond: first.cond,
        epsilon: first.epsilon,
        solver: first.solver,
        time_mean: mean(&|r| r.time_s),
        solve_mean: mean(&|r| r.solves as f64),
        avg_i_mean: mean(&|r| r.avg_i),
        fail_count: rows
            .iter()
            .filter(|r| r.status != TrialStatus::Optimal)
            .count(),
        included: inc.len(),
        errors: Vec::new(),
        rows,
    }
}

fn run_trial(cell: &BenchCell, trial: usize, plan: &BenchmarkPlan) -> (TrialRow, Option<String>) {
    let g = &cell.generator;
    let seed = plan.base_seed.wrapping_add(trial as u64);
    let mut row = TrialRow {
        family: g.family,
        n: g.n,
        density: g.density,
        cond: g.cond,
        epsilon: g.epsilon,
        solver: cell.solver.kind,
        trial,
        time_s: 0.0,
        solves: 0,
        avg_i: 0.0,
        status: TrialStatus::Error,
    };
    let generated = match g.with_seed(seed).generate() {
        Ok(p) => p,
        Err(e) => return (row, Some(format!("generator: {e}"))),
    };
    let tol = cell.solver.tol.unwrap_or_else(|| g.family.default_tol());
    let start = Instant::now();
    let outcome = cell.solver.run(&generated.problem, tol, seed);
    let wall = start.elapsed().as_secs_f64();
    match outcome {
        Ok(r) => {
            row.time_s = r.elapsed;
            row.solves = r.solves;
            row.avg_i = r.avg_subsystem_size;
            row.status = if wall > plan.time_limit {
                TrialStatus::TimeLimit
            } else {
                r.status.into()
            };
            (row, None)
        }
        Err(e) => (row, Some(format!("solver: {e}"))),
    }
}

/// Runs every cell for `plan.trials` trials. Trial `t` of every cell uses seed
/// `base_seed + t` for both the generator and the solver (on separate streams), so
/// results do not depend on the worker count.
pub fn run_plan(plan: &BenchmarkPlan) -> Result<Vec<BenchmarkRecord>> {
    plan.validate()?;
    let tasks: Vec<(usize, usize)> = (0..plan.grid.len())
        .flat_map(|c| (0..plan.trials).map(move |t| (c, t)))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = plan.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let results: Vec<(TrialRow, Option<String>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, t)| run_trial(&plan.grid[c], t, plan))
            .collect()
    });
    let mut records = Vec::with_capacity(plan.grid.len());
    for chunk in results.chunks(plan.trials) {
        let rows = chunk.iter().map(|(r, _)| r.clone()).collect();
        let mut rec = record_from_rows(rows);
        rec.errors = chunk
            .iter()
            .filter_map(|(r, e)| e.clone().map(|m| (r.trial, m)))
            .collect();
        records.push(rec);
    }
    Ok(records)
}

/// Three significant digits.
fn sig3(x: f64) -> String {
    if x == 0.0 {
        return "0.00".into();
    }
    let e = x.abs().log10().floor() as i32;
    if (-3..3).contains(&e) {
        format!("{:.*}", (2 - e) as usize, x)
    } else {
        format!("{x:.2e}")
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:e}"))
}

/// Human-readable table, one line per record: cell identity then time, solve, avgI,
/// fail.
pub fn emit_table(records: &[BenchmarkRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<7} {:>6} {:>8} {:>8} {:>8} {:<8} {:>10} {:>8} {:>10} {:>5}",
        "family", "n", "density", "cond", "epsilon", "solver", "time", "solve", "avgI", "fail"
    );
    for r in records {
        let _ = writeln!(
            out,
            "{:<7} {:>6} {:>8} {:>8} {:>8} {:<8} {:>10} {:>8} {:>10} {:>5}",
            r.family,
            r.n,
            opt_num(r.density),
            opt_num(r.cond),
            opt_num(r.epsilon),
            r.solver,
            r.time_mean.map_or_else(|| "nan".into(), sig3),
            r.solve_mean
                .map_or_else(|| "nan".into(), |v| format!("{v:.1}")),
            r.avg_i_mean
                .map_or_else(|| "nan".into(), |v| format!("{v:.3}")),
            r.fail_count
        );
    }
    out
}

/// Machine format: header then one row per trial.
pub fn write_rows<W: io::Write>(rows: &[TrialRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    // serde only emits the header with the first record
    if rows.is_empty() {
        wtr.write_record([
            "family", "n", "density", "cond", "epsilon", "solver", "trial", "time_s", "solves",
            "avgI", "status",
        ])
        .map_err(csv_err)?;
    }
    for r in rows {
        wtr.serialize(r).map_err(csv_err)?;
    }
    wtr.flush()
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

pub fn read_rows<R: io::Read>(r: R) -> Result<Vec<TrialRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidParameter(format!("csv: {e}"))
}

pub fn all_rows(records: &[BenchmarkRecord]) -> Vec<TrialRow> {
    records
        .iter()
        .flat_map(|r| r.rows.iter().cloned())
        .collect()
}

/// Per-solve trace of one run, for plotting infeasible counts against time.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    pub solver: SolverKind,
    pub rows: Vec<TraceRow>,
}

#[derive(Serialize, Deserialize)]
struct TraceCsvRow {
    solver: SolverKind,
    iter: usize,
    elapsed_s: f64,
    infeasible: usize,
    inactive_size: usize,
}

impl IterationTrace {
    pub fn from_result(solver: SolverKind, result: &SolveResult) -> Self {
        IterationTrace {
            solver,
            rows: result.trace.clone(),
        }
    }

    /// Zeroes the time column so that repeated runs produce identical files.
    pub fn without_timing(mut self) -> Self {
        for r in &mut self.rows {
            r.elapsed = 0.0;
        }
        self
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            wtr.write_record(["solver", "iter", "elapsed_s", "infeasible", "inactive_size"])
                .map_err(csv_err)?;
        }
        for r in &self.rows {
            wtr.serialize(TraceCsvRow {
                solver: self.solver,
                iter: r.iteration,
                elapsed_s: r.elapsed,
                infeasible: r.infeasible(),
                inactive_size: r.inactive,
            })
            .map_err(csv_err)?;
        }
        wtr.flush()
            .map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}
