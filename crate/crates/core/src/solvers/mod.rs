//! Active set solvers. Every solver reports through [`SolveResult`] with the same
//! metric semantics: `solves` counts every reduced subsystem solve (the final
//! verifying one included) and `avg_subsystem_size` is the mean `|I|` over them.

mod brute;
mod fletcher;
mod generic;
mod kr;
mod ras;

pub use brute::{brute_force_solve, BRUTE_FORCE_MAX_N};
pub use fletcher::{fletcher_solve, fletcher_solve_traced, FletcherConfig, FletcherPath};
pub use generic::{generic_ras_solve, GenericRasConfig, ProbabilityRule};
pub use kr::{kr_solve, KrConfig};
pub use ras::{ras_solve, RasConfig};

use std::time::Instant;

use crate::active_set::{classify, Partition};
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::model::{KktPoint, QpProblem, SolveResult, SolveStatus, TraceRow};
use crate::spd::{embed_point, solve_subsystem_with, SubsystemSolution};

/// Resolves an optional initial active set (default: every index).
pub(crate) fn initial_sets(n: usize, initial: Option<&IndexSet>) -> Result<(IndexSet, IndexSet)> {
    let active = match initial {
        Some(a) => {
            if let Some(mx) = a.max() {
                if mx >= n {
                    return Err(Error::IndexOutOfRange { index: mx, n });
                }
            }
            a.clone()
        }
        None => IndexSet::full(n),
    };
    Ok((active.complement(n), active))
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tol must be >= 0, got {tol}"
        )));
    }
    Ok(())
}

/// Collects trace rows and solve metrics during one run.
pub(crate) struct Recorder {
    start: Instant,
    trace: Vec<TraceRow>,
    size_sum: usize,
    record_sets: bool,
    sets: Vec<IndexSet>,
}

impl Recorder {
    pub(crate) fn new(record_sets: bool) -> Self {
        Recorder {
            start: Instant::now(),
            trace: Vec::new(),
            size_sum: 0,
            record_sets,
            sets: Vec::new(),
        }
    }

    pub(crate) fn solves(&self) -> usize {
        self.trace.len()
    }

    pub(crate) fn record(&mut self, inactive: &IndexSet, im: usize, am: usize) {
        self.size_sum += inactive.len();
        self.trace.push(TraceRow {
            iteration: self.trace.len() + 1,
            elapsed: self.start.elapsed().as_secs_f64(),
            im,
            am,
            inactive: inactive.len(),
        });
        if self.record_sets {
            self.sets.push(inactive.clone());
        }
    }

    pub(crate) fn finish(
        self,
        problem: &QpProblem,
        point: KktPoint,
        status: SolveStatus,
    ) -> SolveResult {
        let solves = self.trace.len();
        let avg = if solves == 0 {
            0.0
        } else {
            self.size_sum as f64 / solves as f64
        };
        SolveResult {
            objective: problem.objective_unchecked(&point.x),
            point,
            status,
            solves,
            avg_subsystem_size: avg,
            trace: self.trace,
            inactive_sets: self.sets,
            elapsed: self.start.elapsed().as_secs_f64(),
        }
    }
}

/// Outcome of one counted solve: the embedded point and its classification.
pub(crate) struct Step {
    pub point: KktPoint,
    pub partition: Partition,
    pub solution: SubsystemSolution,
}

/// Solves the subsystem for `(I, A)`, classifies the result and records it.
pub(crate) fn solve_step(
    problem: &QpProblem,
    inactive: &IndexSet,
    active: &IndexSet,
    tol: f64,
    dense_threshold: usize,
    rec: &mut Recorder,
) -> Result<Step> {
    let solution = solve_subsystem_with(problem, inactive, active, dense_threshold)?;
    let point = embed_point(problem.n(), inactive, active, &solution)?;
    let partition = classify(&point, inactive, active, tol);
    rec.record(inactive, partition.im.len(), partition.am.len());
    Ok(Step {
        point,
        partition,
        solution,
    })
}

pub(crate) fn numerical_failure(
    problem: &QpProblem,
    last: Option<KktPoint>,
    rec: Recorder,
) -> SolveResult {
    let point = last.unwrap_or_else(|| KktPoint::zeros(problem.n()));
    rec.finish(problem, point, SolveStatus::NumericalFailure)
}
