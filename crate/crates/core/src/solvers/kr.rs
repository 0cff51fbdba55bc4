use std::collections::HashSet;

use crate::active_set::{next_sets, Exchange};
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::model::{QpProblem, SolveResult, SolveStatus};
use crate::spd::DEFAULT_DENSE_THRESHOLD;

use super::{check_tol, initial_sets, numerical_failure, solve_step, Recorder};

/// Full-exchange primal-dual active set method (Kunisch-Rendl).
#[derive(Clone, Debug)]
pub struct KrConfig {
    pub tol: f64,
    pub initial_active: Option<IndexSet>,
    /// Solve budget; hitting it counts as a cycle.
    pub max_iterations: usize,
    /// Stop as soon as an active set repeats.
    pub detect_cycles: bool,
    pub dense_threshold: usize,
    pub record_sets: bool,
}

impl Default for KrConfig {
    fn default() -> Self {
        KrConfig {
            tol: 1e-8,
            initial_active: None,
            max_iterations: 200,
            detect_cycles: true,
            dense_threshold: DEFAULT_DENSE_THRESHOLD,
            record_sets: false,
        }
    }
}

pub fn kr_solve(problem: &QpProblem, cfg: &KrConfig) -> Result<SolveResult> {
    check_tol(cfg.tol)?;
    if cfg.max_iterations == 0 {
        return Err(Error::InvalidParameter(
            "max_iterations must be >= 1".into(),
        ));
    }
    let (mut inactive, mut active) = initial_sets(problem.n(), cfg.initial_active.as_ref())?;
    let mut rec = Recorder::new(cfg.record_sets);
    let mut visited: HashSet<IndexSet> = HashSet::new();
    visited.insert(active.clone());
    let mut last = None;

    loop {
        let step = match solve_step(
            problem,
            &inactive,
            &active,
            cfg.tol,
            cfg.dense_threshold,
            &mut rec,
        ) {
            Ok(s) => s,
            Err(Error::FactorizationFailure { .. }) => {
                return Ok(numerical_failure(problem, last, rec))
            }
            Err(e) => return Err(e),
        };
        if step.partition.is_kkt() {
            return Ok(rec.finish(problem, step.point, SolveStatus::Optimal));
        }
        if rec.solves() >= cfg.max_iterations {
            return Ok(rec.finish(problem, step.point, SolveStatus::CycleDetected));
        }
        let (i_new, a_new) = next_sets(&step.partition, &Exchange::full(&step.partition));
        if cfg.detect_cycles && !visited.insert(a_new.clone()) {
            return Ok(rec.finish(problem, step.point, SolveStatus::CycleDetected));
        }
        inactive = i_new;
        active = a_new;
        last = Some(step.point);
    }
}
