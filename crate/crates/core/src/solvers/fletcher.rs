use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::model::{KktPoint, QpProblem, SolveResult, SolveStatus};
use crate::spd::DEFAULT_DENSE_THRESHOLD;

use super::{check_tol, initial_sets, numerical_failure, solve_step, Recorder};

/// Feasible one-index-at-a-time active set method.
#[derive(Clone, Debug)]
pub struct FletcherConfig {
    pub tol: f64,
    pub initial_active: Option<IndexSet>,
    /// Solve budget; `None` means `10 n^2`.
    pub max_solves: Option<usize>,
    pub dense_threshold: usize,
    pub record_sets: bool,
}

impl Default for FletcherConfig {
    fn default() -> Self {
        FletcherConfig {
            tol: 1e-8,
            initial_active: None,
            max_solves: None,
            dense_threshold: DEFAULT_DENSE_THRESHOLD,
            record_sets: false,
        }
    }
}

/// Iterates visited by the feasible method.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FletcherPath {
    /// Objective at the end of each outer iteration.
    pub outer_objectives: Vec<f64>,
    /// Every primal iterate, starting with the initial point.
    pub iterates: Vec<Vec<f64>>,
}

pub fn fletcher_solve(problem: &QpProblem, cfg: &FletcherConfig) -> Result<SolveResult> {
    fletcher_solve_traced(problem, cfg).map(|(r, _)| r)
}

pub fn fletcher_solve_traced(
    problem: &QpProblem,
    cfg: &FletcherConfig,
) -> Result<(SolveResult, FletcherPath)> {
    check_tol(cfg.tol)?;
    let n = problem.n();
    let (mut inactive, mut active) = initial_sets(n, cfg.initial_active.as_ref())?;
    let cap = cfg.max_solves.unwrap_or(10 * n * n);
    let mut rec = Recorder::new(cfg.record_sets);
    let mut path = FletcherPath::default();
    // x = 0 is feasible for any starting partition
    let mut x = vec![0.0; n];
    path.iterates.push(x.clone());

    loop {
        // Inner loop: move toward the subspace minimizer, dropping one blocking index
        // per step until the minimizer itself is feasible.
        let solution = loop {
            if rec.solves() >= cap {
                let point = KktPoint { x, s: vec![0.0; n] };
                return Ok((
                    rec.finish(problem, point, SolveStatus::IterationCapReached),
                    path,
                ));
            }
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
                    return Ok((numerical_failure(problem, None, rec), path))
                }
                Err(e) => return Err(e),
            };
            let target = &step.solution.x_inactive;
            let mut block: Option<(f64, usize)> = None;
            for (&i, &t) in inactive.iter().zip(target) {
                if t < 0.0 {
                    let ratio = x[i] / (x[i] - t);
                    // strict < keeps the smallest index on ties
                    if block.is_none_or(|(r, _)| ratio < r) {
                        block = Some((ratio, i));
                    }
                }
            }
            match block {
                None => {
                    for (&i, &t) in inactive.iter().zip(target) {
                        x[i] = t;
                    }
                    path.iterates.push(x.clone());
                    break step.solution;
                }
                Some((alpha, b)) => {
                    for (&i, &t) in inactive.iter().zip(target) {
                        x[i] = (x[i] + alpha * (t - x[i])).max(0.0);
                    }
                    x[b] = 0.0;
                    path.iterates.push(x.clone());
                    inactive = inactive.difference(&IndexSet::from_sorted_unchecked(vec![b]));
                    active = active.union(&IndexSet::from_sorted_unchecked(vec![b]));
                }
            }
        };

        path.outer_objectives.push(problem.objective_unchecked(&x));

        // Outer loop: release the most negative multiplier, if any.
        let mut worst: Option<(f64, usize)> = None;
        for (&a, &s) in active.iter().zip(&solution.s_active) {
            if s < -cfg.tol && worst.is_none_or(|(w, _)| s < w) {
                worst = Some((s, a));
            }
        }
        match worst {
            None => {
                let mut s_full = vec![0.0; n];
                for (&a, &s) in active.iter().zip(&solution.s_active) {
                    s_full[a] = s;
                }
                let point = KktPoint { x, s: s_full };
                return Ok((rec.finish(problem, point, SolveStatus::Optimal), path));
            }
            Some((_, a)) => {
                let single = IndexSet::from_sorted_unchecked(vec![a]);
                active = active.difference(&single);
                inactive = inactive.union(&single);
            }
        }
    }
}
