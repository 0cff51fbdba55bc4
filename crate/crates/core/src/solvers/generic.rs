use std::fmt;
use std::sync::Arc;

use crate::active_set::{next_sets, select_exchange_generic, Partition};
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::model::{QpProblem, SolveResult, SolveStatus};
use crate::rng::{stream_rng, Stream, DEFAULT_SEED};
use crate::spd::DEFAULT_DENSE_THRESHOLD;

use super::ras::RESAMPLES_PER_INDEX;
use super::{check_tol, initial_sets, numerical_failure, solve_step, Recorder};

type RuleFn = dyn Fn(&Partition) -> (Vec<f64>, Vec<f64>) + Send + Sync;

/// Exchange probabilities for `Im` and `Am` as a function of the current partition.
#[derive(Clone)]
pub enum ProbabilityRule {
    /// The same probability for every infeasible index.
    Constant(f64),
    /// Returns one probability per element of `Im` and of `Am`, in ascending order.
    Custom(Arc<RuleFn>),
}

impl ProbabilityRule {
    fn probabilities(&self, partition: &Partition) -> (Vec<f64>, Vec<f64>) {
        match self {
            ProbabilityRule::Constant(p) => {
                (vec![*p; partition.im.len()], vec![*p; partition.am.len()])
            }
            ProbabilityRule::Custom(f) => f(partition),
        }
    }
}

impl fmt::Debug for ProbabilityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbabilityRule::Constant(p) => write!(f, "Constant({p})"),
            ProbabilityRule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GenericRasConfig {
    /// Probabilities must stay in `[sigma, 1 - sigma]`, `0 < sigma <= 0.5`.
    pub sigma: f64,
    pub rule: ProbabilityRule,
    pub tol: f64,
    pub initial_active: Option<IndexSet>,
    pub max_solves: usize,
    pub seed: u64,
    pub dense_threshold: usize,
    pub record_sets: bool,
}

impl Default for GenericRasConfig {
    fn default() -> Self {
        GenericRasConfig {
            sigma: 0.5,
            rule: ProbabilityRule::Constant(0.5),
            tol: 1e-8,
            initial_active: None,
            max_solves: 10_000,
            seed: DEFAULT_SEED,
            dense_threshold: DEFAULT_DENSE_THRESHOLD,
            record_sets: false,
        }
    }
}

/// Generic random active set method: each infeasible index is exchanged with a
/// probability bounded away from 0 and 1.
pub fn generic_ras_solve(problem: &QpProblem, cfg: &GenericRasConfig) -> Result<SolveResult> {
    check_tol(cfg.tol)?;
    if !(cfg.sigma > 0.0 && cfg.sigma <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "sigma must lie in (0, 0.5], got {}",
            cfg.sigma
        )));
    }
    let n = problem.n();
    let (mut inactive, mut active) = initial_sets(n, cfg.initial_active.as_ref())?;
    let mut rng = stream_rng(cfg.seed, Stream::Solver);
    let mut rec = Recorder::new(cfg.record_sets);

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
                return Ok(numerical_failure(problem, None, rec))
            }
            Err(e) => return Err(e),
        };
        let partition = step.partition;
        if partition.is_kkt() {
            return Ok(rec.finish(problem, step.point, SolveStatus::Optimal));
        }
        if rec.solves() >= cfg.max_solves {
            return Ok(rec.finish(problem, step.point, SolveStatus::IterationCapReached));
        }
        let mut resamples = 0;
        let exchange = loop {
            let (p_im, p_am) = cfg.rule.probabilities(&partition);
            if p_im.len() != partition.im.len() {
                return Err(Error::ProbabilityLength {
                    expected: partition.im.len(),
                    found: p_im.len(),
                });
            }
            if p_am.len() != partition.am.len() {
                return Err(Error::ProbabilityLength {
                    expected: partition.am.len(),
                    found: p_am.len(),
                });
            }
            let ex = select_exchange_generic(&partition, &p_im, &p_am, cfg.sigma, &mut rng)?;
            if !ex.is_empty() {
                break ex;
            }
            // Unchanged sets would reproduce the same solve; draw again instead.
            resamples += 1;
            if resamples > RESAMPLES_PER_INDEX * n {
                return Ok(rec.finish(problem, step.point, SolveStatus::IterationCapReached));
            }
        };
        let (i_new, a_new) = next_sets(&partition, &exchange);
        inactive = i_new;
        active = a_new;
    }
}
