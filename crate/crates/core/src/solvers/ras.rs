use crate::active_set::{categorize, next_sets, select_exchange_ras, ChangeProbabilities, History};
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::model::{QpProblem, SolveResult, SolveStatus};
use crate::rng::{stream_rng, Stream, DEFAULT_SEED};
use crate::spd::DEFAULT_DENSE_THRESHOLD;

use super::{check_tol, initial_sets, numerical_failure, solve_step, Recorder};

/// Random active set method with six category probabilities.
#[derive(Clone, Debug)]
pub struct RasConfig {
    pub probs: ChangeProbabilities,
    /// Tolerance on dual nonnegativity violation.
    pub tol: f64,
    /// Initial active set; `None` means every index.
    pub initial_active: Option<IndexSet>,
    pub max_solves: usize,
    pub seed: u64,
    pub dense_threshold: usize,
    /// Keep a copy of every solved inactive set in the result.
    pub record_sets: bool,
}

impl Default for RasConfig {
    fn default() -> Self {
        RasConfig {
            probs: ChangeProbabilities::TUNED,
            tol: 1e-8,
            initial_active: None,
            max_solves: 10_000,
            seed: DEFAULT_SEED,
            dense_threshold: DEFAULT_DENSE_THRESHOLD,
            record_sets: false,
        }
    }
}

/// Empty draws allowed in a row, per variable, before giving up.
pub(crate) const RESAMPLES_PER_INDEX: usize = 10;

pub fn ras_solve(problem: &QpProblem, cfg: &RasConfig) -> Result<SolveResult> {
    check_tol(cfg.tol)?;
    let n = problem.n();
    let (mut inactive, mut active) = initial_sets(n, cfg.initial_active.as_ref())?;
    let mut rng = stream_rng(cfg.seed, Stream::Solver);
    let mut rec = Recorder::new(cfg.record_sets);
    let mut history = History::initial(n);
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
        let partition = step.partition;
        last = Some(step.point);

        let mut resamples = 0;
        let exchange = loop {
            let cats = categorize(&partition, &history)?;
            if partition.is_kkt() {
                let point = last.take().expect("point after solve");
                return Ok(rec.finish(problem, point, SolveStatus::Optimal));
            }
            if rec.solves() >= cfg.max_solves {
                let point = last.take().expect("point after solve");
                return Ok(rec.finish(problem, point, SolveStatus::IterationCapReached));
            }
            let ex = select_exchange_ras(&cats, &cfg.probs, &mut rng);
            if !ex.is_empty() {
                break ex;
            }
            // Same active set again: no new solve, only the history moves on.
            resamples += 1;
            if resamples > RESAMPLES_PER_INDEX * n {
                let point = last.take().expect("point after solve");
                return Ok(rec.finish(problem, point, SolveStatus::IterationCapReached));
            }
            history = History::after_resample(&partition);
        };

        let (i_new, a_new) = next_sets(&partition, &exchange);
        history = History::after_exchange(&partition, &exchange);
        inactive = i_new;
        active = a_new;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::test_support::random_dense;
    use crate::solvers::{brute_force_solve, kr_solve, KrConfig};

    #[test]
    fn one_dimensional_examples() {
        let p = QpProblem::dense(1, vec![2.0], vec![-4.0]).unwrap();
        let r = ras_solve(&p, &RasConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.point.x, vec![2.0]);
        assert_eq!(r.objective, -4.0);

        let p = QpProblem::dense(1, vec![2.0], vec![4.0]).unwrap();
        let r = ras_solve(&p, &RasConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.solves, 1);
        assert_eq!(r.point.x, vec![0.0]);
        assert_eq!(r.point.s, vec![4.0]);
    }

    #[test]
    fn interior_optimum_in_one_solve() {
        // Q = [[4,1],[1,3]], g = [-1,-2]: unconstrained minimizer [1/11, 7/11] > 0
        let p = QpProblem::dense(2, vec![4.0, 1.0, 1.0, 3.0], vec![-1.0, -2.0]).unwrap();
        let cfg = RasConfig {
            initial_active: Some(IndexSet::new()),
            ..RasConfig::default()
        };
        let r = ras_solve(&p, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.solves, 1);
        assert_eq!(r.avg_subsystem_size, 2.0);
    }

    #[test]
    fn matches_brute_force_small() {
        for seed in 0..30 {
            let n = 2 + (seed as usize % 9);
            let p = random_dense(n, seed);
            let cfg = RasConfig {
                seed,
                tol: 1e-10,
                ..RasConfig::default()
            };
            let r = ras_solve(&p, &cfg).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal);
            let b = brute_force_solve(&p, 1e-10).unwrap();
            for (a, b) in r.point.x.iter().zip(&b.x) {
                assert!((a - b).abs() <= 1e-8, "seed {seed}");
            }
        }
    }

    #[test]
    fn certain_probabilities_follow_kr() {
        for seed in 0..20 {
            let p = random_dense(8, 100 + seed);
            let kr = kr_solve(
                &p,
                &KrConfig {
                    record_sets: true,
                    ..KrConfig::default()
                },
            )
            .unwrap();
            let ras = ras_solve(
                &p,
                &RasConfig {
                    probs: ChangeProbabilities::certain(),
                    max_solves: kr.solves,
                    record_sets: true,
                    seed,
                    ..RasConfig::default()
                },
            )
            .unwrap();
            assert_eq!(ras.inactive_sets, kr.inactive_sets);
        }
    }

    #[test]
    fn cap_reports_iteration_cap() {
        let p = random_dense(10, 7);
        let r = ras_solve(
            &p,
            &RasConfig {
                max_solves: 1,
                ..RasConfig::default()
            },
        )
        .unwrap();
        assert_eq!(r.solves, 1);
        if !r.is_optimal() {
            assert_eq!(r.status, SolveStatus::IterationCapReached);
        }
    }

    #[test]
    fn metrics_are_consistent() {
        let p = random_dense(12, 5);
        let r = ras_solve(&p, &RasConfig::default()).unwrap();
        assert_eq!(r.solves, r.trace.len());
        let mean = r.trace.iter().map(|t| t.inactive as f64).sum::<f64>() / r.solves as f64;
        assert!((mean - r.avg_subsystem_size).abs() < 1e-12);
        assert_eq!(r.trace.last().unwrap().infeasible(), 0);
    }

    #[test]
    fn rejects_bad_config() {
        let p = random_dense(3, 1);
        let bad = RasConfig {
            initial_active: Some(IndexSet::from(vec![5])),
            ..RasConfig::default()
        };
        assert!(ras_solve(&p, &bad).is_err());
        let bad = RasConfig {
            tol: -1.0,
            ..RasConfig::default()
        };
        assert!(ras_solve(&p, &bad).is_err());
    }
}
