use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::model::{KktPoint, QpProblem};
use crate::spd::{embed_point, solve_subsystem};

pub const BRUTE_FORCE_MAX_N: usize = 20;

/// Enumerates every inactive set and returns the lowest-objective KKT point.
/// Correctness oracle for small problems.
pub fn brute_force_solve(problem: &QpProblem, tol: f64) -> Result<KktPoint> {
    let n = problem.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::DimensionTooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let mut best: Option<(f64, KktPoint)> = None;
    for mask in 0u32..(1u32 << n) {
        let inactive =
            IndexSet::from_sorted_unchecked((0..n).filter(|i| mask >> i & 1 == 1).collect());
        let active = inactive.complement(n);
        let sol = solve_subsystem(problem, &inactive, &active).map_err(|e| match e {
            Error::FactorizationFailure { pivot } => Error::NotPositiveDefinite { pivot },
            other => other,
        })?;
        if sol.x_inactive.iter().any(|&v| v < 0.0) || sol.s_active.iter().any(|&s| s < -tol) {
            continue;
        }
        let point = embed_point(n, &inactive, &active, &sol)?;
        let obj = problem.objective_unchecked(&point.x);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, point));
        }
    }
    best.map(|(_, p)| p).ok_or(Error::NoKktPoint)
}
