//! Problem, KKT point and solve-result types shared by every solver.
//!
//! The problem is `min 1/2 x'Qx + g'x  s.t. x >= 0` with `Q` symmetric positive
//! definite. Its KKT conditions are `Qx + g - s = 0`, `x's = 0`, `x >= 0`, `s >= 0`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::matrix::SymMatrix;
use crate::spd;

/// Relative factor of the stationarity tolerance, `1e-8 * (1 + |g|_inf)`.
pub const STATIONARITY_RTOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct QpProblem {
    q: SymMatrix,
    g: Vec<f64>,
}

impl QpProblem {
    /// Checks dimensions only; positive definiteness is checked by [`QpProblem::validate`].
    pub fn new(q: SymMatrix, g: Vec<f64>) -> Result<Self> {
        if g.len() != q.n() {
            return Err(Error::DimensionMismatch {
                expected: q.n(),
                found: g.len(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(QpProblem { q, g })
    }

    /// Shorthand for a dense problem from row-major `Q`.
    pub fn dense(n: usize, q: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        QpProblem::new(SymMatrix::dense(n, q)?, g)
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn q(&self) -> &SymMatrix {
        &self.q
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// `1/2 x'Qx + g'x`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len())?;
        Ok(self.objective_unchecked(x))
    }

    pub(crate) fn objective_unchecked(&self, x: &[f64]) -> f64 {
        let qx = self.q.mul_vec(x);
        0.5 * spd::dot(x, &qx) + spd::dot(&self.g, x)
    }

    /// Stationarity tolerance used when accepting a point as optimal.
    pub fn stationarity_tol(&self) -> f64 {
        STATIONARITY_RTOL * (1.0 + norm_inf(&self.g))
    }

    pub fn kkt_residual(&self, point: &KktPoint) -> Result<KktResidual> {
        self.check_len(point.x.len())?;
        self.check_len(point.s.len())?;
        let qx = self.q.mul_vec(&point.x);
        let stationarity = qx
            .iter()
            .zip(&self.g)
            .zip(&point.s)
            .fold(0.0f64, |m, ((a, g), s)| m.max((a + g - s).abs()));
        let min_x = point.x.iter().copied().fold(f64::INFINITY, f64::min);
        let min_s = point.s.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(KktResidual {
            stationarity,
            primal_viol: (-min_x).max(0.0),
            dual_viol: (-min_s).max(0.0),
            comp_viol: spd::dot(&point.x, &point.s).abs(),
            scale: 1.0 + norm_inf(&self.g) + self.q.norm_inf() * norm_inf(&point.x),
        })
    }

    /// Succeeds iff `Q` is exactly symmetric and a full Cholesky factorization succeeds.
    pub fn validate(&self) -> Result<()> {
        if !self.q.is_symmetric() {
            return Err(Error::NotSymmetric {
                asymmetry: f64::NAN,
            });
        }
        let all = IndexSet::full(self.n());
        spd::factorize(&self.q, &all, spd::DEFAULT_DENSE_THRESHOLD)
            .map(|_| ())
            .map_err(|e| match e {
                Error::FactorizationFailure { pivot } => Error::NotPositiveDefinite { pivot },
                other => other,
            })
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: len,
            });
        }
        Ok(())
    }
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Primal `x` and multipliers `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktPoint {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
}

impl KktPoint {
    pub fn zeros(n: usize) -> Self {
        KktPoint {
            x: vec![0.0; n],
            s: vec![0.0; n],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktResidual {
    /// `|Qx + g - s|_inf`
    pub stationarity: f64,
    /// `max(0, -min x)`
    pub primal_viol: f64,
    /// `max(0, -min s)`
    pub dual_viol: f64,
    /// `|x's|`
    pub comp_viol: f64,
    /// `1 + |g|_inf + |Q|_inf |x|_inf`, the normwise backward-error scale.
    pub scale: f64,
}

impl KktResidual {
    /// Stationarity relative to the problem and point scale.
    pub fn relative_stationarity(&self) -> f64 {
        self.stationarity / self.scale
    }

    /// Acceptance rule: stationarity within `problem.stationarity_tol()`, exact primal
    /// feasibility, dual violation at most `tol`, exact complementarity.
    pub fn accepts(&self, problem: &QpProblem, tol: f64) -> bool {
        self.stationarity <= problem.stationarity_tol()
            && self.primal_viol == 0.0
            && self.dual_viol <= tol
            && self.comp_viol == 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    IterationCapReached,
    CycleDetected,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::IterationCapReached => "IterationCapReached",
            SolveStatus::CycleDetected => "CycleDetected",
            SolveStatus::NumericalFailure => "NumericalFailure",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolveStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Optimal" => Ok(SolveStatus::Optimal),
            "IterationCapReached" => Ok(SolveStatus::IterationCapReached),
            "CycleDetected" => Ok(SolveStatus::CycleDetected),
            "NumericalFailure" => Ok(SolveStatus::NumericalFailure),
            other => Err(Error::InvalidParameter(format!("unknown status {other:?}"))),
        }
    }
}

/// One row per counted subsystem solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// 1-based solve counter.
    pub iteration: usize,
    /// Seconds since the solver started.
    pub elapsed: f64,
    /// `|Im|` after the solve.
    pub im: usize,
    /// `|Am|` after the solve.
    pub am: usize,
    /// `|I|` of the solved subsystem.
    pub inactive: usize,
}

impl TraceRow {
    pub fn infeasible(&self) -> usize {
        self.im + self.am
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub point: KktPoint,
    pub status: SolveStatus,
    /// Number of subsystem solves, including the final verifying one.
    pub solves: usize,
    /// Mean `|I|` over the counted solves (0 when none).
    pub avg_subsystem_size: f64,
    pub trace: Vec<TraceRow>,
    pub objective: f64,
    /// Inactive set of every counted solve, filled only when the solver config asks
    /// for it.
    pub inactive_sets: Vec<IndexSet>,
    /// Total wall time in seconds.
    pub elapsed: f64,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
