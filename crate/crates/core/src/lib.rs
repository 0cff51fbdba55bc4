//! Solvers for strictly convex quadratic programs with nonnegativity constraints,
//!
//! ```text
//! min 1/2 x'Qx + g'x   s.t.  x >= 0,
//! ```
//!
//! built around a randomized primal-dual active set method (RAS), together with the
//! full-exchange method of Kunisch and Rendl, a feasible one-index-at-a-time active
//! set method, an exhaustive oracle for small problems, seeded benchmark generators
//! and a benchmark harness.
//!
//! ```
//! use rasqp::{ras_solve, QpProblem, RasConfig};
//!
//! let p = QpProblem::dense(2, vec![4.0, 1.0, 1.0, 3.0], vec![-1.0, -2.0]).unwrap();
//! let r = ras_solve(&p, &RasConfig::default()).unwrap();
//! assert!(r.is_optimal());
//! assert!((r.point.x[0] - 1.0 / 11.0).abs() < 1e-12);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active_set;
pub mod bench;
pub mod error;
pub mod exchange_asymmetry;
pub mod generate;
pub mod index_set;
pub mod matrix;
pub mod model;
pub mod rng;
pub mod solvers;
pub mod spd;

pub use active_set::{ChangeProbabilities, Partition};
pub use error::{Error, Result};
pub use generate::{gen_easy, gen_hard, gen_medium, Family, GeneratorSpec};
pub use index_set::IndexSet;
pub use matrix::SymMatrix;
pub use model::{KktPoint, KktResidual, QpProblem, SolveResult, SolveStatus, TraceRow};
pub use solvers::{
    brute_force_solve, fletcher_solve, generic_ras_solve, kr_solve, ras_solve, FletcherConfig,
    GenericRasConfig, KrConfig, ProbabilityRule, RasConfig,
};
