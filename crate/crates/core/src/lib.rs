//! Period-two and translation-invariant splitting Gibbs measures of the
//! q-state Potts model on the Cayley tree of order k.
//!
//! Boundary fields live in `R^{q-1}` with the last spin state pinned to zero.
//! A period-two measure is a pair `(h_even, h_odd)` with
//! `h_even = k·F(h_odd)` and `h_odd = k·F(h_even)`; the solvers reduce this
//! system on the invariant sets `I_m` and `I'_m` to a single scalar equation.

mod dd;
pub mod catalog;
pub mod error;
pub mod invariant;
pub mod model;
pub mod oracle;
pub mod solver;
pub mod tree;

pub use catalog::{classify, orbit_expand, total_lower_bound, Classification, CountReport, MeasureDescriptor};
pub use error::{Error, Result};
pub use invariant::{InvariantSet, ReducedScalar, SetKind};
pub use model::{FieldVector, ModelParams, PeriodTwoField};
pub use oracle::{check_consistency, ConsistencyReport, OracleConfig};
pub use solver::{solve_set, SolveOutcome, SolverConfig};
pub use tree::FiniteTree;
