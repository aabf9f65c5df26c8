//! Schedulability analysis for sporadic parallel DAG tasks on identical
//! multiprocessors under global rate-monotonic (G-RM) scheduling, with global
//! EDF bounds for comparison.
//!
//! The crate is layered bottom-up:
//!
//! * [`model`]: tasks, task sets, validation, volume / critical path metrics.
//! * [`work`]: the infinite-processor schedule S∞,s and the `q` / `work`
//!   functions built on it.
//! * [`bounds`]: closed-form utilization-tensity thresholds, work bounds and
//!   capacity augmentation constants.
//! * [`analysis`]: the schedulability tests and their verdicts.
//! * [`taskgen`], [`sim`], [`experiments`]: random task sets, a discrete-time
//!   global scheduler simulator, and acceptance-ratio sweeps.
//!
//! Time, work and periods are integers. Utilizations, tensities and every
//! quantity a verdict depends on are exact [`Rational`]s; [`Scalar`] lets the
//! same formulas run in `f64` for plotting.

pub mod analysis;
pub mod bounds;
pub mod experiments;
pub mod fixtures;
pub mod io;
pub mod model;
pub mod scalar;
pub mod sim;
pub mod taskgen;
pub mod work;

use num_bigint::BigInt;

pub use analysis::{Decision, TestKind, Verdict};
pub use model::{validate, DagTask, TaskId, TaskMetrics, TaskSet, Time, VertexId};
pub use scalar::Scalar;

/// Exact rational used for every verdict-relevant quantity.
pub type Rational = num_rational::BigRational;

/// S∞ schedule with exact start and finish times.
pub type ExactSchedule = work::SInftySchedule<Rational>;
/// S∞ schedule in double precision.
pub type FloatSchedule = work::SInftySchedule<f64>;
/// Work profile with exact `q` / `work` values.
pub type ExactWorkProfile = work::WorkProfile<Rational>;
/// Work profile in double precision.
pub type FloatWorkProfile = work::WorkProfile<f64>;

/// `numer / denom` as a [`Rational`].
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}
