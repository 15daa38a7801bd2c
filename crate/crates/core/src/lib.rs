//! Solver toolkit for goal-oriented POMDPs whose policies are written as
//! parameterized belief-state-query (BSQ) preferences.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the benchmarks and the CLI use.

pub mod bench;
pub mod bsq;
pub mod domains;
pub mod interval;
pub mod oracle;
pub mod policy;
pub mod pomdp;
pub mod prs;
pub mod scalar;
pub mod seeding;

pub use bsq::{parse_preference, BsqError, BsqPreference};
pub use interval::{Bound, IntervalError, IntervalSet, ParamBox, ParamDim, ParamSpace};
pub use pomdp::{Belief, GPomdp, PomdpError, TrajectoryRecord};
pub use scalar::Scalar;

pub type Pref = BsqPreference<f64>;

pub type Region = IntervalSet<f64>;
pub type Space = ParamSpace<f64>;
pub type Model = GPomdp<f64>;
pub type BeliefState = Belief<f64>;
pub use bench::{
    evaluate_policy, heatmap_sweep, rcompliant_baseline, BaselineReport, BenchError, EvalReport,
    HeatmapGrid,
};
pub use domains::{load_domain, Domain, DomainError, DomainKind};
pub use oracle::{build_tree, oracle_optimum, ExactPartition, OracleError, StrategyTree};
pub use policy::{simulate, simulate_with_interval, PolicyError};
pub use prs::{prs_solve, Partition, PrsError, Selector, Snapshot, SolveResult, SolverConfig};
pub type Solution = SolveResult<f64>;
