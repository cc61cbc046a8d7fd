//! Planar four-bar path synthesis with differential evolution.
//!
//! The crate compares five ways of handling the Grashof and point-ordering
//! constraints while a DE search fits a coupler curve to target points:
//! a static penalty (NSI), resampling at initialization or every generation
//! (ASI-IG, ASI-AG), a Grashof-only bar generator (LSI) and in-place repair
//! (SSI).
//!
//! ```
//! use mechsynth_core::{builtin_case, run, DEConfig, StrategyKind, StrategySpec};
//!
//! let case = builtin_case("2").unwrap();
//! let cfg = DEConfig { itermax: 10, ..case.default_de }.with_seed(1);
//! let record = run(&case, &StrategySpec::new(StrategyKind::Lsi), &cfg).unwrap();
//! assert_eq!(record.stop_generation, 10);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod de_engine;
pub mod error;
pub mod feasibility;
pub mod harness;
pub mod kinematics;
pub mod problem;
pub mod strategies;

pub use de_engine::{convergence_percent, run, run_observed, DEConfig, Population, RunRecord};
pub use error::{AssemblyError, CaseError, ConfigError, ExportError, RepairFailure};
pub use feasibility::{grashof_satisfied, grashof_violation, sequence_satisfied, ConstraintReport};
pub use harness::{batch_run, histogram, BatchStats, Histogram, Thresholds};
pub use kinematics::{
    coupler_point, solve_loop_closure, trace_path, BarLengths, Branch, FramePose, JointAngles,
    MechanismParams, Point2,
};
pub use problem::{
    builtin_case, decode, encode, evaluate, penalized_error, tracking_error, CaseSpec, DesignVector,
    Evaluation, InputAngleMode, PenaltyWeights,
};
pub use strategies::{
    hook_r1, hook_r2, lsi_generate_bars, objective_for, ssi_repair_g4, HookOutcome, RepairForm, StrategyKind,
    StrategySpec,
};
