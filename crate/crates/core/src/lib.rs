//! Planning and learning for multi-armed bandits whose rewards recover with
//! the time since an arm was last pulled.
//!
//! The offline side turns a known instance into a purely periodic policy
//! with a provable fraction of the relaxation upper bound. The online side
//! learns the recovery curves with optimistic estimates, re-planning once
//! per phase. [`sim`] ties both to a seeded simulator and experiment harness.

pub mod envelope;
pub mod error;
pub mod instance;
pub mod knapsack;
pub mod online;
pub mod relaxation;
pub mod scheduler;
pub mod sim;

pub use envelope::{ArmEnvelope, Bracket, PiecewiseLinearF, SupportPoint, SupportSet};
pub use error::{Error, Result};
pub use instance::{
    generate_random_instance, parse_instance, serialize_instance, ArmCurve, RecoveryInstance,
    ValidationReport, Violation, ViolationKind,
};
pub use knapsack::{
    brute_force, solve_exact, solve_exact_pow2, solve_fptas, val, CandidateItem, KnapsackSolution,
};
pub use online::{
    plan_phase, plan_phase_refined, run_learner, LearnerParams, LearnerReport, PhaseConfig,
    UcbTable, Variant,
};
pub use relaxation::{
    normalize_to_lemma2, solve_upper_bound, ub_value, FractionalArm, RelaxationSolution,
};
pub use scheduler::{
    gamma_k, offline_plan, offline_plan_refined, parse_policy, round_frequencies, rs_procedure,
    serialize_policy, OfflinePlan, PeriodClass, PolicyDocument, PolicyEntry, PurelyPeriodicPolicy,
};
pub use sim::{
    brute_force_opt, greedy_policy, parse_experiment_config, run_experiment, tightness_fixture,
    Environment, ExperimentConfig, FixtureKind, Noise,
};
