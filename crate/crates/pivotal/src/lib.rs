//! Quantify the importance of single events in multi-event contests.
//!
//! An event matters to a contestant insofar as its possible outcomes shift
//! the contestant's end-of-contest reward distribution. This crate estimates
//! those conditional reward distributions by Monte Carlo simulation of the
//! remaining contest and turns them into a scalar event importance (EI) in
//! [0, 1] through a pluggable distance metric.
//!
//! The building blocks:
//!
//! - [`contest`]: the data model (schedules, events, outcomes, rewards) and
//!   the contracts applications implement.
//! - [`distance`]: weighted Jensen-Shannon divergence, total variation, and
//!   win-probability difference.
//! - [`engine`]: the Monte Carlo core with deterministic parallelism, a
//!   backward sweep with path reuse, the iterative EI fixed point, and an
//!   exact enumeration oracle.
//! - [`primaries`]: sequential winner-takes-all elections with spillover
//!   (a schedule study over 57 voting units).
//! - [`league`]: double round-robin football seasons with threshold reward
//!   regions, score tie-breakers and cup-transfer rules.

pub mod contest;
pub mod data;
pub mod distance;
pub mod engine;
pub mod league;
pub mod primaries;
pub mod rng;
pub mod toy;

pub use contest::{
    validate_contest, sub_schedule, ContestDefinition, ContestError, ContestSchedule,
    ContestState, ContestantId, CovariateGenerator, CovariateKey, CovariateSet, CovariateView,
    Event, EventId, Generated, NullGenerator, OutcomeLabel, OutcomeModel, OutcomeRecord,
    RewardDistribution, RewardFunction, RewardLabel, Side, TimeSlot, ValidationReport, Violation,
};
pub use distance::{
    shannon_entropy, total_variation, weighted_jsd, win_prob_difference, DistanceError,
    DistanceKind, WeightedDistributionFamily,
};
pub use engine::{
    ContestApp, EiCovariates, EiRecord, Engine, EngineError, PathCache, SimulationConfig,
    ValueApp,
};
pub use rng::{derive_seed, stream, Stream, StreamKey};
