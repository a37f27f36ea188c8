//! The application contract driven by the simulation engine.
//!
//! Implementors describe one contest instance: its static definition, any
//! realized history, the outcome model, the covariate generator (as a
//! per-path dynamic state), and the reward function. Implementations must be
//! read-only during simulation; the engine clones the dynamic state per
//! path.

use thiserror::Error;

use crate::contest::{ContestDefinition, RewardLabel};
use crate::rng::Stream;

/// Sentinel for an unresolved event in a path's outcome buffer.
pub const UNRESOLVED: u16 = u16::MAX;

/// Read-only view of one simulated (or partially realized) path.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a, D> {
    pub outcomes: &'a [u16],
    pub details: &'a [D],
}

impl<'a, D> PathView<'a, D> {
    pub fn outcome(&self, event: usize) -> Option<usize> {
        match self.outcomes[event] {
            UNRESOLVED => None,
            o => Some(o as usize),
        }
    }

    pub fn detail(&self, event: usize) -> &D {
        &self.details[event]
    }
}

/// A slot being processed during a path walk.
#[derive(Debug, Clone, Copy)]
pub struct SlotRef<'a> {
    /// Chronological slot index (the schedule's `t`).
    pub t: i64,
    /// Events of the slot, as indices into the definition's event list.
    pub events: &'a [u32],
}

/// Replacement future schedule produced by an outcome-dependent generator.
#[derive(Debug, Clone)]
pub struct AmendedSlot {
    pub t: i64,
    pub events: Vec<u32>,
}

/// Previous-iteration event importance estimates, injected into the outcome
/// model from the second iteration on. Indexed by event, then by the
/// event's participant position.
#[derive(Debug, Clone, Default)]
pub struct EiCovariates {
    values: Vec<Vec<f64>>,
}

impl EiCovariates {
    pub fn new(values: Vec<Vec<f64>>) -> Self {
        EiCovariates { values }
    }

    /// EI of `participant` (position within the event) in `event`; 0 when
    /// no estimate is available.
    pub fn get(&self, event: usize, participant: usize) -> f64 {
        self.values
            .get(event)
            .and_then(|v| v.get(participant))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Errors surfaced from inside the simulation hot loop. Events are indices;
/// the engine resolves them to ids at its boundary.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("invalid probability vector ({reason})")]
    InvalidProbabilities { event: usize, reason: String },
    #[error("score rejection sampling exceeded {attempts} attempts")]
    ScoreRejectionCap { event: usize, attempts: u32 },
    #[error("{0}")]
    App(String),
}

impl SimError {
    pub fn event(&self) -> Option<usize> {
        match self {
            SimError::InvalidProbabilities { event, .. }
            | SimError::ScoreRejectionCap { event, .. } => Some(*event),
            SimError::App(_) => None,
        }
    }
}

/// One contest instance as seen by the engine.
pub trait ContestApp: Clone + Send + Sync {
    /// Dynamic covariate state evolved along one path (the gen() hook).
    type Dyn: Clone + Send + Sync;
    /// Outcome payload (e.g. an exact score); `Default` is the "no payload"
    /// value used for unresolved events and for exact enumeration.
    type Detail: Clone + Default + Send + Sync;

    fn definition(&self) -> &ContestDefinition;

    fn reward_labels(&self) -> &[RewardLabel];

    /// Dynamic state before any event has been resolved.
    fn initial_dyn(&self) -> Self::Dyn;

    /// Realized outcome of an event (post-hoc history), as an index into the
    /// event's outcome space.
    fn realized(&self, _event: usize) -> Option<(usize, Self::Detail)> {
        None
    }

    /// Outcome probabilities for `event` given the dynamic state, written
    /// into `out` (length = the event's outcome space size).
    fn outcome_probs(
        &self,
        event: usize,
        dyn_state: &Self::Dyn,
        out: &mut [f64],
    ) -> Result<(), SimError>;

    /// Sample the payload for a freshly drawn outcome.
    fn draw_detail(
        &self,
        _event: usize,
        _outcome: usize,
        _rng: &mut Stream,
    ) -> Result<Self::Detail, SimError> {
        Ok(Self::Detail::default())
    }

    /// Advance the dynamic state once every event of `slot` is resolved; may
    /// replace the future sub-schedule (outcome-dependent schedules).
    fn advance_slot(
        &self,
        slot: SlotRef<'_>,
        path: PathView<'_, Self::Detail>,
        dyn_state: &mut Self::Dyn,
    ) -> Option<Vec<AmendedSlot>>;

    /// Reward label index per contestant for a completed path. `dyn_state`
    /// is the dynamic state after the final slot (a pure function of the
    /// outcomes). Tie-break randomness, if any, must come from `rng`.
    fn rewards(
        &self,
        path: PathView<'_, Self::Detail>,
        dyn_state: &Self::Dyn,
        rng: &mut Stream,
        out: &mut [u16],
    ) -> Result<(), SimError>;

    /// Whether the outcome model reads EI covariates when present.
    fn consumes_ei(&self) -> bool {
        false
    }

    /// Whether the outcome model cannot be evaluated without EI covariates.
    /// Such a model cannot run the first iteration of the iterative scheme.
    fn requires_ei(&self) -> bool {
        false
    }

    /// A copy of this application with previous-iteration EI estimates
    /// installed as model covariates. Must not change the contest structure.
    fn with_ei(&self, _table: &EiCovariates) -> Self {
        self.clone()
    }
}
