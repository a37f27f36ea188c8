//! The language of the framework: contests, events, outcomes, rewards, and
//! the contracts applications implement.
//!
//! A contest is a finite schedule of time slots, each holding one or more
//! events. Every event has a finite outcome space. After all events are
//! resolved, a reward function assigns each contestant a label from a finite
//! reward set. Applications plug in three contracts: an outcome model
//! (probabilities per event), a covariate generator (outcome-dependent
//! future covariates and schedule), and a reward function.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::rng::Stream;

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

macro_rules! string_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                $name(s.into())
            }
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(
    /// A contestant taking part in the contest.
    ContestantId
);
string_id!(
    /// A single event within the contest schedule.
    EventId
);
string_id!(
    /// One element of an event's finite outcome space.
    OutcomeLabel
);
string_id!(
    /// One element of the finite end-of-contest reward set.
    RewardLabel
);

// ---------------------------------------------------------------------------
// Covariates
// ---------------------------------------------------------------------------

/// Key of a named scalar feature, optionally tied to a contestant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CovariateKey {
    pub name: String,
    pub contestant: Option<ContestantId>,
}

impl CovariateKey {
    pub fn global(name: impl Into<String>) -> Self {
        CovariateKey { name: name.into(), contestant: None }
    }

    pub fn of(name: impl Into<String>, contestant: ContestantId) -> Self {
        CovariateKey { name: name.into(), contestant: Some(contestant) }
    }
}

/// Flat set of named scalar features. All values must be finite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CovariateSet {
    values: BTreeMap<CovariateKey, f64>,
}

impl CovariateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: CovariateKey, value: f64) -> Result<(), ContestError> {
        if !value.is_finite() {
            return Err(ContestError::NonFiniteCovariate { key });
        }
        self.values.insert(key, value);
        Ok(())
    }

    pub fn get(&self, key: &CovariateKey) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn get_global(&self, name: &str) -> Option<f64> {
        self.values
            .get(&CovariateKey { name: name.to_owned(), contestant: None })
            .copied()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CovariateKey, f64)> {
        self.values.iter().map(|(k, v)| (k, *v))
    }

    /// Merge `other` into `self`; colliding keys take `other`'s value.
    pub fn merge(&mut self, other: &CovariateSet) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), *v);
        }
    }
}

/// Layered lookup: a per-path overlay of generated covariates in front of an
/// event's static covariates.
#[derive(Debug, Clone, Copy)]
pub struct CovariateView<'a> {
    pub base: &'a CovariateSet,
    pub overlay: &'a CovariateSet,
}

impl<'a> CovariateView<'a> {
    pub fn get(&self, key: &CovariateKey) -> Option<f64> {
        self.overlay.get(key).or_else(|| self.base.get(key))
    }

    pub fn get_global(&self, name: &str) -> Option<f64> {
        self.overlay.get_global(name).or_else(|| self.base.get_global(name))
    }
}

// ---------------------------------------------------------------------------
// Schedule and events
// ---------------------------------------------------------------------------

/// One position in the contest schedule; events within a slot are
/// simultaneous (they see the same information set).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSlot {
    pub index: i64,
    pub events: Vec<EventId>,
}

/// Finite, chronologically ordered schedule.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContestSchedule {
    pub slots: Vec<TimeSlot>,
}

/// Which side of a slot `sub_schedule` keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// All slots with index <= t.
    Before,
    /// All slots with index > t.
    After,
}

impl ContestSchedule {
    pub fn new(slots: Vec<TimeSlot>) -> Self {
        ContestSchedule { slots }
    }

    pub fn slot(&self, index: i64) -> Option<&TimeSlot> {
        self.slots.iter().find(|s| s.index == index)
    }

    pub fn event_ids(&self) -> impl Iterator<Item = &EventId> {
        self.slots.iter().flat_map(|s| s.events.iter())
    }
}

/// Sub-schedule up to and including `t` (`Side::Before`) or strictly after
/// `t` (`Side::After`). Concatenating both sides reproduces the original.
pub fn sub_schedule(
    schedule: &ContestSchedule,
    t: i64,
    side: Side,
) -> Result<ContestSchedule, ContestError> {
    if schedule.slot(t).is_none() {
        return Err(ContestError::UnknownSlot { index: t });
    }
    let slots = schedule
        .slots
        .iter()
        .filter(|s| match side {
            Side::Before => s.index <= t,
            Side::After => s.index > t,
        })
        .cloned()
        .collect();
    Ok(ContestSchedule { slots })
}

/// A single event: who takes part, what can happen, what is known about it.
#[derive(Debug, Clone)]
pub struct Event {
    pub id: EventId,
    pub participants: Vec<ContestantId>,
    pub outcome_space: Vec<OutcomeLabel>,
    pub covariates: CovariateSet,
}

impl Event {
    pub fn outcome_index(&self, label: &OutcomeLabel) -> Option<usize> {
        self.outcome_space.iter().position(|l| l == label)
    }
}

/// The static description of a contest. Hooks (outcome model, covariate
/// generator, reward function) are supplied separately by the application.
#[derive(Debug, Clone)]
pub struct ContestDefinition {
    pub contestants: Vec<ContestantId>,
    pub events: Vec<Event>,
    pub schedule: ContestSchedule,
}

impl ContestDefinition {
    pub fn event_index(&self, id: &EventId) -> Option<usize> {
        self.events.iter().position(|e| &e.id == id)
    }

    pub fn event(&self, id: &EventId) -> Option<&Event> {
        self.events.iter().find(|e| &e.id == id)
    }

    pub fn contestant_index(&self, id: &ContestantId) -> Option<usize> {
        self.contestants.iter().position(|c| c == id)
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// One well-formedness violation found by [`validate_contest`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateContestant { id: ContestantId },
    DuplicateEvent { id: EventId },
    OutcomeSpaceTooSmall { event: EventId },
    DuplicateOutcomeLabel { event: EventId, label: OutcomeLabel },
    NoParticipants { event: EventId },
    UnknownContestant { event: EventId, contestant: ContestantId },
    SlotIndicesNotIncreasing { index: i64 },
    UnknownScheduledEvent { event: EventId },
    EventInMultipleSlots { event: EventId },
    UnscheduledEvent { event: EventId },
    EmptySchedule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateContestant { id } => write!(f, "duplicate contestant '{id}'"),
            Violation::DuplicateEvent { id } => write!(f, "duplicate event '{id}'"),
            Violation::OutcomeSpaceTooSmall { event } => {
                write!(f, "event '{event}': outcome space < 2")
            }
            Violation::DuplicateOutcomeLabel { event, label } => {
                write!(f, "event '{event}': duplicate outcome label '{label}'")
            }
            Violation::NoParticipants { event } => write!(f, "event '{event}': no participants"),
            Violation::UnknownContestant { event, contestant } => {
                write!(f, "event '{event}': unknown contestant '{contestant}'")
            }
            Violation::SlotIndicesNotIncreasing { index } => {
                write!(f, "slot indices not strictly increasing at {index}")
            }
            Violation::UnknownScheduledEvent { event } => {
                write!(f, "schedule references unknown event '{event}'")
            }
            Violation::EventInMultipleSlots { event } => {
                write!(f, "event '{event}' appears in more than one slot")
            }
            Violation::UnscheduledEvent { event } => {
                write!(f, "event '{event}' appears in no slot")
            }
            Violation::EmptySchedule => write!(f, "schedule is empty"),
        }
    }
}

/// Report-style validation result; empty means well-formed.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("well-formed");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Check a contest definition against the framework's structural invariants.
pub fn validate_contest(contest: &ContestDefinition) -> ValidationReport {
    let mut violations = Vec::new();

    let mut seen = BTreeSet::new();
    for c in &contest.contestants {
        if !seen.insert(c.clone()) {
            violations.push(Violation::DuplicateContestant { id: c.clone() });
        }
    }

    let contestants: BTreeSet<_> = contest.contestants.iter().collect();
    let mut event_ids = BTreeSet::new();
    for e in &contest.events {
        if !event_ids.insert(e.id.clone()) {
            violations.push(Violation::DuplicateEvent { id: e.id.clone() });
        }
        if e.outcome_space.len() < 2 {
            violations.push(Violation::OutcomeSpaceTooSmall { event: e.id.clone() });
        }
        let mut labels = BTreeSet::new();
        for l in &e.outcome_space {
            if !labels.insert(l.clone()) {
                violations.push(Violation::DuplicateOutcomeLabel {
                    event: e.id.clone(),
                    label: l.clone(),
                });
            }
        }
        if e.participants.is_empty() {
            violations.push(Violation::NoParticipants { event: e.id.clone() });
        }
        for p in &e.participants {
            if !contestants.contains(p) {
                violations.push(Violation::UnknownContestant {
                    event: e.id.clone(),
                    contestant: p.clone(),
                });
            }
        }
    }

    if contest.schedule.slots.is_empty() {
        violations.push(Violation::EmptySchedule);
    }
    let mut prev = None;
    for slot in &contest.schedule.slots {
        if let Some(p) = prev {
            if slot.index <= p {
                violations.push(Violation::SlotIndicesNotIncreasing { index: slot.index });
            }
        }
        prev = Some(slot.index);
    }

    let mut scheduled = BTreeMap::new();
    for slot in &contest.schedule.slots {
        for id in &slot.events {
            if !event_ids.contains(id) {
                violations.push(Violation::UnknownScheduledEvent { event: id.clone() });
            }
            *scheduled.entry(id.clone()).or_insert(0usize) += 1;
        }
    }
    for (id, n) in &scheduled {
        if *n > 1 {
            violations.push(Violation::EventInMultipleSlots { event: id.clone() });
        }
    }
    for id in event_ids {
        if !scheduled.contains_key(&id) {
            violations.push(Violation::UnscheduledEvent { event: id });
        }
    }

    ValidationReport { violations }
}

// ---------------------------------------------------------------------------
// Outcomes and rewards
// ---------------------------------------------------------------------------

/// Realised outcome of an event, with an optional application payload the
/// framework never interprets (e.g. an exact score behind a categorical
/// match result).
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord<D = ()> {
    pub event: EventId,
    pub outcome: OutcomeLabel,
    pub detail: Option<D>,
}

impl<D> OutcomeRecord<D> {
    pub fn new(event: impl Into<EventId>, outcome: impl Into<OutcomeLabel>) -> Self {
        OutcomeRecord { event: event.into(), outcome: outcome.into(), detail: None }
    }

    pub fn with_detail(mut self, detail: D) -> Self {
        self.detail = Some(detail);
        self
    }
}

fn into_event_id(id: &str) -> EventId {
    EventId::new(id)
}

impl<D> From<(&str, &str)> for OutcomeRecord<D> {
    fn from((event, outcome): (&str, &str)) -> Self {
        OutcomeRecord { event: into_event_id(event), outcome: OutcomeLabel::new(outcome), detail: None }
    }
}

const MASS_TOLERANCE: f64 = 1e-9;

/// Probability mass over a finite set of reward labels for one contestant.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardDistribution {
    mass: BTreeMap<RewardLabel, f64>,
}

impl RewardDistribution {
    /// Build from an explicit mass map; checks non-negativity and that the
    /// total is 1 within 1e-9.
    pub fn from_mass(mass: BTreeMap<RewardLabel, f64>) -> Result<Self, ContestError> {
        if mass.is_empty() {
            return Err(ContestError::EmptyDistribution);
        }
        let mut total = 0.0;
        for (label, p) in &mass {
            if !p.is_finite() || *p < 0.0 {
                return Err(ContestError::InvalidMass { label: label.clone(), value: *p });
            }
            total += p;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(ContestError::MassNotNormalized { total });
        }
        Ok(RewardDistribution { mass })
    }

    /// All mass on a single label of `labels`.
    pub fn point_mass(labels: &[RewardLabel], label: &RewardLabel) -> Self {
        let mass = labels
            .iter()
            .map(|l| (l.clone(), if l == label { 1.0 } else { 0.0 }))
            .collect();
        RewardDistribution { mass }
    }

    /// Empirical distribution over `labels` from per-label counts. Labels
    /// never observed keep mass 0 (no smoothing), so distances can detect
    /// true structural zeros.
    pub fn from_counts(labels: &[RewardLabel], counts: &[u64]) -> Self {
        debug_assert_eq!(labels.len(), counts.len());
        let n: u64 = counts.iter().sum();
        debug_assert!(n > 0);
        let mass = labels
            .iter()
            .zip(counts)
            .map(|(l, c)| (l.clone(), *c as f64 / n as f64))
            .collect();
        RewardDistribution { mass }
    }

    pub fn prob(&self, label: &RewardLabel) -> f64 {
        self.mass.get(label).copied().unwrap_or(0.0)
    }

    pub fn mass(&self) -> &BTreeMap<RewardLabel, f64> {
        &self.mass
    }

    pub fn labels(&self) -> impl Iterator<Item = &RewardLabel> {
        self.mass.keys()
    }

    pub fn same_labels(&self, other: &RewardDistribution) -> bool {
        self.mass.len() == other.mass.len()
            && self.mass.keys().zip(other.mass.keys()).all(|(a, b)| a == b)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.values().sum()
    }
}

// ---------------------------------------------------------------------------
// Contracts
// ---------------------------------------------------------------------------

/// Probabilistic outcome model. Evaluation must be pure: no contest state is
/// mutated, and the returned vector is non-negative and sums to 1 within
/// 1e-9, aligned with the event's outcome space.
pub trait OutcomeModel<D = ()>: Send + Sync {
    fn probabilities(
        &self,
        event: &Event,
        covariates: CovariateView<'_>,
    ) -> Result<Vec<f64>, ContestError>;

    /// Optional payload sampler for a resolved outcome.
    fn draw_detail(&self, _event: &Event, _outcome: usize, _rng: &mut Stream) -> Option<D> {
        None
    }
}

/// Future covariates and schedule amendments produced once a slot resolves.
#[derive(Debug, Clone, Default)]
pub struct Generated {
    /// If non-empty, replaces the entire future sub-schedule (slots strictly
    /// after the resolved one).
    pub schedule_amendments: Vec<TimeSlot>,
    /// Merged into the covariate overlay seen by later events.
    pub covariates: CovariateSet,
}

/// Outcome-dependent schedule and covariates. Must be deterministic given
/// its inputs and may only amend slots strictly after the last realized one.
pub trait CovariateGenerator<D = ()>: Send + Sync {
    fn generate(
        &self,
        schedule_so_far: &ContestSchedule,
        covariates_so_far: &CovariateSet,
        outcomes_so_far: &[&OutcomeRecord<D>],
    ) -> Generated;
}

/// Generator for contests whose covariates and schedule are fully static.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullGenerator;

impl<D> CovariateGenerator<D> for NullGenerator {
    fn generate(
        &self,
        _schedule: &ContestSchedule,
        _covariates: &CovariateSet,
        _outcomes: &[&OutcomeRecord<D>],
    ) -> Generated {
        Generated::default()
    }
}

/// End-of-contest reward. Total over the declared label set and
/// deterministic given all outcomes; any internal tie-break randomness must
/// draw from the supplied stream.
pub trait RewardFunction<D = ()>: Send + Sync {
    fn labels(&self) -> &[RewardLabel];

    fn reward(
        &self,
        outcomes: &[&OutcomeRecord<D>],
        contestant: &ContestantId,
        rng: &mut Stream,
    ) -> Result<RewardLabel, ContestError>;
}

// ---------------------------------------------------------------------------
// Contest state
// ---------------------------------------------------------------------------

/// Immutable contest state: applying an outcome returns a new state. The
/// current slot is the earliest one with an unresolved event; once a slot is
/// fully resolved the covariate generator runs and its output is installed.
#[derive(Debug, Clone)]
pub struct ContestState<D = ()> {
    definition: Arc<ContestDefinition>,
    schedule: ContestSchedule,
    resolved: BTreeMap<EventId, OutcomeRecord<D>>,
    overlay: CovariateSet,
}

impl<D: Clone> ContestState<D> {
    pub fn new(definition: Arc<ContestDefinition>) -> Self {
        let schedule = definition.schedule.clone();
        ContestState { definition, schedule, resolved: BTreeMap::new(), overlay: CovariateSet::new() }
    }

    pub fn definition(&self) -> &ContestDefinition {
        &self.definition
    }

    /// Current schedule, including any amendments installed so far.
    pub fn schedule(&self) -> &ContestSchedule {
        &self.schedule
    }

    pub fn overlay(&self) -> &CovariateSet {
        &self.overlay
    }

    pub fn resolved(&self) -> &BTreeMap<EventId, OutcomeRecord<D>> {
        &self.resolved
    }

    pub fn is_resolved(&self, event: &EventId) -> bool {
        self.resolved.contains_key(event)
    }

    /// Earliest slot index with at least one unresolved event.
    pub fn current_slot(&self) -> Option<i64> {
        self.schedule
            .slots
            .iter()
            .find(|slot| slot.events.iter().any(|e| !self.resolved.contains_key(e)))
            .map(|slot| slot.index)
    }

    pub fn is_complete(&self) -> bool {
        self.current_slot().is_none()
    }

    pub fn unresolved_events(&self) -> Vec<EventId> {
        self.schedule
            .event_ids()
            .filter(|e| !self.resolved.contains_key(e))
            .cloned()
            .collect()
    }

    /// Resolved outcomes in schedule order (deterministic generator input).
    pub fn outcomes_so_far(&self) -> Vec<&OutcomeRecord<D>> {
        self.schedule
            .event_ids()
            .filter_map(|e| self.resolved.get(e))
            .collect()
    }

    /// Record an outcome for an event of the current slot. When this
    /// completes the slot, the covariate generator is invoked exactly once
    /// and its covariates/schedule amendments are installed.
    pub fn apply_outcome(
        &self,
        record: OutcomeRecord<D>,
        generator: &dyn CovariateGenerator<D>,
    ) -> Result<ContestState<D>, ContestError> {
        let event = self
            .definition
            .event(&record.event)
            .ok_or_else(|| ContestError::UnknownEvent { id: record.event.clone() })?;
        if self.resolved.contains_key(&record.event) {
            return Err(ContestError::AlreadyResolved { id: record.event.clone() });
        }
        if event.outcome_index(&record.outcome).is_none() {
            return Err(ContestError::OutcomeNotInSpace {
                event: record.event.clone(),
                outcome: record.outcome.clone(),
            });
        }
        let current = self
            .current_slot()
            .ok_or(ContestError::ContestComplete)?;
        let slot = self.schedule.slot(current).expect("current slot exists");
        if !slot.events.contains(&record.event) {
            return Err(ContestError::EventNotInCurrentSlot {
                id: record.event.clone(),
                slot: current,
            });
        }

        let mut next = self.clone();
        next.resolved.insert(record.event.clone(), record);

        let slot_complete = slot.events.iter().all(|e| next.resolved.contains_key(e));
        if slot_complete {
            let so_far = sub_schedule(&next.schedule, current, Side::Before)?;
            let generated =
                generator.generate(&so_far, &next.overlay, &next.outcomes_so_far());
            next.install(current, generated)?;
        }
        Ok(next)
    }

    fn install(&mut self, current: i64, generated: Generated) -> Result<(), ContestError> {
        if !generated.schedule_amendments.is_empty() {
            for slot in &generated.schedule_amendments {
                if slot.index <= current {
                    return Err(ContestError::AmendsPastSlot { index: slot.index });
                }
                for id in &slot.events {
                    if self.definition.event(id).is_none() {
                        return Err(ContestError::UnknownEvent { id: id.clone() });
                    }
                    if self.resolved.contains_key(id) {
                        return Err(ContestError::AlreadyResolved { id: id.clone() });
                    }
                }
            }
            let mut slots: Vec<TimeSlot> = self
                .schedule
                .slots
                .iter()
                .filter(|s| s.index <= current)
                .cloned()
                .collect();
            slots.extend(generated.schedule_amendments);
            slots.sort_by_key(|s| s.index);
            self.schedule = ContestSchedule { slots };
        }
        self.overlay.merge(&generated.covariates);
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ContestError {
    #[error("unknown event '{id}'")]
    UnknownEvent { id: EventId },
    #[error("unknown slot index {index}")]
    UnknownSlot { index: i64 },
    #[error("event '{id}' already resolved")]
    AlreadyResolved { id: EventId },
    #[error("outcome '{outcome}' not in event '{event}' outcome space")]
    OutcomeNotInSpace { event: EventId, outcome: OutcomeLabel },
    #[error("event '{id}' is not in the current slot {slot}")]
    EventNotInCurrentSlot { id: EventId, slot: i64 },
    #[error("contest already complete")]
    ContestComplete,
    #[error("generator amends non-future slot {index}")]
    AmendsPastSlot { index: i64 },
    #[error("covariate '{key:?}' is not finite")]
    NonFiniteCovariate { key: CovariateKey },
    #[error("reward distribution has no labels")]
    EmptyDistribution,
    #[error("invalid mass {value} for label '{label}'")]
    InvalidMass { label: RewardLabel, value: f64 },
    #[error("reward mass sums to {total}, expected 1")]
    MassNotNormalized { total: f64 },
    #[error("outcome model error: {0}")]
    Model(String),
    #[error("reward function error: {0}")]
    Reward(String),
}
