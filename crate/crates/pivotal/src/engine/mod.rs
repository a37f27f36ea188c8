//! Monte Carlo core: conditional reward distributions, event importance,
//! backward sweep with path reuse, the iterative fixed point, and an exact
//! enumeration oracle for small contests.
//!
//! Determinism contract: identical (contest, config, seed) produce
//! bit-identical results regardless of worker-thread count. Every path draws
//! from its own counter-derived stream and aggregation is integer counting.

mod app;
mod enumerate;
mod sweep;
mod value_app;

pub use app::{
    AmendedSlot, ContestApp, EiCovariates, PathView, SimError, SlotRef, UNRESOLVED,
};
pub use sweep::PathCache;
pub use value_app::ValueApp;

use rayon::prelude::*;
use thiserror::Error;

use crate::contest::{
    validate_contest, ContestError, ContestantId, EventId, OutcomeLabel, OutcomeRecord,
    RewardDistribution, RewardLabel, ValidationReport,
};
use crate::distance::{DistanceError, DistanceKind, WeightedDistributionFamily};
use crate::rng::{self, StreamKey};

/// Upper bound on contests accepted by exact enumeration.
pub const ENUMERATION_GUARD: u64 = 1_000_000;

const PROB_TOLERANCE: f64 = 1e-9;
const PATH_CHUNK: u64 = 512;

// ---------------------------------------------------------------------------
// Configuration and records
// ---------------------------------------------------------------------------

/// Monte Carlo configuration shared by all engine operations.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    /// Runs per conditional branch.
    pub n_mc: u64,
    /// Root seed; all streams derive from it.
    pub seed: u64,
    /// Rounds of the iterative EI fixed point.
    pub iterations: u32,
    /// Distance applied to the family of conditional distributions.
    pub distance: DistanceKind,
    /// Reuse continuation paths during the backward sweep.
    pub reuse_paths: bool,
}

impl SimulationConfig {
    pub fn new(n_mc: u64, seed: u64) -> Self {
        SimulationConfig {
            n_mc,
            seed,
            iterations: 1,
            distance: DistanceKind::Jsd,
            reuse_paths: true,
        }
    }

    pub fn with_distance(mut self, distance: DistanceKind) -> Self {
        self.distance = distance;
        self
    }

    pub fn with_iterations(mut self, iterations: u32) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_reuse(mut self, reuse: bool) -> Self {
        self.reuse_paths = reuse;
        self
    }

    fn validate(&self) -> Result<(), EngineError> {
        if self.n_mc < 1 {
            return Err(EngineError::InvalidConfig("n_mc must be >= 1".into()));
        }
        if self.iterations < 1 {
            return Err(EngineError::InvalidConfig("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Estimated importance of one event for one contestant.
#[derive(Debug, Clone, PartialEq)]
pub struct EiRecord {
    pub event: EventId,
    pub contestant: ContestantId,
    pub value: f64,
    pub iteration: u32,
    /// Mean number of simulated paths each hypothesis branch is premised on.
    /// Equals n_mc without path reuse; reuse only adds paths.
    pub n_mc_effective: u64,
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("contest definition is not well-formed: {0}")]
    InvalidContest(ValidationReport),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("unknown event '{0}'")]
    UnknownEvent(EventId),
    #[error("unknown contestant '{0}'")]
    UnknownContestant(ContestantId),
    #[error("outcome '{outcome}' not in event '{event}' outcome space")]
    UnknownOutcome { event: EventId, outcome: OutcomeLabel },
    #[error("event '{0}' lies before the simulation frontier (already resolved)")]
    EventAlreadyResolved(EventId),
    #[error("event '{0}' has no realized outcome but lies in the realized history")]
    UnrealizedEvent(EventId),
    #[error("backward sweep requires a fully realized contest; event '{0}' is unrealized")]
    NotFullyRealized(EventId),
    #[error("outcome model requires EI covariates but none are available (iteration 1)")]
    RequiresEiCovariates,
    #[error("exact enumeration guard exceeded: {paths} paths > limit {limit}")]
    PathCountExceeded { paths: u64, limit: u64 },
    #[error("simulation error at event '{event}': {source}")]
    Simulation { event: EventId, source: SimError },
    #[error("simulation error: {0}")]
    SimulationOther(SimError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error(transparent)]
    Contest(#[from] ContestError),
}

// ---------------------------------------------------------------------------
// Compiled plan
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct SlotPlan {
    t: i64,
    events: Vec<u32>,
}

#[derive(Debug, Clone)]
struct Plan {
    slots: Vec<SlotPlan>,
    /// Outcome space size per event.
    spaces: Vec<u16>,
    /// Participant contestant indices per event.
    participants: Vec<Vec<u32>>,
    n_contestants: usize,
}

impl Plan {
    fn compile<A: ContestApp>(app: &A) -> Result<Plan, EngineError> {
        let def = app.definition();
        let report = validate_contest(def);
        if !report.is_ok() {
            return Err(EngineError::InvalidContest(report));
        }
        let slots = def
            .schedule
            .slots
            .iter()
            .map(|slot| SlotPlan {
                t: slot.index,
                events: slot
                    .events
                    .iter()
                    .map(|id| def.event_index(id).expect("validated") as u32)
                    .collect(),
            })
            .collect();
        let spaces = def.events.iter().map(|e| e.outcome_space.len() as u16).collect();
        let participants = def
            .events
            .iter()
            .map(|e| {
                e.participants
                    .iter()
                    .map(|c| def.contestant_index(c).expect("validated") as u32)
                    .collect()
            })
            .collect();
        Ok(Plan { slots, spaces, participants, n_contestants: def.contestants.len() })
    }
}

// ---------------------------------------------------------------------------
// Prepared states (realized history applied)
// ---------------------------------------------------------------------------

struct Prepared<A: ContestApp> {
    /// Position in the slot queue where simulation starts.
    start_pos: usize,
    outcomes: Vec<u16>,
    details: Vec<A::Detail>,
    dyn_state: A::Dyn,
    /// Effective remaining queue if realized history amended the schedule.
    queue: Option<Vec<SlotPlan>>,
}

impl<A: ContestApp> Clone for Prepared<A> {
    fn clone(&self) -> Self {
        Prepared {
            start_pos: self.start_pos,
            outcomes: self.outcomes.clone(),
            details: self.details.clone(),
            dyn_state: self.dyn_state.clone(),
            queue: self.queue.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

/// Simulation engine bound to one application instance and configuration.
pub struct Engine<A: ContestApp> {
    app: A,
    cfg: SimulationConfig,
    plan: Plan,
}

impl<A: ContestApp> Engine<A> {
    pub fn new(app: A, cfg: SimulationConfig) -> Result<Self, EngineError> {
        cfg.validate()?;
        let plan = Plan::compile(&app)?;
        Ok(Engine { app, cfg, plan })
    }

    pub fn app(&self) -> &A {
        &self.app
    }

    /// Same plan and config, different application instance (used by the
    /// iterative scheme; the contest structure must be unchanged).
    pub(super) fn with_app(&self, app: A) -> Engine<A> {
        Engine { app, cfg: self.cfg.clone(), plan: self.plan.clone() }
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.cfg
    }

    fn event_id(&self, event: usize) -> EventId {
        self.app.definition().events[event].id.clone()
    }

    fn contestant_id(&self, k: usize) -> ContestantId {
        self.app.definition().contestants[k].clone()
    }

    fn labels(&self) -> &[RewardLabel] {
        self.app.reward_labels()
    }

    fn wrap_sim(&self, err: SimError) -> EngineError {
        match err.event() {
            Some(e) => EngineError::Simulation { event: self.event_id(e), source: err },
            None => EngineError::SimulationOther(err),
        }
    }

    fn resolve_event(&self, id: &EventId) -> Result<usize, EngineError> {
        self.app
            .definition()
            .event_index(id)
            .ok_or_else(|| EngineError::UnknownEvent(id.clone()))
    }

    fn resolve_contestant(&self, id: &ContestantId) -> Result<usize, EngineError> {
        self.app
            .definition()
            .contestant_index(id)
            .ok_or_else(|| EngineError::UnknownContestant(id.clone()))
    }

    fn resolve_outcome(&self, event: usize, label: &OutcomeLabel) -> Result<usize, EngineError> {
        let ev = &self.app.definition().events[event];
        ev.outcome_index(label).ok_or_else(|| EngineError::UnknownOutcome {
            event: ev.id.clone(),
            outcome: label.clone(),
        })
    }

    // -- prepared states ----------------------------------------------------

    fn empty_prepared(&self) -> Prepared<A> {
        let n = self.app.definition().events.len();
        Prepared {
            start_pos: 0,
            outcomes: vec![UNRESOLVED; n],
            details: vec![A::Detail::default(); n],
            dyn_state: self.app.initial_dyn(),
            queue: None,
        }
    }

    fn queue_len(&self, prep: &Prepared<A>) -> usize {
        prep.queue.as_ref().map_or(self.plan.slots.len(), |q| q.len())
    }

    fn slot_of<'q>(&'q self, prep: &'q Prepared<A>, pos: usize) -> &'q SlotPlan {
        match &prep.queue {
            Some(q) => &q[pos],
            None => &self.plan.slots[pos],
        }
    }

    /// Consume the realized outcomes of the slot at `prep.start_pos`.
    fn advance_prepared(&self, prep: &mut Prepared<A>) -> Result<(), EngineError> {
        let pos = prep.start_pos;
        let (t, events) = {
            let slot = self.slot_of(prep, pos);
            (slot.t, slot.events.clone())
        };
        for &ev in &events {
            let (outcome, detail) = self
                .app
                .realized(ev as usize)
                .ok_or_else(|| EngineError::UnrealizedEvent(self.event_id(ev as usize)))?;
            prep.outcomes[ev as usize] = outcome as u16;
            prep.details[ev as usize] = detail;
        }
        let view = PathView { outcomes: &prep.outcomes, details: &prep.details };
        let amended = self.app.advance_slot(SlotRef { t, events: &events }, view, &mut prep.dyn_state);
        if let Some(slots) = amended {
            let queue = self.validate_amendment(t, &prep.outcomes, slots)?;
            prep.queue = Some(queue);
            prep.start_pos = 0;
        } else {
            prep.start_pos = pos + 1;
        }
        Ok(())
    }

    fn validate_amendment(
        &self,
        after_t: i64,
        outcomes: &[u16],
        slots: Vec<AmendedSlot>,
    ) -> Result<Vec<SlotPlan>, EngineError> {
        let mut prev = after_t;
        let mut queue = Vec::with_capacity(slots.len());
        for slot in slots {
            if slot.t <= prev {
                return Err(EngineError::Contest(ContestError::AmendsPastSlot { index: slot.t }));
            }
            prev = slot.t;
            for &ev in &slot.events {
                let ev = ev as usize;
                if ev >= outcomes.len() {
                    return Err(EngineError::UnknownEvent(EventId::new(format!("#{ev}"))));
                }
                if outcomes[ev] != UNRESOLVED {
                    return Err(EngineError::Contest(ContestError::AlreadyResolved {
                        id: self.event_id(ev),
                    }));
                }
            }
            queue.push(SlotPlan { t: slot.t, events: slot.events });
        }
        Ok(queue)
    }

    /// First queue position holding an event without a realized outcome.
    fn frontier(&self) -> Result<Prepared<A>, EngineError> {
        let mut prep = self.empty_prepared();
        loop {
            if prep.start_pos >= self.queue_len(&prep) {
                return Ok(prep);
            }
            let open = {
                let slot = self.slot_of(&prep, prep.start_pos);
                slot.events.iter().any(|&e| self.app.realized(e as usize).is_none())
            };
            if open {
                return Ok(prep);
            }
            self.advance_prepared(&mut prep)?;
        }
    }

    /// Queue position of `event` at or after the prepared frontier.
    fn position_of(&self, prep: &Prepared<A>, event: usize) -> Result<usize, EngineError> {
        for pos in prep.start_pos..self.queue_len(prep) {
            if self.slot_of(prep, pos).events.contains(&(event as u32)) {
                return Ok(pos);
            }
        }
        Err(EngineError::EventAlreadyResolved(self.event_id(event)))
    }

    // -- path walking -------------------------------------------------------

    /// Simulate every unresolved slot from `prep.start_pos` on, with at most
    /// one forced (event, outcome) pair.
    #[allow(clippy::too_many_arguments)]
    fn walk_path(
        &self,
        prep: &Prepared<A>,
        forced: Option<(u32, u16)>,
        rng: &mut crate::rng::Stream,
        outcomes: &mut [u16],
        details: &mut [A::Detail],
        dyn_state: &mut A::Dyn,
        probs: &mut Vec<f64>,
    ) -> Result<(), SimError> {
        let mut queue: Option<Vec<SlotPlan>> = prep.queue.clone();
        let mut pos = prep.start_pos;
        loop {
            let len = queue.as_ref().map_or(self.plan.slots.len(), |q| q.len());
            if pos >= len {
                break;
            }
            let amended = {
                let slot = match &queue {
                    Some(q) => &q[pos],
                    None => &self.plan.slots[pos],
                };
                for &ev in &slot.events {
                    let evu = ev as usize;
                    debug_assert_eq!(outcomes[evu], UNRESOLVED);
                    let outcome = match forced {
                        Some((fe, fo)) if fe == ev => fo as usize,
                        _ => {
                            let space = self.plan.spaces[evu] as usize;
                            probs.resize(space, 0.0);
                            self.app.outcome_probs(evu, dyn_state, probs)?;
                            validate_probs(evu, probs)?;
                            draw_index(probs, rng)
                        }
                    };
                    outcomes[evu] = outcome as u16;
                    details[evu] = self.app.draw_detail(evu, outcome, rng)?;
                }
                let view = PathView { outcomes, details };
                self.app.advance_slot(SlotRef { t: slot.t, events: &slot.events }, view, dyn_state)
            };
            match amended {
                Some(slots) => {
                    // The value layer validates amendments; the walk only
                    // swaps its queue.
                    queue = Some(
                        slots.into_iter().map(|s| SlotPlan { t: s.t, events: s.events }).collect(),
                    );
                    pos = 0;
                }
                None => pos += 1,
            }
        }
        Ok(())
    }

    /// Empirical reward counts (contestant-major) over `n_mc` paths of one
    /// hypothesis branch. Paths run in parallel chunks; each path draws from
    /// its own derived stream, so the result is independent of scheduling.
    fn run_branch(
        &self,
        prep: &Prepared<A>,
        forced: Option<(u32, u16)>,
        iteration: u32,
        key_event: u32,
        branch: u32,
        n_mc: u64,
    ) -> Result<Vec<u64>, EngineError> {
        let nk = self.plan.n_contestants;
        let nl = self.labels().len();
        let chunks = n_mc.div_ceil(PATH_CHUNK);

        let counts = (0..chunks)
            .into_par_iter()
            .map(|chunk| -> Result<Vec<u64>, SimError> {
                let mut counts = vec![0u64; nk * nl];
                let mut outcomes = prep.outcomes.clone();
                let mut details = prep.details.clone();
                let mut dyn_state = prep.dyn_state.clone();
                let mut probs: Vec<f64> = Vec::new();
                let mut row = vec![0u16; nk];
                let lo = chunk * PATH_CHUNK;
                let hi = (lo + PATH_CHUNK).min(n_mc);
                for path in lo..hi {
                    outcomes.copy_from_slice(&prep.outcomes);
                    details.clone_from_slice(&prep.details);
                    dyn_state.clone_from(&prep.dyn_state);
                    let mut rng = rng::stream(
                        self.cfg.seed,
                        StreamKey::path(iteration, key_event, branch, path),
                    );
                    self.walk_path(
                        prep,
                        forced,
                        &mut rng,
                        &mut outcomes,
                        &mut details,
                        &mut dyn_state,
                        &mut probs,
                    )?;
                    let view = PathView { outcomes: &outcomes, details: &details };
                    self.app.rewards(view, &dyn_state, &mut rng, &mut row)?;
                    for (k, &label) in row.iter().enumerate() {
                        counts[k * nl + label as usize] += 1;
                    }
                }
                Ok(counts)
            })
            .try_reduce(
                || vec![0u64; nk * nl],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    Ok(a)
                },
            )
            .map_err(|e| self.wrap_sim(e))?;
        Ok(counts)
    }

    fn counts_to_distributions(&self, counts: &[u64]) -> Vec<RewardDistribution> {
        let nl = self.labels().len();
        (0..self.plan.n_contestants)
            .map(|k| RewardDistribution::from_counts(self.labels(), &counts[k * nl..(k + 1) * nl]))
            .collect()
    }

    /// Model probabilities for `event` under a prepared state, validated.
    fn branch_weights(&self, prep: &Prepared<A>, event: usize) -> Result<Vec<f64>, EngineError> {
        let mut probs = vec![0.0; self.plan.spaces[event] as usize];
        self.app
            .outcome_probs(event, &prep.dyn_state, &mut probs)
            .and_then(|()| validate_probs(event, &probs))
            .map_err(|e| self.wrap_sim(e))?;
        Ok(probs)
    }

    /// Conditional distributions per outcome (outer) and contestant (inner),
    /// plus the per-branch premised path counts.
    fn branch_distributions(
        &self,
        prep: &Prepared<A>,
        event: usize,
        iteration: u32,
    ) -> Result<(Vec<Vec<RewardDistribution>>, Vec<u64>), EngineError> {
        let space = self.plan.spaces[event] as usize;
        let mut per_outcome = Vec::with_capacity(space);
        let mut premised = Vec::with_capacity(space);
        for outcome in 0..space {
            let counts = self.run_branch(
                prep,
                Some((event as u32, outcome as u16)),
                iteration,
                event as u32,
                outcome as u32,
                self.cfg.n_mc,
            )?;
            per_outcome.push(self.counts_to_distributions(&counts));
            premised.push(self.cfg.n_mc);
        }
        Ok((per_outcome, premised))
    }

    fn ei_from_branches(
        &self,
        event: usize,
        weights: &[f64],
        per_outcome: &[Vec<RewardDistribution>],
        premised: &[u64],
        iteration: u32,
    ) -> Result<Vec<EiRecord>, EngineError> {
        let n_mc_effective = premised.iter().sum::<u64>() / premised.len() as u64;
        let mut records = Vec::new();
        for &k in &self.plan.participants[event] {
            let members: Vec<(RewardDistribution, f64)> = per_outcome
                .iter()
                .zip(weights)
                .map(|(dists, w)| (dists[k as usize].clone(), *w))
                .collect();
            let family = WeightedDistributionFamily::new(members)?;
            let value = self.cfg.distance.evaluate(&family)?;
            records.push(EiRecord {
                event: self.event_id(event),
                contestant: self.contestant_id(k as usize),
                value,
                iteration,
                n_mc_effective,
            });
        }
        Ok(records)
    }

    // -- public operations ----------------------------------------------------

    /// Simulate one completion of the contest from the realized frontier;
    /// returns the full outcome set (realized history included).
    pub fn simulate_remainder(
        &self,
        path: u64,
    ) -> Result<Vec<OutcomeRecord<A::Detail>>, EngineError> {
        if self.app.requires_ei() {
            return Err(EngineError::RequiresEiCovariates);
        }
        let prep = self.frontier()?;
        let mut outcomes = prep.outcomes.clone();
        let mut details = prep.details.clone();
        let mut dyn_state = prep.dyn_state.clone();
        let mut probs = Vec::new();
        let mut rng = rng::stream(self.cfg.seed, StreamKey::path(0, 0, 0, path));
        self.walk_path(&prep, None, &mut rng, &mut outcomes, &mut details, &mut dyn_state, &mut probs)
            .map_err(|e| self.wrap_sim(e))?;

        let def = self.app.definition();
        let mut records = Vec::new();
        for (ev, outcome) in outcomes.iter().enumerate() {
            if *outcome == UNRESOLVED {
                continue;
            }
            records.push(OutcomeRecord {
                event: def.events[ev].id.clone(),
                outcome: def.events[ev].outcome_space[*outcome as usize].clone(),
                detail: Some(details[ev].clone()),
            });
        }
        Ok(records)
    }

    /// Empirical distribution of `contestant`'s reward conditional on
    /// `event` resolving to `outcome`, over n_mc simulated completions.
    pub fn conditional_reward_distribution(
        &self,
        event: &EventId,
        outcome: &OutcomeLabel,
        contestant: &ContestantId,
    ) -> Result<RewardDistribution, EngineError> {
        if self.app.requires_ei() {
            return Err(EngineError::RequiresEiCovariates);
        }
        let ev = self.resolve_event(event)?;
        let out = self.resolve_outcome(ev, outcome)?;
        let k = self.resolve_contestant(contestant)?;
        let prep = self.frontier()?;
        self.position_of(&prep, ev)?;
        let counts =
            self.run_branch(&prep, Some((ev as u32, out as u16)), 1, ev as u32, out as u32, self.cfg.n_mc)?;
        let nl = self.labels().len();
        Ok(RewardDistribution::from_counts(self.labels(), &counts[k * nl..(k + 1) * nl]))
    }

    /// Event importance for every participant of `event`, from the realized
    /// frontier.
    pub fn event_importance_all(&self, event: &EventId) -> Result<Vec<EiRecord>, EngineError> {
        if self.app.requires_ei() {
            return Err(EngineError::RequiresEiCovariates);
        }
        let ev = self.resolve_event(event)?;
        let prep = self.frontier()?;
        self.position_of(&prep, ev)?;
        let weights = self.branch_weights(&prep, ev)?;
        let (per_outcome, premised) = self.branch_distributions(&prep, ev, 1)?;
        self.ei_from_branches(ev, &weights, &per_outcome, &premised, 1)
    }

    /// Event importance of `event` for one contestant.
    pub fn event_importance(
        &self,
        event: &EventId,
        contestant: &ContestantId,
    ) -> Result<EiRecord, EngineError> {
        let records = self.event_importance_all(event)?;
        records
            .into_iter()
            .find(|r| &r.contestant == contestant)
            .ok_or_else(|| EngineError::UnknownContestant(contestant.clone()))
    }

    /// Event importance for every event of the earliest unrealized slot
    /// (prospective mode).
    pub fn frontier_importances(&self) -> Result<Vec<EiRecord>, EngineError> {
        if self.app.requires_ei() {
            return Err(EngineError::RequiresEiCovariates);
        }
        let prep = self.frontier()?;
        if prep.start_pos >= self.queue_len(&prep) {
            return Ok(Vec::new());
        }
        let events = self.slot_of(&prep, prep.start_pos).events.clone();
        let mut records = Vec::new();
        for ev in events {
            let ev = ev as usize;
            let weights = self.branch_weights(&prep, ev)?;
            let (per_outcome, premised) = self.branch_distributions(&prep, ev, 1)?;
            records.extend(self.ei_from_branches(ev, &weights, &per_outcome, &premised, 1)?);
        }
        Ok(records)
    }
}

fn validate_probs(event: usize, probs: &[f64]) -> Result<(), SimError> {
    let mut total = 0.0;
    for &p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(SimError::InvalidProbabilities {
                event,
                reason: format!("entry {p} is negative or not finite"),
            });
        }
        total += p;
    }
    if (total - 1.0).abs() > PROB_TOLERANCE {
        return Err(SimError::InvalidProbabilities {
            event,
            reason: format!("sum {total} != 1"),
        });
    }
    Ok(())
}

fn draw_index(probs: &[f64], rng: &mut crate::rng::Stream) -> usize {
    use rand::Rng;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}
