//! Exact enumeration of small contests: the test oracle for the Monte Carlo
//! approximation.
//!
//! Walks every outcome path of the remaining contest with its exact
//! probability, re-evaluating dynamic covariates along each path. Outcome
//! payloads are not enumerated (they take their default value), so rewards
//! must depend on outcomes only for the result to be exact.

use super::app::{ContestApp, PathView, SlotRef, UNRESOLVED};
use super::{Engine, EngineError, SlotPlan, ENUMERATION_GUARD};
use crate::contest::{ContestantId, EventId, OutcomeLabel, RewardDistribution};
use crate::rng::{self, StreamKey};

impl<A: ContestApp> Engine<A> {
    /// Exact conditional reward distribution per contestant, given that
    /// `event` resolves to `outcome`. Fails if the remaining contest has
    /// more than [`ENUMERATION_GUARD`] paths.
    pub fn exact_enumeration_all(
        &self,
        event: &EventId,
        outcome: &OutcomeLabel,
    ) -> Result<Vec<RewardDistribution>, EngineError> {
        if self.app().requires_ei() {
            return Err(EngineError::RequiresEiCovariates);
        }
        let ev = self.resolve_event(event)?;
        let out = self.resolve_outcome(ev, outcome)?;
        let prep = self.frontier()?;
        self.position_of(&prep, ev)?;

        // Static guard; amendment-driven growth is caught by the leaf counter.
        let mut product = 1u64;
        for pos in prep.start_pos..self.queue_len(&prep) {
            for &e in &self.slot_of(&prep, pos).events {
                if e as usize != ev {
                    product = product.saturating_mul(self.plan.spaces[e as usize] as u64);
                }
                if product > ENUMERATION_GUARD {
                    return Err(EngineError::PathCountExceeded {
                        paths: product,
                        limit: ENUMERATION_GUARD,
                    });
                }
            }
        }

        let nk = self.plan.n_contestants;
        let nl = self.app().reward_labels().len();
        let mut walker = Walker {
            engine: self,
            forced: (ev as u32, out as u16),
            mass: vec![0.0; nk * nl],
            leaves: 0,
            outcomes: prep.outcomes.clone(),
            details: prep.details.clone(),
            row: vec![0u16; nk],
        };
        let queue: Vec<SlotPlan> = match &prep.queue {
            Some(q) => q.clone(),
            None => self.plan.slots.clone(),
        };
        walker.slot(&queue, prep.start_pos, &prep.dyn_state, 1.0)?;

        let total: f64 = walker.mass.iter().take(nl).sum();
        let labels = self.app().reward_labels();
        Ok((0..nk)
            .map(|k| {
                let mass = labels
                    .iter()
                    .enumerate()
                    .map(|(l, label)| (label.clone(), walker.mass[k * nl + l] / total))
                    .collect();
                RewardDistribution::from_mass(mass).expect("probabilities sum to 1")
            })
            .collect())
    }

    /// Exact conditional reward distribution for one contestant.
    pub fn exact_enumeration(
        &self,
        event: &EventId,
        outcome: &OutcomeLabel,
        contestant: &ContestantId,
    ) -> Result<RewardDistribution, EngineError> {
        let k = self.resolve_contestant(contestant)?;
        Ok(self.exact_enumeration_all(event, outcome)?.swap_remove(k))
    }
}

struct Walker<'e, A: ContestApp> {
    engine: &'e Engine<A>,
    forced: (u32, u16),
    mass: Vec<f64>,
    leaves: u64,
    outcomes: Vec<u16>,
    details: Vec<A::Detail>,
    row: Vec<u16>,
}

impl<'e, A: ContestApp> Walker<'e, A> {
    fn slot(
        &mut self,
        queue: &[SlotPlan],
        pos: usize,
        dyn_state: &A::Dyn,
        prob: f64,
    ) -> Result<(), EngineError> {
        if pos >= queue.len() {
            return self.leaf(dyn_state, prob);
        }
        self.event(queue, pos, 0, dyn_state, prob)
    }

    fn event(
        &mut self,
        queue: &[SlotPlan],
        pos: usize,
        j: usize,
        dyn_state: &A::Dyn,
        prob: f64,
    ) -> Result<(), EngineError> {
        let slot = &queue[pos];
        if j == slot.events.len() {
            let mut advanced = dyn_state.clone();
            let amended = {
                let view = PathView { outcomes: &self.outcomes, details: &self.details };
                self.engine.app().advance_slot(
                    SlotRef { t: slot.t, events: &slot.events },
                    view,
                    &mut advanced,
                )
            };
            return match amended {
                Some(slots) => {
                    let next: Vec<SlotPlan> = slots
                        .into_iter()
                        .map(|s| SlotPlan { t: s.t, events: s.events })
                        .collect();
                    self.slot(&next, 0, &advanced, prob)
                }
                None => self.slot(queue, pos + 1, &advanced, prob),
            };
        }

        let ev = slot.events[j] as usize;
        if self.forced.0 as usize == ev {
            self.outcomes[ev] = self.forced.1;
            self.event(queue, pos, j + 1, dyn_state, prob)?;
            self.outcomes[ev] = UNRESOLVED;
            return Ok(());
        }

        let space = self.engine.plan.spaces[ev] as usize;
        let mut probs = vec![0.0; space];
        self.engine
            .app()
            .outcome_probs(ev, dyn_state, &mut probs)
            .and_then(|()| super::validate_probs(ev, &probs))
            .map_err(|e| self.engine.wrap_sim(e))?;
        for (o, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            self.outcomes[ev] = o as u16;
            self.event(queue, pos, j + 1, dyn_state, prob * p)?;
        }
        self.outcomes[ev] = UNRESOLVED;
        Ok(())
    }

    fn leaf(&mut self, dyn_state: &A::Dyn, prob: f64) -> Result<(), EngineError> {
        self.leaves += 1;
        if self.leaves > ENUMERATION_GUARD {
            return Err(EngineError::PathCountExceeded {
                paths: self.leaves,
                limit: ENUMERATION_GUARD,
            });
        }
        let view = PathView { outcomes: &self.outcomes, details: &self.details };
        let mut rng = rng::stream(self.engine.config().seed, StreamKey::reward(self.leaves));
        self.engine
            .app()
            .rewards(view, dyn_state, &mut rng, &mut self.row)
            .map_err(|e| self.engine.wrap_sim(e))?;
        let nl = self.engine.app().reward_labels().len();
        for (k, &label) in self.row.iter().enumerate() {
            self.mass[k * nl + label as usize] += prob;
        }
        Ok(())
    }
}
