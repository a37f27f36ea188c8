//! Chronologically backward sweep over a realized contest, with optional
//! reuse of already-evolved continuation paths, and the iterative EI fixed
//! point on top of it.

use std::collections::BTreeMap;

use super::app::{ContestApp, EiCovariates};
use super::{EiRecord, Engine, EngineError, Prepared};
use crate::contest::{RewardDistribution, RewardLabel};

/// Continuation distributions per processed slot, keyed by slot index.
///
/// Each entry is the outcome-probability-weighted mixture of the slot's
/// conditional distributions (one per contestant), i.e. the reward
/// distribution given the realized history strictly before that slot, plus
/// the size of the simulated path pool it is premised on.
#[derive(Debug, Clone, Default)]
pub struct PathCache {
    entries: BTreeMap<i64, CacheEntry>,
}

#[derive(Debug, Clone)]
struct CacheEntry {
    mixtures: Vec<RewardDistribution>,
    premised: u64,
}

impl PathCache {
    /// Mixture distributions (per contestant) and premised path count for
    /// slot `t`, if that slot has been processed.
    pub fn entry(&self, t: i64) -> Option<(&[RewardDistribution], u64)> {
        self.entries.get(&t).map(|e| (e.mixtures.as_slice(), e.premised))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn weighted_mixture(
    labels: &[RewardLabel],
    weights: &[f64],
    per_outcome: &[Vec<RewardDistribution>],
    contestant: usize,
) -> RewardDistribution {
    let mut mass: BTreeMap<RewardLabel, f64> =
        labels.iter().map(|l| (l.clone(), 0.0)).collect();
    for (dists, w) in per_outcome.iter().zip(weights) {
        for label in labels {
            *mass.get_mut(label).unwrap() += w * dists[contestant].prob(label);
        }
    }
    let total: f64 = mass.values().sum();
    for v in mass.values_mut() {
        *v /= total;
    }
    RewardDistribution::from_mass(mass).expect("mixture of valid distributions")
}

impl<A: ContestApp> Engine<A> {
    pub(super) fn ensure_fully_realized(&self) -> Result<(), EngineError> {
        for (ev, event) in self.app.definition().events.iter().enumerate() {
            if self.app.realized(ev).is_none() {
                return Err(EngineError::NotFullyRealized(event.id.clone()));
            }
        }
        Ok(())
    }

    /// Post-hoc event importance for every (event, participant) pair of a
    /// fully realized contest, iterating slots from last to first.
    ///
    /// With `reuse_paths` enabled, the hypothesis branch of a sole event
    /// whose outcome equals the realized one takes its continuation
    /// distribution from the next slot's cache entry instead of running
    /// fresh paths. No step then simulates more than n_mc paths per branch,
    /// while every estimate rests on at least n_mc continuations.
    pub fn backward_sweep(&self) -> Result<Vec<EiRecord>, EngineError> {
        if self.app.requires_ei() {
            return Err(EngineError::RequiresEiCovariates);
        }
        Ok(self.sweep_iteration(1)?.0)
    }

    /// Like [`Engine::backward_sweep`], also returning the path cache for
    /// inspection.
    pub fn backward_sweep_with_cache(&self) -> Result<(Vec<EiRecord>, PathCache), EngineError> {
        if self.app.requires_ei() {
            return Err(EngineError::RequiresEiCovariates);
        }
        self.sweep_iteration(1)
    }

    pub(super) fn sweep_iteration(
        &self,
        iteration: u32,
    ) -> Result<(Vec<EiRecord>, PathCache), EngineError> {
        self.ensure_fully_realized()?;

        // Forward pass: snapshot the prepared state at the head of each slot.
        let mut preps: Vec<Prepared<A>> = Vec::new();
        let mut prep = self.empty_prepared();
        while prep.start_pos < self.queue_len(&prep) {
            preps.push(prep.clone());
            self.advance_prepared(&mut prep)?;
        }

        let last = preps.len().saturating_sub(1);
        let mut cache = PathCache::default();
        let mut next_entry: Option<CacheEntry> = None;
        let mut records = Vec::new();

        for (pos, prep) in preps.iter().enumerate().rev() {
            let slot = self.slot_of(prep, prep.start_pos);
            let (t, events) = (slot.t, slot.events.clone());
            let sole = events.len() == 1;
            let mut slot_records = Vec::new();
            let mut slot_entry: Option<CacheEntry> = None;

            for (i, &ev) in events.iter().enumerate() {
                let ev = ev as usize;
                let space = self.plan.spaces[ev] as usize;
                let realized = self.app.realized(ev).expect("fully realized").0;
                let weights = self.branch_weights(prep, ev)?;

                let mut per_outcome = Vec::with_capacity(space);
                let mut premised = Vec::with_capacity(space);
                for outcome in 0..space {
                    let reusable = self.config().reuse_paths
                        && pos != last
                        && sole
                        && outcome == realized;
                    if reusable {
                        let entry = next_entry.as_ref().expect("next slot processed");
                        per_outcome.push(entry.mixtures.clone());
                        premised.push(entry.premised);
                    } else {
                        let counts = self.run_branch(
                            prep,
                            Some((ev as u32, outcome as u16)),
                            iteration,
                            ev as u32,
                            outcome as u32,
                            self.config().n_mc,
                        )?;
                        per_outcome.push(self.counts_to_distributions(&counts));
                        premised.push(self.config().n_mc);
                    }
                }

                slot_records.extend(self.ei_from_branches(
                    ev,
                    &weights,
                    &per_outcome,
                    &premised,
                    iteration,
                )?);

                if i == 0 {
                    let labels = self.app.reward_labels();
                    let mixtures = (0..self.plan.n_contestants)
                        .map(|k| weighted_mixture(labels, &weights, &per_outcome, k))
                        .collect();
                    slot_entry = Some(CacheEntry {
                        mixtures,
                        premised: premised.iter().sum(),
                    });
                }
            }

            let entry = slot_entry.expect("slot has at least one event");
            cache.entries.insert(t, entry.clone());
            next_entry = Some(entry);
            records.push((pos, slot_records));
        }

        records.sort_by_key(|(pos, _)| *pos);
        Ok((records.into_iter().flat_map(|(_, r)| r).collect(), cache))
    }

    /// Iterative EI estimation: iteration 1 runs without EI covariates, each
    /// later iteration re-runs the sweep with the previous iteration's
    /// estimates injected into the outcome model. Returns the records of
    /// every iteration.
    pub fn iterative_ei(&self) -> Result<Vec<Vec<EiRecord>>, EngineError> {
        if self.app.requires_ei() {
            return Err(EngineError::RequiresEiCovariates);
        }
        self.ensure_fully_realized()?;

        let mut per_iteration: Vec<Vec<EiRecord>> = Vec::new();
        for iteration in 1..=self.config().iterations {
            let records = if iteration == 1 {
                self.sweep_iteration(1)?.0
            } else {
                let table = self.ei_table(per_iteration.last().unwrap());
                let engine = self.with_app(self.app.with_ei(&table));
                engine.sweep_iteration(iteration)?.0
            };
            per_iteration.push(records);
        }
        Ok(per_iteration)
    }

    /// Arrange sweep records as per-event, per-participant-position values.
    pub fn ei_table(&self, records: &[EiRecord]) -> EiCovariates {
        let def = self.app.definition();
        let mut values: Vec<Vec<f64>> = def
            .events
            .iter()
            .map(|e| vec![0.0; e.participants.len()])
            .collect();
        for rec in records {
            if let Some(ev) = def.event_index(&rec.event) {
                if let Some(pos) =
                    def.events[ev].participants.iter().position(|c| c == &rec.contestant)
                {
                    values[ev][pos] = rec.value;
                }
            }
        }
        EiCovariates::new(values)
    }
}
