//! Adapter that drives the engine from the plain contract objects of
//! [`crate::contest`]: an outcome model, a covariate generator and a reward
//! function over the value-level data model. Convenient for small contests
//! and test oracles; performance-critical applications implement
//! [`ContestApp`] directly.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::app::{AmendedSlot, ContestApp, EiCovariates, PathView, SimError, SlotRef};
use super::EngineError;
use crate::contest::{
    ContestDefinition, ContestSchedule, CovariateGenerator, CovariateKey, CovariateSet,
    CovariateView, Event, OutcomeModel, OutcomeRecord, RewardFunction, RewardLabel, TimeSlot,
};
use crate::rng::Stream;

/// Engine application assembled from value-level contracts.
pub struct ValueApp<D = ()> {
    definition: Arc<ContestDefinition>,
    model: Arc<dyn OutcomeModel<D>>,
    generator: Arc<dyn CovariateGenerator<D>>,
    reward: Arc<dyn RewardFunction<D>>,
    labels: Vec<RewardLabel>,
    label_index: BTreeMap<RewardLabel, u16>,
    realized: Arc<Vec<Option<(usize, D)>>>,
    /// Static event covariates with any EI covariates layered in.
    effective_covariates: Arc<Vec<CovariateSet>>,
    consumes_ei: bool,
    requires_ei: bool,
}

impl<D> Clone for ValueApp<D> {
    fn clone(&self) -> Self {
        ValueApp {
            definition: self.definition.clone(),
            model: self.model.clone(),
            generator: self.generator.clone(),
            reward: self.reward.clone(),
            labels: self.labels.clone(),
            label_index: self.label_index.clone(),
            realized: self.realized.clone(),
            effective_covariates: self.effective_covariates.clone(),
            consumes_ei: self.consumes_ei,
            requires_ei: self.requires_ei,
        }
    }
}

impl<D: Clone + Default + Send + Sync + 'static> ValueApp<D> {
    pub fn new(
        definition: Arc<ContestDefinition>,
        model: Arc<dyn OutcomeModel<D>>,
        generator: Arc<dyn CovariateGenerator<D>>,
        reward: Arc<dyn RewardFunction<D>>,
    ) -> Self {
        let labels: Vec<RewardLabel> = reward.labels().to_vec();
        let label_index =
            labels.iter().enumerate().map(|(i, l)| (l.clone(), i as u16)).collect();
        let effective_covariates =
            Arc::new(definition.events.iter().map(|e| e.covariates.clone()).collect());
        let realized = Arc::new(vec![None; definition.events.len()]);
        ValueApp {
            definition,
            model,
            generator,
            reward,
            labels,
            label_index,
            realized,
            effective_covariates,
            consumes_ei: false,
            requires_ei: false,
        }
    }

    /// Install realized outcomes (post-hoc history).
    pub fn with_outcomes(mut self, records: &[OutcomeRecord<D>]) -> Result<Self, EngineError> {
        let mut realized = vec![None; self.definition.events.len()];
        for record in records {
            let ev = self
                .definition
                .event_index(&record.event)
                .ok_or_else(|| EngineError::UnknownEvent(record.event.clone()))?;
            let outcome = self.definition.events[ev]
                .outcome_index(&record.outcome)
                .ok_or_else(|| EngineError::UnknownOutcome {
                    event: record.event.clone(),
                    outcome: record.outcome.clone(),
                })?;
            realized[ev] = Some((outcome, record.detail.clone().unwrap_or_default()));
        }
        self.realized = Arc::new(realized);
        Ok(self)
    }

    /// Declare how the outcome model relates to EI covariates.
    pub fn with_ei_contract(mut self, consumes: bool, requires: bool) -> Self {
        self.consumes_ei = consumes;
        self.requires_ei = requires;
        self
    }
}

/// Covariate overlay and current schedule carried along one path.
#[derive(Clone)]
pub struct ValueDyn {
    overlay: CovariateSet,
    schedule: ContestSchedule,
}

impl<D: Clone + Default + Send + Sync + 'static> ValueApp<D> {
    fn event(&self, ev: usize) -> &Event {
        &self.definition.events[ev]
    }

    /// Resolved outcomes in schedule order, rebuilt from the path buffers.
    fn records_so_far(
        &self,
        schedule: &ContestSchedule,
        path: &PathView<'_, D>,
    ) -> Vec<OutcomeRecord<D>> {
        let mut records = Vec::new();
        for slot in &schedule.slots {
            for id in &slot.events {
                let ev = self.definition.event_index(id).expect("validated");
                if let Some(outcome) = path.outcome(ev) {
                    records.push(OutcomeRecord {
                        event: id.clone(),
                        outcome: self.event(ev).outcome_space[outcome].clone(),
                        detail: Some(path.detail(ev).clone()),
                    });
                }
            }
        }
        records
    }
}

impl<D: Clone + Default + Send + Sync + 'static> ContestApp for ValueApp<D> {
    type Dyn = ValueDyn;
    type Detail = D;

    fn definition(&self) -> &ContestDefinition {
        &self.definition
    }

    fn reward_labels(&self) -> &[RewardLabel] {
        &self.labels
    }

    fn initial_dyn(&self) -> ValueDyn {
        ValueDyn { overlay: CovariateSet::new(), schedule: self.definition.schedule.clone() }
    }

    fn realized(&self, event: usize) -> Option<(usize, D)> {
        self.realized[event].clone()
    }

    fn outcome_probs(
        &self,
        event: usize,
        dyn_state: &ValueDyn,
        out: &mut [f64],
    ) -> Result<(), SimError> {
        let view = CovariateView {
            base: &self.effective_covariates[event],
            overlay: &dyn_state.overlay,
        };
        let probs = self
            .model
            .probabilities(self.event(event), view)
            .map_err(|e| SimError::App(e.to_string()))?;
        if probs.len() != out.len() {
            return Err(SimError::InvalidProbabilities {
                event,
                reason: format!("model returned {} entries, expected {}", probs.len(), out.len()),
            });
        }
        out.copy_from_slice(&probs);
        Ok(())
    }

    fn draw_detail(&self, event: usize, outcome: usize, rng: &mut Stream) -> Result<D, SimError> {
        Ok(self
            .model
            .draw_detail(self.event(event), outcome, rng)
            .unwrap_or_default())
    }

    fn advance_slot(
        &self,
        slot: SlotRef<'_>,
        path: PathView<'_, D>,
        dyn_state: &mut ValueDyn,
    ) -> Option<Vec<AmendedSlot>> {
        let so_far = ContestSchedule {
            slots: dyn_state
                .schedule
                .slots
                .iter()
                .filter(|s| s.index <= slot.t)
                .cloned()
                .collect(),
        };
        let records = self.records_so_far(&dyn_state.schedule, &path);
        let record_refs: Vec<&OutcomeRecord<D>> = records.iter().collect();
        let generated = self.generator.generate(&so_far, &dyn_state.overlay, &record_refs);
        dyn_state.overlay.merge(&generated.covariates);
        if generated.schedule_amendments.is_empty() {
            return None;
        }

        let mut slots: Vec<TimeSlot> = dyn_state
            .schedule
            .slots
            .iter()
            .filter(|s| s.index <= slot.t)
            .cloned()
            .collect();
        slots.extend(generated.schedule_amendments.clone());
        slots.sort_by_key(|s| s.index);
        dyn_state.schedule = ContestSchedule { slots };

        // Unknown event ids map to an out-of-range index the engine rejects.
        let amended = generated
            .schedule_amendments
            .into_iter()
            .map(|s| AmendedSlot {
                t: s.index,
                events: s
                    .events
                    .iter()
                    .map(|id| {
                        self.definition
                            .event_index(id)
                            .map_or(u32::MAX, |i| i as u32)
                    })
                    .collect(),
            })
            .collect();
        Some(amended)
    }

    fn rewards(
        &self,
        path: PathView<'_, D>,
        _dyn_state: &ValueDyn,
        rng: &mut Stream,
        out: &mut [u16],
    ) -> Result<(), SimError> {
        let records = self.records_so_far(&self.definition.schedule, &path);
        let record_refs: Vec<&OutcomeRecord<D>> = records.iter().collect();
        for (k, contestant) in self.definition.contestants.iter().enumerate() {
            let label = self
                .reward
                .reward(&record_refs, contestant, rng)
                .map_err(|e| SimError::App(e.to_string()))?;
            out[k] = *self
                .label_index
                .get(&label)
                .ok_or_else(|| SimError::App(format!("reward label '{label}' not declared")))?;
        }
        Ok(())
    }

    fn consumes_ei(&self) -> bool {
        self.consumes_ei
    }

    fn requires_ei(&self) -> bool {
        self.requires_ei
    }

    fn with_ei(&self, table: &EiCovariates) -> Self {
        let mut covariates: Vec<CovariateSet> =
            self.definition.events.iter().map(|e| e.covariates.clone()).collect();
        for (ev, event) in self.definition.events.iter().enumerate() {
            for (pos, contestant) in event.participants.iter().enumerate() {
                covariates[ev]
                    .insert(CovariateKey::of("ei", contestant.clone()), table.get(ev, pos))
                    .expect("EI values are finite");
            }
        }
        let mut next = self.clone();
        next.effective_covariates = Arc::new(covariates);
        next
    }
}
