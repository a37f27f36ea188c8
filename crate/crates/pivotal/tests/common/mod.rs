//! Shared test contests built on the value-level contracts.
#![allow(dead_code)] // each test binary uses a subset

use std::sync::Arc;

use pivotal::contest::{
    ContestDefinition, ContestError, ContestSchedule, ContestantId, CovariateGenerator,
    CovariateKey, CovariateSet, CovariateView, Event, EventId, Generated, OutcomeLabel,
    OutcomeModel, OutcomeRecord, RewardFunction, RewardLabel, TimeSlot,
};
use pivotal::engine::ValueApp;
use pivotal::rng::Stream;

pub fn binary_space() -> Vec<OutcomeLabel> {
    vec![OutcomeLabel::new("w"), OutcomeLabel::new("l")]
}

fn racer() -> ContestantId {
    ContestantId::new("Racer")
}

fn bystander() -> ContestantId {
    ContestantId::new("Bystander")
}

/// Three sequential binary events with a momentum effect: each win so far
/// raises the next win probability. Rewards count the Racer's wins
/// (labels w0..w3); the Bystander always lands on w0 whatever happens.
pub fn momentum_contest() -> ValueApp<()> {
    let contestants = vec![racer(), bystander()];
    let events: Vec<Event> = (1..=3)
        .map(|i| Event {
            id: EventId::new(format!("leg-{i}")),
            participants: contestants.clone(),
            outcome_space: binary_space(),
            covariates: CovariateSet::new(),
        })
        .collect();
    let schedule = ContestSchedule::new(
        events
            .iter()
            .enumerate()
            .map(|(i, e)| TimeSlot { index: i as i64 + 1, events: vec![e.id.clone()] })
            .collect(),
    );
    let definition = Arc::new(ContestDefinition { contestants, events, schedule });
    ValueApp::new(
        definition,
        Arc::new(MomentumModel),
        Arc::new(MomentumGenerator),
        Arc::new(WinCountReward),
    )
}

pub struct MomentumModel;

impl OutcomeModel<()> for MomentumModel {
    fn probabilities(
        &self,
        _event: &Event,
        covariates: CovariateView<'_>,
    ) -> Result<Vec<f64>, ContestError> {
        let momentum = covariates.get_global("momentum").unwrap_or(0.0);
        let p = (0.5 + 0.15 * momentum).clamp(0.05, 0.95);
        Ok(vec![p, 1.0 - p])
    }
}

pub struct MomentumGenerator;

impl CovariateGenerator<()> for MomentumGenerator {
    fn generate(
        &self,
        _schedule: &ContestSchedule,
        _covariates: &CovariateSet,
        outcomes: &[&OutcomeRecord<()>],
    ) -> Generated {
        let wins = outcomes.iter().filter(|o| o.outcome.as_str() == "w").count() as f64;
        let losses = outcomes.len() as f64 - wins;
        let mut covariates = CovariateSet::new();
        covariates
            .insert(CovariateKey::global("momentum"), wins - losses)
            .expect("finite");
        Generated { schedule_amendments: Vec::new(), covariates }
    }
}

pub struct WinCountReward;

impl RewardFunction<()> for WinCountReward {
    fn labels(&self) -> &[RewardLabel] {
        use std::sync::OnceLock;
        static LABELS: OnceLock<Vec<RewardLabel>> = OnceLock::new();
        LABELS.get_or_init(|| {
            (0..=3).map(|i| RewardLabel::new(format!("w{i}"))).collect()
        })
    }

    fn reward(
        &self,
        outcomes: &[&OutcomeRecord<()>],
        contestant: &ContestantId,
        _rng: &mut Stream,
    ) -> Result<RewardLabel, ContestError> {
        if contestant.as_str() == "Bystander" {
            return Ok(RewardLabel::new("w0"));
        }
        let wins = outcomes.iter().filter(|o| o.outcome.as_str() == "w").count();
        Ok(RewardLabel::new(format!("w{wins}")))
    }
}

pub fn momentum_outcomes(results: [&str; 3]) -> Vec<OutcomeRecord<()>> {
    results
        .iter()
        .enumerate()
        .map(|(i, r)| OutcomeRecord::new(format!("leg-{}", i + 1), *r))
        .collect()
}

/// Two independent fair binary events; the single contestant wins the
/// jackpot only if both come up "w".
pub fn jackpot_contest() -> ValueApp<()> {
    let contestants = vec![racer()];
    let events: Vec<Event> = (1..=2)
        .map(|i| Event {
            id: EventId::new(format!("flip-{i}")),
            participants: contestants.clone(),
            outcome_space: binary_space(),
            covariates: CovariateSet::new(),
        })
        .collect();
    let schedule = ContestSchedule::new(
        events
            .iter()
            .enumerate()
            .map(|(i, e)| TimeSlot { index: i as i64 + 1, events: vec![e.id.clone()] })
            .collect(),
    );
    let definition = Arc::new(ContestDefinition { contestants, events, schedule });
    ValueApp::new(
        definition,
        Arc::new(FairModel),
        Arc::new(pivotal::contest::NullGenerator),
        Arc::new(JackpotReward),
    )
}

pub struct FairModel;

impl OutcomeModel<()> for FairModel {
    fn probabilities(
        &self,
        _event: &Event,
        _covariates: CovariateView<'_>,
    ) -> Result<Vec<f64>, ContestError> {
        Ok(vec![0.5, 0.5])
    }
}

pub struct JackpotReward;

impl RewardFunction<()> for JackpotReward {
    fn labels(&self) -> &[RewardLabel] {
        use std::sync::OnceLock;
        static LABELS: OnceLock<Vec<RewardLabel>> = OnceLock::new();
        LABELS.get_or_init(|| vec![RewardLabel::new("win"), RewardLabel::new("lose")])
    }

    fn reward(
        &self,
        outcomes: &[&OutcomeRecord<()>],
        _contestant: &ContestantId,
        _rng: &mut Stream,
    ) -> Result<RewardLabel, ContestError> {
        let wins = outcomes.iter().filter(|o| o.outcome.as_str() == "w").count();
        Ok(RewardLabel::new(if wins == outcomes.len() && wins == 2 { "win" } else { "lose" }))
    }
}

/// A model with a constant probability vector over a binary space.
pub struct ConstModel(pub [f64; 2]);

impl OutcomeModel<()> for ConstModel {
    fn probabilities(
        &self,
        _event: &Event,
        _covariates: CovariateView<'_>,
    ) -> Result<Vec<f64>, ContestError> {
        Ok(self.0.to_vec())
    }
}
