//! Sequential winner-takes-all elections between two candidates, with a
//! momentum (spillover) term linking earlier results to later win
//! probabilities.
//!
//! A voting unit ("state") elects a winner who takes all of its delegates.
//! The representative voter's systematic utility for candidate i in state s
//! is
//!
//! ```text
//! psi_i = eta_i + zeta_i - |rho_i - rho_s|^2 / 2
//! ```
//!
//! with fixed reputations eta, candidate positions rho_i, state preferences
//! rho_s, and the spillover zeta_i = realized delegate share so far minus
//! the reputation-implied share. Under Type I extreme value errors the win
//! probability is the conditional logit of the utility difference. The
//! contest reward is binary: the candidate holding a majority of all
//! delegates is nominated (an exact tie nominates nobody).
//!
//! The study questions are positional: how much can each state's election
//! still shift the nomination, and how does that change under alternative
//! schedules (random order, ordered by delegate count) or when a single
//! state moves through the calendar.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::contest::{
    ContestDefinition, ContestSchedule, ContestantId, CovariateKey, CovariateSet, Event, EventId,
    OutcomeLabel, RewardLabel, TimeSlot,
};
use crate::data::DataError;
use crate::distance::DistanceKind;
use crate::engine::{
    AmendedSlot, ContestApp, Engine, EngineError, PathView, SimError, SimulationConfig, SlotRef,
};
use crate::rng::{self, derive_seed, Stream, StreamKey};

pub const NOMINATED: &str = "nominated";
pub const NOT_NOMINATED: &str = "not-nominated";

/// One voting unit: name, election date (ISO, same date = same slot) and
/// delegate count.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRecord {
    pub name: String,
    pub date: String,
    pub delegates: u64,
}

/// Fixed candidate attributes; index 0 is the reputation-advantaged
/// candidate at position -1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateParams {
    pub reputation: [f64; 2],
    pub position: [f64; 2],
}

impl Default for CandidateParams {
    fn default() -> Self {
        CandidateParams { reputation: [0.5, 0.0], position: [-1.0, 1.0] }
    }
}

impl CandidateParams {
    /// Delegate share implied by reputations alone.
    pub fn expected_share(&self, candidate: usize) -> f64 {
        let e0 = self.reputation[candidate].exp();
        let e1 = self.reputation[1 - candidate].exp();
        e0 / (e0 + e1)
    }
}

/// State preferences rho_s ~ N(0,1), one draw per state.
#[derive(Debug, Clone)]
pub struct PreferenceSample(pub Vec<f64>);

impl PreferenceSample {
    pub fn draw(n_states: usize, seed: u64, sample: u64) -> Self {
        let mut rng = rng::stream(seed, StreamKey::setup(0, sample));
        PreferenceSample((0..n_states).map(|_| rng.sample(StandardNormal)).collect())
    }
}

/// Running winner-takes-all tally.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PrimaryRace {
    pub delegates_won: [u64; 2],
}

impl PrimaryRace {
    pub fn decided(&self) -> u64 {
        self.delegates_won[0] + self.delegates_won[1]
    }
}

/// Spillover zeta: realized delegate share minus the reputation-implied
/// share; zero before any election is decided (the realized share of an
/// empty history is defined as the expected share). The two candidates'
/// values sum to zero.
pub fn spillover(race: &PrimaryRace, params: &CandidateParams, candidate: usize) -> f64 {
    let decided = race.decided();
    if decided == 0 {
        return 0.0;
    }
    race.delegates_won[candidate] as f64 / decided as f64 - params.expected_share(candidate)
}

/// Systematic utility (reputation + spillover + preference match); the
/// extreme value error enters through the logit form of the win
/// probability, not here.
pub fn utility_components(
    rho_s: f64,
    candidate: usize,
    race: &PrimaryRace,
    params: &CandidateParams,
) -> f64 {
    let gap = params.position[candidate] - rho_s;
    params.reputation[candidate] + spillover(race, params, candidate) - gap * gap / 2.0
}

/// Conditional-logit probability that candidate 0 wins the state.
pub fn win_probability(rho_s: f64, race: &PrimaryRace, params: &CandidateParams) -> f64 {
    let psi0 = utility_components(rho_s, 0, race, params);
    let psi1 = utility_components(rho_s, 1, race, params);
    1.0 / (1.0 + (psi1 - psi0).exp())
}

/// Reward label index per candidate once every state is decided: 0 for
/// nominated (strict majority of all delegates), 1 otherwise. A 50/50 split
/// nominates nobody.
pub fn nomination_reward(race: &PrimaryRace, total_delegates: u64) -> [u16; 2] {
    let mut out = [1u16; 2];
    for (candidate, slot) in out.iter_mut().enumerate() {
        if 2 * race.delegates_won[candidate] > total_delegates {
            *slot = 0;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

/// Scheduling regimes of the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    /// Calendar order from the states file.
    Regular,
    /// Random permutation of the states over the fixed slot framework,
    /// drawn fresh per preference sample.
    Random,
    /// States sorted ascending by delegate count over the fixed framework.
    RankIncrease,
}

impl ScheduleMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScheduleMode::Regular => "regular",
            ScheduleMode::Random => "random",
            ScheduleMode::RankIncrease => "rank-increase",
        }
    }
}

/// The schedule framework: seat positions grouped into slots, derived from
/// the calendar (same date = one slot). Alternative schedules permute which
/// state sits in which seat while the framework stays fixed.
#[derive(Debug, Clone)]
pub struct ScheduleFrame {
    /// Number of seats per slot, in calendar order.
    pub slot_sizes: Vec<usize>,
    /// State index occupying each seat under the regular calendar.
    pub regular_order: Vec<usize>,
}

impl ScheduleFrame {
    pub fn from_states(states: &[StateRecord]) -> Self {
        let mut dates: Vec<&str> = states.iter().map(|s| s.date.as_str()).collect();
        dates.sort_unstable();
        dates.dedup();
        let mut slot_sizes = Vec::with_capacity(dates.len());
        let mut regular_order = Vec::with_capacity(states.len());
        for date in dates {
            let start = regular_order.len();
            for (i, state) in states.iter().enumerate() {
                if state.date == date {
                    regular_order.push(i);
                }
            }
            slot_sizes.push(regular_order.len() - start);
        }
        ScheduleFrame { slot_sizes, regular_order }
    }

    pub fn seats(&self) -> usize {
        self.regular_order.len()
    }

    /// Fold a seat ordering of state indices back into slots.
    pub fn schedule_for(&self, order: &[usize], states: &[StateRecord]) -> ContestSchedule {
        let mut slots = Vec::with_capacity(self.slot_sizes.len());
        let mut seat = 0usize;
        for (slot_pos, size) in self.slot_sizes.iter().enumerate() {
            let events = order[seat..seat + size]
                .iter()
                .map(|&s| EventId::new(states[s].name.clone()))
                .collect();
            slots.push(TimeSlot { index: slot_pos as i64 + 1, events });
            seat += size;
        }
        ContestSchedule::new(slots)
    }

    /// Seat ordering for a mode; `rng` is consumed only by `Random`.
    pub fn order_for(
        &self,
        mode: ScheduleMode,
        states: &[StateRecord],
        rng: &mut Stream,
    ) -> Vec<usize> {
        match mode {
            ScheduleMode::Regular => self.regular_order.clone(),
            ScheduleMode::RankIncrease => {
                let mut order: Vec<usize> = (0..states.len()).collect();
                order.sort_by(|&a, &b| {
                    states[a]
                        .delegates
                        .cmp(&states[b].delegates)
                        .then_with(|| states[a].name.cmp(&states[b].name))
                });
                order
            }
            ScheduleMode::Random => {
                let mut order = self.regular_order.clone();
                // Fisher-Yates on the seat assignment.
                for i in (1..order.len()).rev() {
                    let j = rng.random_range(0..=i);
                    order.swap(i, j);
                }
                order
            }
        }
    }
}

/// Build the contest schedule for a mode (the operation behind the study's
/// schedule regimes).
pub fn build_schedule(
    states: &[StateRecord],
    mode: ScheduleMode,
    rng: &mut Stream,
) -> ContestSchedule {
    let frame = ScheduleFrame::from_states(states);
    let order = frame.order_for(mode, states, rng);
    frame.schedule_for(&order, states)
}

// ---------------------------------------------------------------------------
// Engine application
// ---------------------------------------------------------------------------

pub fn candidate_id(i: usize) -> ContestantId {
    ContestantId::new(format!("candidate-{i}"))
}

fn outcome_space() -> Vec<OutcomeLabel> {
    vec![OutcomeLabel::new("candidate-0"), OutcomeLabel::new("candidate-1")]
}

/// One primaries contest instance: fixed preferences, fixed seat order.
/// Event index i is always state i of the input list, whatever the
/// schedule, so random streams stay aligned across schedule modes.
#[derive(Clone)]
pub struct PrimariesApp {
    definition: Arc<ContestDefinition>,
    delegates: Arc<Vec<u64>>,
    params: CandidateParams,
    preferences: Arc<Vec<f64>>,
    total_delegates: u64,
    labels: Arc<Vec<RewardLabel>>,
}

impl PrimariesApp {
    pub fn new(
        states: &[StateRecord],
        schedule: ContestSchedule,
        params: CandidateParams,
        preferences: PreferenceSample,
    ) -> Self {
        let contestants = vec![candidate_id(0), candidate_id(1)];
        let events = states
            .iter()
            .map(|s| {
                let mut covariates = CovariateSet::new();
                covariates
                    .insert(CovariateKey::global("delegates"), s.delegates as f64)
                    .expect("finite");
                Event {
                    id: EventId::new(s.name.clone()),
                    participants: contestants.clone(),
                    outcome_space: outcome_space(),
                    covariates,
                }
            })
            .collect();
        let definition = Arc::new(ContestDefinition { contestants, events, schedule });
        let delegates: Vec<u64> = states.iter().map(|s| s.delegates).collect();
        let total_delegates = delegates.iter().sum();
        PrimariesApp {
            definition,
            delegates: Arc::new(delegates),
            params,
            preferences: Arc::new(preferences.0),
            total_delegates,
            labels: Arc::new(vec![RewardLabel::new(NOMINATED), RewardLabel::new(NOT_NOMINATED)]),
        }
    }

    pub fn total_delegates(&self) -> u64 {
        self.total_delegates
    }
}

impl ContestApp for PrimariesApp {
    type Dyn = PrimaryRace;
    type Detail = ();

    fn definition(&self) -> &ContestDefinition {
        &self.definition
    }

    fn reward_labels(&self) -> &[RewardLabel] {
        &self.labels
    }

    fn initial_dyn(&self) -> PrimaryRace {
        PrimaryRace::default()
    }

    fn outcome_probs(
        &self,
        event: usize,
        race: &PrimaryRace,
        out: &mut [f64],
    ) -> Result<(), SimError> {
        let p0 = win_probability(self.preferences[event], race, &self.params);
        out[0] = p0;
        out[1] = 1.0 - p0;
        Ok(())
    }

    fn advance_slot(
        &self,
        slot: SlotRef<'_>,
        path: PathView<'_, ()>,
        race: &mut PrimaryRace,
    ) -> Option<Vec<AmendedSlot>> {
        // Spillover updates only between slots: same-date elections see the
        // same history.
        for &ev in slot.events {
            let winner = path.outcome(ev as usize).expect("slot resolved");
            race.delegates_won[winner] += self.delegates[ev as usize];
        }
        None
    }

    fn rewards(
        &self,
        _path: PathView<'_, ()>,
        race: &PrimaryRace,
        _rng: &mut Stream,
        out: &mut [u16],
    ) -> Result<(), SimError> {
        out.copy_from_slice(&nomination_reward(race, self.total_delegates));
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

/// Parameters of a schedule study.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub mode: ScheduleMode,
    pub samples: u64,
    pub n_mc: u64,
    pub seed: u64,
    pub params: CandidateParams,
}

impl StudyConfig {
    pub fn new(mode: ScheduleMode, samples: u64, n_mc: u64, seed: u64) -> Self {
        StudyConfig { mode, samples, n_mc, seed, params: CandidateParams::default() }
    }
}

/// Per-state EI estimates averaged over preference samples.
#[derive(Debug, Clone)]
pub struct StudyResult {
    pub states: Vec<StateRecord>,
    pub mean_ei: Vec<f64>,
    pub sd_ei: Vec<f64>,
    /// EI per sample (outer) and state (inner).
    pub per_sample: Vec<Vec<f64>>,
}

fn ei_distance() -> DistanceKind {
    DistanceKind::WinProbDifference(RewardLabel::new(NOMINATED))
}

fn sample_ei(
    states: &[StateRecord],
    frame: &ScheduleFrame,
    cfg: &StudyConfig,
    sample: u64,
) -> Result<Vec<f64>, EngineError> {
    let preferences = PreferenceSample::draw(states.len(), cfg.seed, sample);
    let mut shuffle = rng::stream(cfg.seed, StreamKey::setup(1, sample));
    let order = frame.order_for(cfg.mode, states, &mut shuffle);
    let schedule = frame.schedule_for(&order, states);
    let app = PrimariesApp::new(states, schedule, cfg.params, preferences);
    let sim = SimulationConfig::new(cfg.n_mc, derive_seed(cfg.seed, sample))
        .with_distance(ei_distance());
    let engine = Engine::new(app, sim)?;
    let candidate = candidate_id(0);
    states
        .iter()
        .map(|s| {
            engine
                .event_importance(&EventId::new(s.name.clone()), &candidate)
                .map(|r| r.value)
        })
        .collect()
}

/// EI of every state under a schedule mode, for `cfg.samples` independent
/// preference samples; the binary reward makes both candidates' EI equal,
/// so one value per state is emitted.
pub fn run_study(states: &[StateRecord], cfg: &StudyConfig) -> Result<StudyResult, EngineError> {
    let frame = ScheduleFrame::from_states(states);
    let per_sample: Vec<Vec<f64>> = (0..cfg.samples)
        .into_par_iter()
        .map(|j| sample_ei(states, &frame, cfg, j))
        .collect::<Result<_, _>>()?;

    let n = states.len();
    let mut mean_ei = vec![0.0; n];
    for row in &per_sample {
        for (m, v) in mean_ei.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean_ei {
        *m /= cfg.samples as f64;
    }
    let mut sd_ei = vec![0.0; n];
    if cfg.samples > 1 {
        for row in &per_sample {
            for ((sd, v), m) in sd_ei.iter_mut().zip(row).zip(&mean_ei) {
                *sd += (v - m) * (v - m);
            }
        }
        for sd in &mut sd_ei {
            *sd = (*sd / (cfg.samples - 1) as f64).sqrt();
        }
    }
    Ok(StudyResult { states: states.to_vec(), mean_ei, sd_ei, per_sample })
}

/// EI distribution of one state at hypothetical seat positions (1-based);
/// the other states shift to fill the vacated seat.
#[derive(Debug, Clone)]
pub struct PositionalResult {
    pub state: String,
    pub positions: Vec<usize>,
    /// EI per position (outer) and preference sample (inner).
    pub per_position: Vec<Vec<f64>>,
}

pub fn positional_study(
    states: &[StateRecord],
    state_name: &str,
    positions: &[usize],
    cfg: &StudyConfig,
) -> Result<PositionalResult, EngineError> {
    let target = states
        .iter()
        .position(|s| s.name == state_name)
        .ok_or_else(|| EngineError::UnknownEvent(EventId::new(state_name)))?;
    let frame = ScheduleFrame::from_states(states);
    for &p in positions {
        if p < 1 || p > frame.seats() {
            return Err(EngineError::InvalidConfig(format!(
                "position {p} outside 1..={}",
                frame.seats()
            )));
        }
    }

    let candidate = candidate_id(0);
    let mut per_position = Vec::with_capacity(positions.len());
    for &p in positions {
        let mut order: Vec<usize> =
            frame.regular_order.iter().copied().filter(|&s| s != target).collect();
        order.insert(p - 1, target);

        let values: Vec<f64> = (0..cfg.samples)
            .into_par_iter()
            .map(|j| -> Result<f64, EngineError> {
                let preferences = PreferenceSample::draw(states.len(), cfg.seed, j);
                let schedule = frame.schedule_for(&order, states);
                let app = PrimariesApp::new(states, schedule, cfg.params, preferences);
                let sim = SimulationConfig::new(cfg.n_mc, derive_seed(cfg.seed, j))
                    .with_distance(ei_distance());
                let engine = Engine::new(app, sim)?;
                Ok(engine
                    .event_importance(&EventId::new(state_name), &candidate)?
                    .value)
            })
            .collect::<Result<_, _>>()?;
        per_position.push(values);
    }
    Ok(PositionalResult {
        state: state_name.to_owned(),
        positions: positions.to_vec(),
        per_position,
    })
}

// ---------------------------------------------------------------------------
// Data files
// ---------------------------------------------------------------------------

/// Read a states CSV with columns `name,date,delegates` (ISO dates; same
/// date means same slot).
pub fn read_states_csv(path: &Path) -> Result<Vec<StateRecord>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    for required in ["name", "date", "delegates"] {
        if !headers.iter().any(|h| h == required) {
            return Err(DataError::invalid(path, format!("missing column '{required}'")));
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (c_name, c_date, c_delegates) = (col("name"), col("date"), col("delegates"));

    let mut states = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let name = record.get(c_name).unwrap_or("").to_owned();
        if name.is_empty() {
            return Err(DataError::format(path, line, "empty state name"));
        }
        let date = record.get(c_date).unwrap_or("").to_owned();
        let delegates: u64 = record
            .get(c_delegates)
            .unwrap_or("")
            .parse()
            .map_err(|e| DataError::format(path, line, format!("delegates: {e}")))?;
        if delegates < 1 {
            return Err(DataError::format(path, line, "delegates must be >= 1"));
        }
        if states.iter().any(|s: &StateRecord| s.name == name) {
            return Err(DataError::format(path, line, format!("duplicate state '{name}'")));
        }
        states.push(StateRecord { name, date, delegates });
    }
    if states.is_empty() {
        return Err(DataError::invalid(path, "no states"));
    }
    Ok(states)
}

fn csv_error(path: &Path, err: csv::Error) -> DataError {
    match err.position() {
        Some(pos) => DataError::format(path, pos.line(), err),
        None => DataError::invalid(path, err),
    }
}
