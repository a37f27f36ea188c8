//! Double round-robin football leagues: parametric ordered-choice match
//! model with Poisson scores, threshold reward regions with tie-breakers,
//! cup transfers, and per-match event importance over a season.

pub mod io;
pub mod model;
pub mod rewards;
pub mod schedule;

pub use model::{draw_score, match_outcome_probs, MatchModelParams, MatchOutcome, ScoreSampler};
pub use rewards::{
    apply_cup_transfer, region_labels, reward_of_rank, CupCompetition, Region, RewardStructure,
    KNOWN_CODES, REGION_COUNT,
};
pub use schedule::{generate_double_round_robin, single_round_robin};

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::contest::{
    ContestDefinition, ContestSchedule, ContestantId, CovariateSet, Event, EventId, OutcomeLabel,
    RewardLabel, TimeSlot,
};
use crate::data::DataError;
use crate::engine::{
    AmendedSlot, ContestApp, EiCovariates, Engine, EngineError, PathView, SimError,
    SimulationConfig, SlotRef,
};
use crate::rng::Stream;

/// One match of the calendar; `result` is the realized score, if played.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fixture {
    pub matchday: u32,
    pub home: u32,
    pub away: u32,
    pub result: Option<(u32, u32)>,
}

/// Cumulative league table entries: points, goal difference, goals scored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Standings {
    pub points: Vec<i64>,
    pub goal_diff: Vec<i64>,
    pub goals_for: Vec<i64>,
}

impl Standings {
    pub fn zeros(n_teams: usize) -> Self {
        Standings {
            points: vec![0; n_teams],
            goal_diff: vec![0; n_teams],
            goals_for: vec![0; n_teams],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Book one result: 3 points for a win, 1 each for a draw.
    pub fn apply_result(&mut self, home: usize, away: usize, goals_home: u32, goals_away: u32) {
        match goals_home.cmp(&goals_away) {
            std::cmp::Ordering::Greater => self.points[home] += 3,
            std::cmp::Ordering::Equal => {
                self.points[home] += 1;
                self.points[away] += 1;
            }
            std::cmp::Ordering::Less => self.points[away] += 3,
        }
        let diff = goals_home as i64 - goals_away as i64;
        self.goal_diff[home] += diff;
        self.goal_diff[away] -= diff;
        self.goals_for[home] += goals_home as i64;
        self.goals_for[away] += goals_away as i64;
    }

    /// Book a categorical outcome together with its score payload (the
    /// score may be the (0,0) placeholder when scores are not simulated, in
    /// which case only points move).
    fn apply_outcome(&mut self, home: usize, away: usize, outcome: usize, score: (u32, u32)) {
        match MatchOutcome::from_index(outcome) {
            MatchOutcome::Home => self.points[home] += 3,
            MatchOutcome::Draw => {
                self.points[home] += 1;
                self.points[away] += 1;
            }
            MatchOutcome::Away => self.points[away] += 3,
        }
        let diff = score.0 as i64 - score.1 as i64;
        self.goal_diff[home] += diff;
        self.goal_diff[away] -= diff;
        self.goals_for[home] += score.0 as i64;
        self.goals_for[away] += score.1 as i64;
    }
}

/// Teams ranked best-first: points, then goal difference, then goals
/// scored, then name order as the deterministic final tier.
pub fn final_ranking(standings: &Standings, names: &[String]) -> Vec<usize> {
    let mut name_rank: Vec<usize> = (0..names.len()).collect();
    name_rank.sort_by(|&a, &b| names[a].cmp(&names[b]));
    let mut rank_of_name = vec![0usize; names.len()];
    for (r, &t) in name_rank.iter().enumerate() {
        rank_of_name[t] = r;
    }
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by_key(|&t| {
        (
            std::cmp::Reverse(standings.points[t]),
            std::cmp::Reverse(standings.goal_diff[t]),
            std::cmp::Reverse(standings.goals_for[t]),
            rank_of_name[t],
        )
    });
    order
}

/// Final ranking of a season given its fixtures; every fixture must carry a
/// realized result.
pub fn season_ranking(
    names: &[String],
    fixtures: &[Fixture],
    baseline: &Standings,
) -> Result<Vec<usize>, LeagueError> {
    let mut standings = baseline.clone();
    for f in fixtures {
        let (gh, ga) = f.result.ok_or(LeagueError::UnresolvedFixture {
            matchday: f.matchday,
            home: f.home,
            away: f.away,
        })?;
        standings.apply_result(f.home as usize, f.away as usize, gh, ga);
    }
    Ok(final_ranking(&standings, names))
}

#[derive(Debug, Error)]
pub enum LeagueError {
    #[error("team count {n} must be even and >= 2")]
    OddTeamCount { n: usize },
    #[error("unknown reward structure code '{code}'; known codes: {known}")]
    UnknownRewardCode { code: String, known: String },
    #[error("invalid reward regions: {message}")]
    InvalidRegions { message: String },
    #[error("invalid model parameters: {message}")]
    InvalidParams { message: String },
    #[error("fixture md{matchday} between #{home} and #{away} has no result")]
    UnresolvedFixture { matchday: u32, home: u32, away: u32 },
    #[error("team '{team}' appears twice on matchday {matchday}")]
    TeamPlaysTwice { team: String, matchday: u32 },
    #[error("{message}")]
    Setup { message: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Data(#[from] DataError),
}

// ---------------------------------------------------------------------------
// Engine application
// ---------------------------------------------------------------------------

/// Everything needed to instantiate one league season.
#[derive(Debug, Clone)]
pub struct LeagueSetup {
    pub teams: Vec<String>,
    pub strengths: Vec<f64>,
    pub fixtures: Vec<Fixture>,
    /// Standings carried into the first scheduled fixture (zero for a full
    /// season, a published table for a mid-season reconstruction).
    pub baseline: Standings,
    pub params: MatchModelParams,
    /// Simulate exact scores for goal-based tie-breaking. Without scores,
    /// simulated results move points only and ties break on the baseline
    /// goal columns.
    pub draw_scores: bool,
    pub structure: RewardStructure,
    pub overrides: BTreeMap<u32, RewardStructure>,
    pub cups: Vec<CupCompetition>,
}

impl LeagueSetup {
    pub fn new(
        teams: Vec<String>,
        strengths: Vec<f64>,
        fixtures: Vec<Fixture>,
        structure: RewardStructure,
    ) -> Self {
        let baseline = Standings::zeros(teams.len());
        LeagueSetup {
            teams,
            strengths,
            fixtures,
            baseline,
            params: MatchModelParams::default(),
            draw_scores: true,
            structure,
            overrides: BTreeMap::new(),
            cups: Vec::new(),
        }
    }
}

fn match_outcome_space() -> Vec<OutcomeLabel> {
    vec![OutcomeLabel::new("H"), OutcomeLabel::new("D"), OutcomeLabel::new("A")]
}

/// Realized (outcome index, score) per fixture.
type RealizedResults = Vec<Option<(usize, (u32, u32))>>;

/// One season as an engine application. Event index i is fixture i.
#[derive(Clone)]
pub struct LeagueApp {
    definition: Arc<ContestDefinition>,
    fixtures: Arc<Vec<Fixture>>,
    teams: Arc<Vec<String>>,
    strengths: Arc<Vec<f64>>,
    name_rank: Arc<Vec<u32>>,
    baseline: Standings,
    params: MatchModelParams,
    sampler: Option<Arc<ScoreSampler>>,
    structure: Arc<RewardStructure>,
    overrides: Arc<BTreeMap<u32, RewardStructure>>,
    cups: Arc<Vec<CupCompetition>>,
    realized: Arc<RealizedResults>,
    /// Outcome probabilities per fixture under the current EI covariates.
    probs: Arc<Vec<[f64; 3]>>,
    labels: Arc<Vec<RewardLabel>>,
}

impl LeagueApp {
    /// Build the application; results of matchdays >= `cutoff` are treated
    /// as unplayed (prospective analysis).
    pub fn new(setup: &LeagueSetup, cutoff: Option<u32>) -> Result<LeagueApp, LeagueError> {
        let n = setup.teams.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(LeagueError::OddTeamCount { n });
        }
        if setup.strengths.len() != n {
            return Err(LeagueError::Setup {
                message: format!("{} strengths for {} teams", setup.strengths.len(), n),
            });
        }
        if setup.structure.league_size() != n as u32 {
            return Err(LeagueError::InvalidRegions {
                message: format!(
                    "regions cover {} ranks, league has {} teams",
                    setup.structure.league_size(),
                    n
                ),
            });
        }
        if setup.baseline.len() != n {
            return Err(LeagueError::Setup { message: "baseline size mismatch".into() });
        }
        setup.params.validate()?;
        for cup in &setup.cups {
            if cup.candidates.is_empty() {
                return Err(LeagueError::Setup {
                    message: format!("cup '{}' has no candidate teams", cup.name),
                });
            }
        }

        // One match per team and matchday.
        let mut seen: BTreeMap<(u32, u32), ()> = BTreeMap::new();
        for f in &setup.fixtures {
            for team in [f.home, f.away] {
                if seen.insert((f.matchday, team), ()).is_some() {
                    return Err(LeagueError::TeamPlaysTwice {
                        team: setup.teams[team as usize].clone(),
                        matchday: f.matchday,
                    });
                }
            }
        }

        let contestants: Vec<ContestantId> =
            setup.teams.iter().map(|t| ContestantId::new(t.clone())).collect();
        let events: Vec<Event> = setup
            .fixtures
            .iter()
            .map(|f| Event {
                id: fixture_event_id(f, &setup.teams),
                participants: vec![
                    contestants[f.home as usize].clone(),
                    contestants[f.away as usize].clone(),
                ],
                outcome_space: match_outcome_space(),
                covariates: CovariateSet::new(),
            })
            .collect();
        let mut matchdays: Vec<u32> = setup.fixtures.iter().map(|f| f.matchday).collect();
        matchdays.sort_unstable();
        matchdays.dedup();
        let schedule = ContestSchedule::new(
            matchdays
                .iter()
                .map(|&md| TimeSlot {
                    index: md as i64,
                    events: setup
                        .fixtures
                        .iter()
                        .enumerate()
                        .filter(|(_, f)| f.matchday == md)
                        .map(|(i, _)| events[i].id.clone())
                        .collect(),
                })
                .collect(),
        );
        let definition =
            Arc::new(ContestDefinition { contestants, events, schedule });

        let realized = setup
            .fixtures
            .iter()
            .map(|f| match (f.result, cutoff) {
                (Some(_), Some(cut)) if f.matchday >= cut => None,
                (Some((gh, ga)), _) => {
                    Some((MatchOutcome::from_score(gh, ga) as usize, (gh, ga)))
                }
                (None, _) => None,
            })
            .collect();

        let mut name_rank_order: Vec<usize> = (0..n).collect();
        name_rank_order.sort_by(|&a, &b| setup.teams[a].cmp(&setup.teams[b]));
        let mut name_rank = vec![0u32; n];
        for (r, &t) in name_rank_order.iter().enumerate() {
            name_rank[t] = r as u32;
        }

        let mut app = LeagueApp {
            definition,
            fixtures: Arc::new(setup.fixtures.clone()),
            teams: Arc::new(setup.teams.clone()),
            strengths: Arc::new(setup.strengths.clone()),
            name_rank: Arc::new(name_rank),
            baseline: setup.baseline.clone(),
            params: setup.params,
            sampler: setup
                .draw_scores
                .then(|| Arc::new(ScoreSampler::new(setup.params.lambda_home, setup.params.lambda_away))),
            structure: Arc::new(setup.structure.clone()),
            overrides: Arc::new(setup.overrides.clone()),
            cups: Arc::new(setup.cups.clone()),
            realized: Arc::new(realized),
            probs: Arc::new(Vec::new()),
            labels: Arc::new(region_labels()),
        };
        app.probs = Arc::new(app.compute_probs(None));
        Ok(app)
    }

    fn compute_probs(&self, ei: Option<&EiCovariates>) -> Vec<[f64; 3]> {
        self.fixtures
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let (eh, ea) = match ei {
                    Some(table) => (table.get(i, 0), table.get(i, 1)),
                    None => (0.0, 0.0),
                };
                match_outcome_probs(
                    &self.params,
                    self.strengths[f.home as usize],
                    self.strengths[f.away as usize],
                    eh,
                    ea,
                )
            })
            .collect()
    }

    /// Outcome probabilities of fixture `i` under the current covariates.
    pub fn fixture_probs(&self, i: usize) -> [f64; 3] {
        self.probs[i]
    }

    pub fn fixtures(&self) -> &[Fixture] {
        &self.fixtures
    }

    pub fn teams(&self) -> &[String] {
        &self.teams
    }
}

pub fn fixture_event_id(fixture: &Fixture, teams: &[String]) -> EventId {
    EventId::new(format!(
        "md{} {} v {}",
        fixture.matchday, teams[fixture.home as usize], teams[fixture.away as usize]
    ))
}

impl ContestApp for LeagueApp {
    type Dyn = Standings;
    type Detail = (u32, u32);

    fn definition(&self) -> &ContestDefinition {
        &self.definition
    }

    fn reward_labels(&self) -> &[RewardLabel] {
        &self.labels
    }

    fn initial_dyn(&self) -> Standings {
        self.baseline.clone()
    }

    fn realized(&self, event: usize) -> Option<(usize, (u32, u32))> {
        self.realized[event]
    }

    fn outcome_probs(
        &self,
        event: usize,
        _dyn_state: &Standings,
        out: &mut [f64],
    ) -> Result<(), SimError> {
        out.copy_from_slice(&self.probs[event]);
        Ok(())
    }

    fn draw_detail(
        &self,
        event: usize,
        outcome: usize,
        rng: &mut Stream,
    ) -> Result<(u32, u32), SimError> {
        match &self.sampler {
            None => Ok((0, 0)),
            Some(sampler) => draw_score(MatchOutcome::from_index(outcome), sampler, rng)
                .map_err(|e| match e {
                    SimError::ScoreRejectionCap { attempts, .. } => {
                        SimError::ScoreRejectionCap { event, attempts }
                    }
                    other => other,
                }),
        }
    }

    fn advance_slot(
        &self,
        slot: SlotRef<'_>,
        path: PathView<'_, (u32, u32)>,
        standings: &mut Standings,
    ) -> Option<Vec<AmendedSlot>> {
        for &ev in slot.events {
            let ev = ev as usize;
            let f = &self.fixtures[ev];
            let outcome = path.outcome(ev).expect("slot resolved");
            standings.apply_outcome(f.home as usize, f.away as usize, outcome, *path.detail(ev));
        }
        None
    }

    fn rewards(
        &self,
        _path: PathView<'_, (u32, u32)>,
        standings: &Standings,
        _rng: &mut Stream,
        out: &mut [u16],
    ) -> Result<(), SimError> {
        let n = self.teams.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_unstable_by_key(|&t| {
            let t = t as usize;
            (
                std::cmp::Reverse(standings.points[t]),
                std::cmp::Reverse(standings.goal_diff[t]),
                std::cmp::Reverse(standings.goals_for[t]),
                self.name_rank[t],
            )
        });
        let mut ranks = vec![0u32; n];
        for (pos, &t) in order.iter().enumerate() {
            ranks[t as usize] = pos as u32 + 1;
        }

        let intl_last = self.structure.international_last();
        let mut extension = 0u32;
        for cup in self.cups.iter() {
            if cup.candidates.iter().all(|&t| ranks[t as usize] <= intl_last) {
                extension += 1;
            }
        }
        for t in 0..n {
            let structure = self.overrides.get(&(t as u32)).unwrap_or(&self.structure);
            out[t] = structure.region_of_rank(ranks[t], extension) as u16;
        }
        Ok(())
    }

    fn consumes_ei(&self) -> bool {
        self.params.consumes_ei()
    }

    fn with_ei(&self, table: &EiCovariates) -> Self {
        let mut next = self.clone();
        next.probs = Arc::new(self.compute_probs(Some(table)));
        next
    }
}

// ---------------------------------------------------------------------------
// Season-level study
// ---------------------------------------------------------------------------

/// Event importance of one fixture for both teams, plus the outcome
/// probabilities it was weighted with.
#[derive(Debug, Clone)]
pub struct SeasonEiRow {
    pub matchday: u32,
    pub home: String,
    pub away: String,
    pub ei_home: f64,
    pub ei_away: f64,
    pub pi: [f64; 3],
    pub iteration: u32,
}

/// Per-match EI for a season. Without a cutoff the season must be fully
/// played and a backward sweep with the configured number of iterations
/// runs; with a cutoff only that matchday is analyzed prospectively (single
/// iteration) using results strictly before it.
pub fn season_ei(
    setup: &LeagueSetup,
    cutoff: Option<u32>,
    sim: SimulationConfig,
) -> Result<Vec<SeasonEiRow>, LeagueError> {
    let app = LeagueApp::new(setup, cutoff)?;
    let iterations = sim.iterations;
    let engine = Engine::new(app.clone(), sim)?;

    let (records, final_app) = match cutoff {
        Some(_) => (engine.frontier_importances()?, app),
        None => {
            let mut per_iteration = engine.iterative_ei()?;
            let records = per_iteration.pop().expect("iterations >= 1");
            let final_app = if iterations >= 2 {
                let table = engine.ei_table(per_iteration.last().expect("iterations >= 2"));
                app.with_ei(&table)
            } else {
                app
            };
            (records, final_app)
        }
    };

    let def = final_app.definition().clone();
    let mut by_event: BTreeMap<usize, Vec<&crate::engine::EiRecord>> = BTreeMap::new();
    for rec in &records {
        let ev = def.event_index(&rec.event).expect("engine events");
        by_event.entry(ev).or_default().push(rec);
    }
    let mut rows = Vec::with_capacity(by_event.len());
    for (ev, recs) in by_event {
        let f = &final_app.fixtures()[ev];
        let home_id = ContestantId::new(final_app.teams()[f.home as usize].clone());
        let ei_of = |id: &ContestantId| {
            recs.iter()
                .find(|r| &r.contestant == id)
                .map(|r| r.value)
                .unwrap_or(0.0)
        };
        let away_id = ContestantId::new(final_app.teams()[f.away as usize].clone());
        rows.push(SeasonEiRow {
            matchday: f.matchday,
            home: final_app.teams()[f.home as usize].clone(),
            away: final_app.teams()[f.away as usize].clone(),
            ei_home: ei_of(&home_id),
            ei_away: ei_of(&away_id),
            pi: final_app.fixture_probs(ev),
            iteration: recs.first().map(|r| r.iteration).unwrap_or(1),
        });
    }
    rows.sort_by(|a, b| (a.matchday, &a.home).cmp(&(b.matchday, &b.home)));
    Ok(rows)
}
