//! Small fixed-probability round-robin contests: the workload for oracle
//! comparisons between exact enumeration and the Monte Carlo engine.
//!
//! Rewards depend on outcomes only (points, then team name), so exact
//! enumeration applies. The contest is assembled from the plain value-level
//! contracts, which also gives those contracts end-to-end coverage.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use crate::contest::{
    ContestDefinition, ContestError, ContestSchedule, ContestantId, CovariateSet, CovariateView,
    Event, EventId, NullGenerator, OutcomeLabel, OutcomeModel, OutcomeRecord, RewardFunction,
    RewardLabel, TimeSlot,
};
use crate::data::{split_list, DataError, KvConfig};
use crate::distance::DistanceKind;
use crate::engine::{ContestApp, Engine, EngineError, SimulationConfig, ValueApp};
use crate::league::schedule::single_round_robin;
use crate::rng::{self, Stream, StreamKey};

/// Specification of a toy contest, readable from a flat key-value file:
///
/// ```text
/// teams = Avon,Brent,Clyde,Derwent
/// pi_home = 0.45
/// pi_draw = 0.25
/// pi_away = 0.30
/// region_labels = champion,none,relegation
/// region_sizes = 1,2,1
/// ```
#[derive(Debug, Clone)]
pub struct ToySpec {
    pub teams: Vec<String>,
    pub probs: [f64; 3],
    pub region_labels: Vec<String>,
    pub region_sizes: Vec<u32>,
}

impl ToySpec {
    pub fn from_file(path: &Path) -> Result<ToySpec, DataError> {
        let cfg = KvConfig::parse_file(path)?;
        let teams = split_list(cfg.require("teams")?);
        let probs = [
            cfg.parse_value::<f64>("pi_home")?
                .ok_or_else(|| DataError::invalid(path, "missing key 'pi_home'"))?,
            cfg.parse_value::<f64>("pi_draw")?
                .ok_or_else(|| DataError::invalid(path, "missing key 'pi_draw'"))?,
            cfg.parse_value::<f64>("pi_away")?
                .ok_or_else(|| DataError::invalid(path, "missing key 'pi_away'"))?,
        ];
        let region_labels = split_list(cfg.require("region_labels")?);
        let region_sizes = split_list(cfg.require("region_sizes")?)
            .iter()
            .map(|s| s.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| DataError::invalid(path, format!("region_sizes: {e}")))?;
        let spec = ToySpec { teams, probs, region_labels, region_sizes };
        spec.validate().map_err(|m| DataError::invalid(path, m))?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), String> {
        if self.teams.len() < 2 || !self.teams.len().is_multiple_of(2) {
            return Err("team count must be even and >= 2".into());
        }
        if (self.probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err("pi_home + pi_draw + pi_away must be 1".into());
        }
        if self.region_labels.len() != self.region_sizes.len() {
            return Err("region_labels and region_sizes differ in length".into());
        }
        if self.region_sizes.iter().sum::<u32>() as usize != self.teams.len() {
            return Err("region sizes must sum to the team count".into());
        }
        Ok(())
    }

    /// Build the contest as a value-contract application (single round
    /// robin, fixed outcome probabilities, points-then-name reward).
    pub fn build(&self, seed: u64) -> Result<ValueApp<()>, EngineError> {
        let mut rng = rng::stream(seed, StreamKey::setup(2, 0));
        let fixtures = single_round_robin(self.teams.len(), &mut rng)
            .map_err(|e| EngineError::InvalidConfig(e.to_string()))?;

        let contestants: Vec<ContestantId> =
            self.teams.iter().map(|t| ContestantId::new(t.clone())).collect();
        let space =
            vec![OutcomeLabel::new("H"), OutcomeLabel::new("D"), OutcomeLabel::new("A")];
        let mut events = Vec::new();
        let mut pairing = BTreeMap::new();
        for f in &fixtures {
            let id = EventId::new(format!(
                "r{} {} v {}",
                f.matchday, self.teams[f.home as usize], self.teams[f.away as usize]
            ));
            pairing.insert(id.clone(), (f.home as usize, f.away as usize));
            events.push(Event {
                id,
                participants: vec![
                    contestants[f.home as usize].clone(),
                    contestants[f.away as usize].clone(),
                ],
                outcome_space: space.clone(),
                covariates: CovariateSet::new(),
            });
        }
        let mut matchdays: Vec<u32> = fixtures.iter().map(|f| f.matchday).collect();
        matchdays.sort_unstable();
        matchdays.dedup();
        let schedule = ContestSchedule::new(
            matchdays
                .iter()
                .map(|&md| TimeSlot {
                    index: md as i64,
                    events: fixtures
                        .iter()
                        .zip(&events)
                        .filter(|(f, _)| f.matchday == md)
                        .map(|(_, e)| e.id.clone())
                        .collect(),
                })
                .collect(),
        );
        let definition = Arc::new(ContestDefinition { contestants, events, schedule });

        let model = Arc::new(FixedProbModel { probs: self.probs });
        let reward = Arc::new(PointsRankReward {
            teams: self.teams.clone(),
            pairing,
            labels: self.region_labels.iter().map(|l| RewardLabel::new(l.clone())).collect(),
            sizes: self.region_sizes.clone(),
        });
        Ok(ValueApp::new(definition, model, Arc::new(NullGenerator), reward))
    }
}

/// Outcome model with one fixed probability vector for every match.
pub struct FixedProbModel {
    pub probs: [f64; 3],
}

impl OutcomeModel<()> for FixedProbModel {
    fn probabilities(
        &self,
        _event: &Event,
        _covariates: CovariateView<'_>,
    ) -> Result<Vec<f64>, ContestError> {
        Ok(self.probs.to_vec())
    }
}

/// Points (3/1/0) ranking with team name as the only tie-break, mapped to
/// contiguous rank regions.
pub struct PointsRankReward {
    teams: Vec<String>,
    pairing: BTreeMap<EventId, (usize, usize)>,
    labels: Vec<RewardLabel>,
    sizes: Vec<u32>,
}

impl RewardFunction<()> for PointsRankReward {
    fn labels(&self) -> &[RewardLabel] {
        &self.labels
    }

    fn reward(
        &self,
        outcomes: &[&OutcomeRecord<()>],
        contestant: &ContestantId,
        _rng: &mut Stream,
    ) -> Result<RewardLabel, ContestError> {
        let mut points = vec![0u32; self.teams.len()];
        for record in outcomes {
            let &(home, away) = self
                .pairing
                .get(&record.event)
                .ok_or_else(|| ContestError::Reward(format!("unknown event {}", record.event)))?;
            match record.outcome.as_str() {
                "H" => points[home] += 3,
                "D" => {
                    points[home] += 1;
                    points[away] += 1;
                }
                "A" => points[away] += 3,
                other => {
                    return Err(ContestError::Reward(format!("unknown outcome '{other}'")))
                }
            }
        }
        let mut order: Vec<usize> = (0..self.teams.len()).collect();
        order.sort_by(|&a, &b| points[b].cmp(&points[a]).then_with(|| self.teams[a].cmp(&self.teams[b])));
        let team = self
            .teams
            .iter()
            .position(|t| t == contestant.as_str())
            .ok_or_else(|| ContestError::Reward(format!("unknown contestant {contestant}")))?;
        let rank = order.iter().position(|&t| t == team).unwrap() as u32 + 1;

        let mut upper = 0u32;
        for (label, size) in self.labels.iter().zip(&self.sizes) {
            upper += size;
            if rank <= upper {
                return Ok(label.clone());
            }
        }
        Ok(self.labels.last().expect("regions non-empty").clone())
    }
}

/// One conditional's oracle comparison: total variation between the Monte
/// Carlo estimate and exact enumeration.
#[derive(Debug, Clone)]
pub struct OracleRow {
    pub event: EventId,
    pub outcome: OutcomeLabel,
    pub contestant: ContestantId,
    pub tv_gap: f64,
}

/// Oracle report over every (event, outcome, contestant) conditional.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub tolerance: f64,
    pub n_mc: u64,
    pub seed: u64,
}

impl OracleReport {
    pub fn max_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.tv_gap).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.tv_gap <= self.tolerance)
    }
}

/// Compare Monte Carlo conditional reward distributions against exact
/// enumeration for every conditional of the contest.
pub fn compare_oracle(
    spec: &ToySpec,
    n_mc: u64,
    seed: u64,
    tolerance: f64,
) -> Result<OracleReport, EngineError> {
    let app = spec.build(seed)?;
    let engine = Engine::new(app, SimulationConfig::new(n_mc, seed).with_distance(DistanceKind::Jsd))?;
    let definition = engine.app().definition().clone();

    let mut rows = Vec::new();
    for event in &definition.events {
        for outcome in &event.outcome_space {
            let exact = engine.exact_enumeration_all(&event.id, outcome)?;
            for (k, contestant) in definition.contestants.iter().enumerate() {
                let empirical =
                    engine.conditional_reward_distribution(&event.id, outcome, contestant)?;
                let tv_gap = 0.5
                    * exact[k]
                        .mass()
                        .iter()
                        .map(|(label, p)| (p - empirical.prob(label)).abs())
                        .sum::<f64>();
                rows.push(OracleRow {
                    event: event.id.clone(),
                    outcome: outcome.clone(),
                    contestant: contestant.clone(),
                    tv_gap,
                });
            }
        }
    }
    Ok(OracleReport { rows, tolerance, n_mc, seed })
}
