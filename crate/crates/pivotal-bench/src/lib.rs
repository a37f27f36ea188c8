//! Shared fixtures for the criterion benches.

use pivotal::league::{
    generate_double_round_robin, LeagueApp, LeagueSetup, RewardStructure,
};
use pivotal::primaries::{
    CandidateParams, PreferenceSample, PrimariesApp, ScheduleFrame, StateRecord,
};
use pivotal::rng::{stream, StreamKey};

/// A plausible 57-unit election calendar (delegates spread like a real
/// cycle, a handful of shared dates).
pub fn synthetic_states() -> Vec<StateRecord> {
    (0..57)
        .map(|i| StateRecord {
            name: format!("Unit {i:02}"),
            date: format!("2020-{:02}-{:02}", 2 + i / 10, 1 + (i % 10) * 2),
            delegates: 6 + ((i * 37) % 400) as u64,
        })
        .collect()
}

pub fn primaries_app(states: &[StateRecord]) -> PrimariesApp {
    let frame = ScheduleFrame::from_states(states);
    let schedule = frame.schedule_for(&frame.regular_order, states);
    PrimariesApp::new(
        states,
        schedule,
        CandidateParams::default(),
        PreferenceSample::draw(states.len(), 42, 0),
    )
}

/// A realized 18-team double round robin simulated from the model.
pub fn realized_league(seed: u64) -> LeagueSetup {
    use pivotal::engine::{Engine, SimulationConfig};
    let teams: Vec<String> = (0..18).map(|i| format!("Club {:02}", i + 1)).collect();
    let strengths: Vec<f64> = (0..18).map(|i| 0.85 - 0.1 * i as f64).collect();
    let mut rng = stream(seed, StreamKey::setup(4, 0));
    let fixtures = generate_double_round_robin(18, &mut rng).unwrap();
    let structure = RewardStructure::from_code("4/3/PDD", 18).unwrap();
    let mut setup = LeagueSetup::new(teams, strengths, fixtures, structure);
    let app = LeagueApp::new(&setup, None).unwrap();
    let engine = Engine::new(app, SimulationConfig::new(1, seed)).unwrap();
    for (fixture, record) in setup.fixtures.iter_mut().zip(engine.simulate_remainder(0).unwrap())
    {
        fixture.result = record.detail;
    }
    setup
}
