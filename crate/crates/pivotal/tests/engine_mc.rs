//! Monte Carlo engine against its exact-enumeration oracle, plus the
//! determinism and precision guarantees.

mod common;

use std::sync::Arc;

use pivotal::contest::{
    ContestDefinition, ContestSchedule, ContestantId, CovariateSet, Event, EventId, NullGenerator,
    OutcomeLabel, RewardLabel, TimeSlot,
};
use pivotal::distance::DistanceKind;
use pivotal::engine::{ContestApp, Engine, EngineError, SimulationConfig, ValueApp};

use common::*;

fn ev(name: &str) -> EventId {
    EventId::new(name)
}

fn out(name: &str) -> OutcomeLabel {
    OutcomeLabel::new(name)
}

fn who(name: &str) -> ContestantId {
    ContestantId::new(name)
}

#[test]
fn empty_remainder_returns_realized_outcomes_unchanged() {
    let app = momentum_contest()
        .with_outcomes(&momentum_outcomes(["w", "l", "w"]))
        .unwrap();
    let engine = Engine::new(app, SimulationConfig::new(10, 1)).unwrap();
    for path in [0, 1, 2] {
        let outcomes = engine.simulate_remainder(path).unwrap();
        let labels: Vec<&str> = outcomes.iter().map(|o| o.outcome.as_str()).collect();
        assert_eq!(labels, vec!["w", "l", "w"]);
    }
}

#[test]
fn deterministic_model_yields_one_path_regardless_of_stream() {
    let base = jackpot_contest();
    let definition = Arc::new(base.definition().clone());
    let app = ValueApp::new(
        definition,
        Arc::new(ConstModel([1.0, 0.0])),
        Arc::new(NullGenerator),
        Arc::new(JackpotReward),
    );
    let engine = Engine::new(app, SimulationConfig::new(10, 99)).unwrap();
    for path in 0..5 {
        let outcomes = engine.simulate_remainder(path).unwrap();
        assert!(outcomes.iter().all(|o| o.outcome.as_str() == "w"));
    }
}

#[test]
fn fair_binary_events_visit_all_paths_uniformly() {
    let engine = Engine::new(jackpot_contest(), SimulationConfig::new(10, 7)).unwrap();
    let mut counts = [0u32; 4];
    let n = 10_000;
    for path in 0..n {
        let outcomes = engine.simulate_remainder(path).unwrap();
        let idx = outcomes
            .iter()
            .fold(0usize, |acc, o| acc * 2 + usize::from(o.outcome.as_str() == "w"));
        counts[idx] += 1;
    }
    for c in counts {
        let freq = c as f64 / n as f64;
        assert!((freq - 0.25).abs() <= 0.02, "path frequency {freq}");
    }
}

#[test]
fn last_event_conditional_is_a_point_mass() {
    // Legs 1 and 2 realized: the reward is then a function of leg 3 alone.
    let app = momentum_contest()
        .with_outcomes(&momentum_outcomes(["w", "l", "w"])[..2])
        .unwrap();
    let engine = Engine::new(app, SimulationConfig::new(500, 3)).unwrap();
    let dist = engine
        .conditional_reward_distribution(&ev("leg-3"), &out("w"), &who("Racer"))
        .unwrap();
    assert_eq!(dist.prob(&RewardLabel::new("w2")), 1.0);
    let dist = engine
        .conditional_reward_distribution(&ev("leg-3"), &out("l"), &who("Racer"))
        .unwrap();
    assert_eq!(dist.prob(&RewardLabel::new("w1")), 1.0);
}

#[test]
fn settled_contestant_has_point_mass_and_exactly_zero_ei() {
    let engine = Engine::new(momentum_contest(), SimulationConfig::new(400, 5)).unwrap();
    for outcome in ["w", "l"] {
        let dist = engine
            .conditional_reward_distribution(&ev("leg-1"), &out(outcome), &who("Bystander"))
            .unwrap();
        assert_eq!(dist.prob(&RewardLabel::new("w0")), 1.0);
    }
    for metric in [DistanceKind::Jsd, DistanceKind::TotalVariation] {
        let engine = Engine::new(
            momentum_contest(),
            SimulationConfig::new(400, 5).with_distance(metric),
        )
        .unwrap();
        for leg in ["leg-1", "leg-2", "leg-3"] {
            let rec = engine.event_importance(&ev(leg), &who("Bystander")).unwrap();
            assert_eq!(rec.value, 0.0, "settled contestant at {leg}");
        }
    }
}

#[test]
fn decisive_final_event_has_maximal_importance() {
    // One fair binary event decides win/lose outright.
    let contestants = vec![who("Racer")];
    let events = vec![Event {
        id: ev("final"),
        participants: contestants.clone(),
        outcome_space: binary_space(),
        covariates: CovariateSet::new(),
    }];
    let schedule =
        ContestSchedule::new(vec![TimeSlot { index: 1, events: vec![ev("final")] }]);
    let definition = Arc::new(ContestDefinition { contestants, events, schedule });

    struct FinalReward;
    impl pivotal::contest::RewardFunction<()> for FinalReward {
        fn labels(&self) -> &[RewardLabel] {
            use std::sync::OnceLock;
            static LABELS: OnceLock<Vec<RewardLabel>> = OnceLock::new();
            LABELS.get_or_init(|| vec![RewardLabel::new("win"), RewardLabel::new("lose")])
        }
        fn reward(
            &self,
            outcomes: &[&pivotal::contest::OutcomeRecord<()>],
            _contestant: &ContestantId,
            _rng: &mut pivotal::rng::Stream,
        ) -> Result<RewardLabel, pivotal::contest::ContestError> {
            Ok(RewardLabel::new(if outcomes[0].outcome.as_str() == "w" { "win" } else { "lose" }))
        }
    }

    let app = ValueApp::new(
        definition,
        Arc::new(FairModel),
        Arc::new(NullGenerator),
        Arc::new(FinalReward),
    );
    for metric in [
        DistanceKind::Jsd,
        DistanceKind::WinProbDifference(RewardLabel::new("win")),
    ] {
        let engine =
            Engine::new(app.clone(), SimulationConfig::new(300, 2).with_distance(metric)).unwrap();
        let rec = engine.event_importance(&ev("final"), &who("Racer")).unwrap();
        assert!((rec.value - 1.0).abs() < 1e-12, "EI {}", rec.value);
    }
}

/// DKW-style bound: per-label deviation between the empirical conditional
/// and exact enumeration, at confidence delta = 1e-3.
fn dkw_bound(n_mc: u64) -> f64 {
    3.0 * ((2.0f64 / 1e-3).ln() / (2.0 * n_mc as f64)).sqrt()
}

#[test]
fn conditionals_match_enumeration_within_tolerance() {
    let apps: Vec<(&str, ValueApp<()>)> =
        vec![("momentum", momentum_contest()), ("jackpot", jackpot_contest())];
    let n_mc = 50_000;
    for (name, app) in apps {
        let engine = Engine::new(app, SimulationConfig::new(n_mc, 11)).unwrap();
        let definition = engine.app().definition().clone();
        for event in &definition.events {
            for outcome in &event.outcome_space {
                let exact = engine.exact_enumeration_all(&event.id, outcome).unwrap();
                for (k, contestant) in definition.contestants.iter().enumerate() {
                    let empirical = engine
                        .conditional_reward_distribution(&event.id, outcome, contestant)
                        .unwrap();
                    assert!((empirical.total_mass() - 1.0).abs() <= 1e-9);
                    let tv: f64 = 0.5
                        * exact[k]
                            .mass()
                            .iter()
                            .map(|(l, p)| (p - empirical.prob(l)).abs())
                            .sum::<f64>();
                    assert!(
                        tv <= 0.02,
                        "{name}/{}/{}/{}: TV {tv}",
                        event.id,
                        outcome,
                        contestant
                    );
                    for (label, p) in exact[k].mass() {
                        let gap = (p - empirical.prob(label)).abs();
                        assert!(
                            gap <= dkw_bound(n_mc),
                            "{name}/{}/{}: label {label} gap {gap}",
                            event.id,
                            outcome
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn enumeration_of_jackpot_follows_the_product_rule() {
    let engine = Engine::new(jackpot_contest(), SimulationConfig::new(10, 1)).unwrap();
    let win = RewardLabel::new("win");
    let on_w = engine
        .exact_enumeration(&ev("flip-1"), &out("w"), &who("Racer"))
        .unwrap();
    assert!((on_w.prob(&win) - 0.5).abs() < 1e-12);
    let on_l = engine
        .exact_enumeration(&ev("flip-1"), &out("l"), &who("Racer"))
        .unwrap();
    assert_eq!(on_l.prob(&win), 0.0);
    // Mixture over the fair first flip: the unconditional win probability.
    let p_win = 0.5 * on_w.prob(&win) + 0.5 * on_l.prob(&win);
    assert!((p_win - 0.25).abs() < 1e-12);
}

#[test]
fn enumeration_with_deterministic_model_is_a_single_path() {
    let base = momentum_contest();
    let definition = Arc::new(base.definition().clone());
    let app = ValueApp::new(
        definition,
        Arc::new(ConstModel([0.0, 1.0])),
        Arc::new(NullGenerator),
        Arc::new(WinCountReward),
    );
    let engine = Engine::new(app, SimulationConfig::new(10, 1)).unwrap();
    let dist = engine
        .exact_enumeration(&ev("leg-1"), &out("w"), &who("Racer"))
        .unwrap();
    // Forced first win, then two forced losses: exactly one win.
    assert_eq!(dist.prob(&RewardLabel::new("w1")), 1.0);
}

#[test]
fn four_team_round_robin_matches_independent_hand_enumeration() {
    use pivotal::toy::ToySpec;
    let spec = ToySpec {
        teams: vec!["Avon".into(), "Brent".into(), "Clyde".into(), "Derwent".into()],
        probs: [0.45, 0.25, 0.30],
        region_labels: vec!["champion".into(), "none".into(), "relegation".into()],
        region_sizes: vec![1, 2, 1],
    };
    let app = spec.build(17).unwrap();
    let definition = app.definition().clone();
    let engine = Engine::new(app, SimulationConfig::new(10, 17)).unwrap();

    // Independent oracle: walk all 3^6 outcome vectors with six nested
    // ternary digits, score 3/1/0 points, rank by points then name, and
    // map ranks to the three regions. Only the contest structure (who plays
    // whom) is taken from the built definition.
    let teams = ["Avon", "Brent", "Clyde", "Derwent"];
    let pairings: Vec<(usize, usize)> = definition
        .events
        .iter()
        .map(|e| {
            let home = teams.iter().position(|t| *t == e.participants[0].as_str()).unwrap();
            let away = teams.iter().position(|t| *t == e.participants[1].as_str()).unwrap();
            (home, away)
        })
        .collect();
    assert_eq!(pairings.len(), 6);

    let target_event = 0usize;
    let forced_outcome = 0usize; // home win
    let probs = [0.45, 0.25, 0.30];
    let mut mass = [[0.0f64; 3]; 4]; // team -> region prob
    let mut combo = [0usize; 6];
    let total_paths = 3usize.pow(6);
    for code in 0..total_paths {
        let mut c = code;
        for slot in combo.iter_mut() {
            *slot = c % 3;
            c /= 3;
        }
        if combo[target_event] != forced_outcome {
            continue;
        }
        let mut prob = 1.0;
        for (i, &o) in combo.iter().enumerate() {
            if i != target_event {
                prob *= probs[o];
            }
        }
        let mut points = [0u32; 4];
        for (i, &(home, away)) in pairings.iter().enumerate() {
            match combo[i] {
                0 => points[home] += 3,
                1 => {
                    points[home] += 1;
                    points[away] += 1;
                }
                _ => points[away] += 3,
            }
        }
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&a, &b| points[b].cmp(&points[a]).then(teams[a].cmp(teams[b])));
        for (pos, &team) in order.iter().enumerate() {
            let region = match pos {
                0 => 0,
                1 | 2 => 1,
                _ => 2,
            };
            mass[team][region] += prob;
        }
    }

    let event = &definition.events[target_event].id;
    let exact = engine.exact_enumeration_all(event, &out("H")).unwrap();
    let labels = ["champion", "none", "relegation"];
    for (team, name) in teams.iter().enumerate() {
        for (region, label) in labels.iter().enumerate() {
            let got = exact[team].prob(&RewardLabel::new(*label));
            let want = mass[team][region];
            assert!(
                (got - want).abs() < 1e-12,
                "{name}/{label}: engine {got} vs oracle {want}"
            );
        }
    }
}

#[test]
fn enumeration_guard_rejects_large_contests() {
    let contestants = vec![who("Racer")];
    let events: Vec<Event> = (0..21)
        .map(|i| Event {
            id: ev(&format!("e{i}")),
            participants: contestants.clone(),
            outcome_space: binary_space(),
            covariates: CovariateSet::new(),
        })
        .collect();
    let schedule = ContestSchedule::new(
        events
            .iter()
            .enumerate()
            .map(|(i, e)| TimeSlot { index: i as i64, events: vec![e.id.clone()] })
            .collect(),
    );
    let definition = Arc::new(ContestDefinition { contestants, events, schedule });
    let app = ValueApp::new(
        definition,
        Arc::new(FairModel),
        Arc::new(NullGenerator),
        Arc::new(JackpotReward),
    );
    let engine = Engine::new(app, SimulationConfig::new(10, 1)).unwrap();
    let err = engine.exact_enumeration(&ev("e0"), &out("w"), &who("Racer")).unwrap_err();
    assert!(matches!(err, EngineError::PathCountExceeded { .. }), "{err}");
}

#[test]
fn invalid_model_probabilities_name_the_event() {
    let base = jackpot_contest();
    let definition = Arc::new(base.definition().clone());
    let app = ValueApp::new(
        definition,
        Arc::new(ConstModel([0.4, 0.4])),
        Arc::new(NullGenerator),
        Arc::new(JackpotReward),
    );
    let engine = Engine::new(app, SimulationConfig::new(10, 1)).unwrap();
    let err = engine.simulate_remainder(0).unwrap_err();
    match err {
        EngineError::Simulation { event, .. } => assert_eq!(event, ev("flip-1")),
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn results_are_bit_identical_across_thread_counts() {
    let run = |threads: usize| -> Vec<(String, String, f64, u64)> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let engine =
                Engine::new(momentum_contest(), SimulationConfig::new(4000, 123)).unwrap();
            let mut records = Vec::new();
            for leg in ["leg-1", "leg-2", "leg-3"] {
                for rec in engine.event_importance_all(&ev(leg)).unwrap() {
                    records.push((
                        rec.event.to_string(),
                        rec.contestant.to_string(),
                        rec.value,
                        rec.n_mc_effective,
                    ));
                }
            }
            records
        })
    };
    let base = run(1);
    assert_eq!(base, run(2));
    assert_eq!(base, run(4));
}

#[test]
fn ei_variance_shrinks_like_one_over_n_mc() {
    // Repeated estimates with different seeds; the log-log slope of the
    // variance against n_mc should sit near -1.
    let sizes = [250u64, 1000, 4000, 16000];
    let replicates = 60u64;
    let mut log_n = Vec::new();
    let mut log_var = Vec::new();
    for &n_mc in &sizes {
        let values: Vec<f64> = (0..replicates)
            .map(|seed| {
                let engine = Engine::new(
                    momentum_contest(),
                    SimulationConfig::new(n_mc, 1000 + seed),
                )
                .unwrap();
                engine.event_importance(&ev("leg-2"), &who("Racer")).unwrap().value
            })
            .collect();
        let mean: f64 = values.iter().sum::<f64>() / values.len() as f64;
        let var: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (values.len() - 1) as f64;
        log_n.push((n_mc as f64).ln());
        log_var.push(var.ln());
    }
    let n = log_n.len() as f64;
    let mx: f64 = log_n.iter().sum::<f64>() / n;
    let my: f64 = log_var.iter().sum::<f64>() / n;
    let slope: f64 = log_n
        .iter()
        .zip(&log_var)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / log_n.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    assert!(
        (-1.3..=-0.7).contains(&slope),
        "variance slope {slope} outside [-1.3, -0.7]"
    );
}
