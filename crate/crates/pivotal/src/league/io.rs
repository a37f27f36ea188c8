//! League data files: fixtures, ratings, baseline standings (CSV) and the
//! flat key-value league config (reward regions, cups, model parameters).

use std::collections::BTreeMap;
use std::path::Path;

use super::{
    CupCompetition, Fixture, LeagueError, LeagueSetup, MatchModelParams, RewardStructure,
    Standings, REGION_COUNT,
};
use crate::data::{split_list, DataError, KvConfig};

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, DataError> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, err: csv::Error) -> DataError {
    match err.position() {
        Some(pos) => DataError::format(path, pos.line(), err),
        None => DataError::invalid(path, err),
    }
}

fn columns(
    path: &Path,
    reader: &mut csv::Reader<std::fs::File>,
    names: &[&str],
) -> Result<Vec<usize>, DataError> {
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| DataError::invalid(path, format!("missing column '{name}'")))
        })
        .collect()
}

/// Ratings CSV: `team,strength`. Defines the team set of the league.
pub fn read_ratings_csv(path: &Path) -> Result<(Vec<String>, Vec<f64>), DataError> {
    let mut reader = csv_reader(path)?;
    let cols = columns(path, &mut reader, &["team", "strength"])?;
    let mut teams = Vec::new();
    let mut strengths = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let team = record.get(cols[0]).unwrap_or("").to_owned();
        if team.is_empty() {
            return Err(DataError::format(path, line, "empty team name"));
        }
        if teams.contains(&team) {
            return Err(DataError::format(path, line, format!("duplicate team '{team}'")));
        }
        let strength: f64 = record
            .get(cols[1])
            .unwrap_or("")
            .parse()
            .map_err(|e| DataError::format(path, line, format!("strength: {e}")))?;
        if !strength.is_finite() {
            return Err(DataError::format(path, line, "strength must be finite"));
        }
        teams.push(team);
        strengths.push(strength);
    }
    if teams.is_empty() {
        return Err(DataError::invalid(path, "no teams"));
    }
    Ok((teams, strengths))
}

fn team_index(path: &Path, line: u64, teams: &[String], name: &str) -> Result<u32, DataError> {
    teams
        .iter()
        .position(|t| t == name)
        .map(|i| i as u32)
        .ok_or_else(|| DataError::format(path, line, format!("unknown team '{name}'")))
}

/// Fixtures CSV: `matchday,home,away,goals_home,goals_away`; the goal
/// columns are blank for unplayed matches.
pub fn read_fixtures_csv(path: &Path, teams: &[String]) -> Result<Vec<Fixture>, DataError> {
    let mut reader = csv_reader(path)?;
    let cols =
        columns(path, &mut reader, &["matchday", "home", "away", "goals_home", "goals_away"])?;
    let mut fixtures = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let matchday: u32 = record
            .get(cols[0])
            .unwrap_or("")
            .parse()
            .map_err(|e| DataError::format(path, line, format!("matchday: {e}")))?;
        let home = team_index(path, line, teams, record.get(cols[1]).unwrap_or(""))?;
        let away = team_index(path, line, teams, record.get(cols[2]).unwrap_or(""))?;
        if home == away {
            return Err(DataError::format(path, line, "team plays itself"));
        }
        let gh = record.get(cols[3]).unwrap_or("");
        let ga = record.get(cols[4]).unwrap_or("");
        let result = match (gh.is_empty(), ga.is_empty()) {
            (true, true) => None,
            (false, false) => {
                let gh: u32 = gh
                    .parse()
                    .map_err(|e| DataError::format(path, line, format!("goals_home: {e}")))?;
                let ga: u32 = ga
                    .parse()
                    .map_err(|e| DataError::format(path, line, format!("goals_away: {e}")))?;
                Some((gh, ga))
            }
            _ => {
                return Err(DataError::format(path, line, "half-filled result"));
            }
        };
        fixtures.push(Fixture { matchday, home, away, result });
    }
    if fixtures.is_empty() {
        return Err(DataError::invalid(path, "no fixtures"));
    }
    Ok(fixtures)
}

/// Standings CSV: `team,points,goal_diff,goals_for` (baseline table for
/// mid-season reconstructions).
pub fn read_standings_csv(path: &Path, teams: &[String]) -> Result<Standings, DataError> {
    let mut reader = csv_reader(path)?;
    let cols = columns(path, &mut reader, &["team", "points", "goal_diff", "goals_for"])?;
    let mut standings = Standings::zeros(teams.len());
    let mut seen = vec![false; teams.len()];
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let team = team_index(path, line, teams, record.get(cols[0]).unwrap_or(""))? as usize;
        if seen[team] {
            return Err(DataError::format(path, line, "duplicate team"));
        }
        seen[team] = true;
        let parse = |i: usize, name: &str| -> Result<i64, DataError> {
            record
                .get(cols[i])
                .unwrap_or("")
                .parse()
                .map_err(|e| DataError::format(path, line, format!("{name}: {e}")))
        };
        standings.points[team] = parse(1, "points")?;
        standings.goal_diff[team] = parse(2, "goal_diff")?;
        standings.goals_for[team] = parse(3, "goals_for")?;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(DataError::invalid(path, format!("no standings row for '{}'", teams[missing])));
    }
    Ok(standings)
}

/// Assemble a season from its data files. The config file holds the reward
/// structure (a code or explicit region sizes), optional per-team override
/// regions, optional cup sections, and optional model parameters:
///
/// ```text
/// league_size = 18
/// code = 4/3/PDD            # or: regions = 1,3,3,8,1,2
/// override.Some Team = 1,3,0,11,1,2
/// cup.league-cup.candidates = Team A,Team B
/// cup.league-cup.win_probs = 0.6,0.4
/// model.scores = on         # off: points-only simulation
/// model.lambda_home = 1.55
/// ```
pub fn load_league_setup(
    config_path: &Path,
    ratings_path: &Path,
    fixtures_path: &Path,
    standings_path: Option<&Path>,
) -> Result<LeagueSetup, LeagueError> {
    let (teams, strengths) = read_ratings_csv(ratings_path)?;
    let fixtures = read_fixtures_csv(fixtures_path, &teams)?;
    let cfg = KvConfig::parse_file(config_path)?;

    let league_size: u32 = cfg
        .parse_value("league_size")?
        .ok_or_else(|| DataError::invalid(config_path, "missing key 'league_size'"))?;
    if league_size as usize != teams.len() {
        return Err(LeagueError::Setup {
            message: format!("league_size {league_size} but ratings list {} teams", teams.len()),
        });
    }

    let structure = match (cfg.get("code"), cfg.get("regions")) {
        (Some(code), None) => RewardStructure::from_code(code, league_size)?,
        (None, Some(regions)) => {
            RewardStructure::from_sizes(parse_sizes(&cfg, "regions", regions)?, league_size)?
        }
        (Some(_), Some(_)) => {
            return Err(LeagueError::Setup {
                message: "give either 'code' or 'regions', not both".into(),
            })
        }
        (None, None) => {
            return Err(LeagueError::Setup { message: "missing 'code' or 'regions'".into() })
        }
    };

    let mut overrides = BTreeMap::new();
    let override_entries: Vec<(String, String)> = cfg
        .with_prefix("override.")
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect();
    for (team, value) in override_entries {
        let idx = team_index(cfg.path(), cfg.line_of(&format!("override.{team}")), &teams, &team)?;
        let sizes = parse_sizes(&cfg, &format!("override.{team}"), &value)?;
        overrides.insert(idx, RewardStructure::from_sizes(sizes, league_size)?);
    }

    let mut cup_names: Vec<String> = cfg
        .with_prefix("cup.")
        .filter_map(|(k, _)| k.split('.').next().map(|s| s.to_owned()))
        .collect();
    cup_names.sort();
    cup_names.dedup();
    let mut cups = Vec::new();
    for name in cup_names {
        let key = format!("cup.{name}.candidates");
        let raw = cfg
            .get(&key)
            .ok_or_else(|| DataError::invalid(config_path, format!("missing key '{key}'")))?;
        let mut candidates = Vec::new();
        for team in split_list(raw) {
            candidates.push(team_index(cfg.path(), cfg.line_of(&key), &teams, &team)?);
        }
        let win_probs = match cfg.get(&format!("cup.{name}.win_probs")) {
            None => vec![1.0 / candidates.len() as f64; candidates.len()],
            Some(raw) => {
                let probs: Result<Vec<f64>, _> =
                    split_list(raw).iter().map(|s| s.parse::<f64>()).collect();
                let probs = probs.map_err(|e| {
                    DataError::invalid(config_path, format!("cup.{name}.win_probs: {e}"))
                })?;
                if probs.len() != candidates.len() {
                    return Err(LeagueError::Setup {
                        message: format!("cup '{name}': {} win probabilities for {} candidates",
                            probs.len(), candidates.len()),
                    });
                }
                probs
            }
        };
        cups.push(CupCompetition { name, candidates, win_probs });
    }

    let mut params = MatchModelParams::default();
    macro_rules! set {
        ($field:ident, $key:literal) => {
            if let Some(v) = cfg.parse_value::<f64>($key)? {
                params.$field = v;
            }
        };
    }
    set!(cut_low, "model.cut_low");
    set!(cut_high, "model.cut_high");
    set!(coef_strength, "model.strength_coef");
    set!(coef_home_adv, "model.home_advantage");
    set!(coef_ei_home, "model.ei_home_coef");
    set!(coef_ei_away, "model.ei_away_coef");
    set!(lambda_home, "model.lambda_home");
    set!(lambda_away, "model.lambda_away");

    let draw_scores = match cfg.get("model.scores").unwrap_or("on") {
        "on" => true,
        "off" => false,
        other => {
            return Err(LeagueError::Setup {
                message: format!("model.scores must be 'on' or 'off', got '{other}'"),
            })
        }
    };

    let baseline = match standings_path {
        Some(path) => read_standings_csv(path, &teams)?,
        None => Standings::zeros(teams.len()),
    };

    let mut setup = LeagueSetup::new(teams, strengths, fixtures, structure);
    setup.baseline = baseline;
    setup.params = params;
    setup.draw_scores = draw_scores;
    setup.overrides = overrides;
    setup.cups = cups;
    Ok(setup)
}

fn parse_sizes(
    cfg: &KvConfig,
    key: &str,
    value: &str,
) -> Result<[u32; REGION_COUNT], DataError> {
    let parts = split_list(value);
    if parts.len() != REGION_COUNT {
        return Err(DataError::format(
            cfg.path(),
            cfg.line_of(key),
            format!("'{key}' needs {REGION_COUNT} sizes (champion,cl,el,none,playoff,direct)"),
        ));
    }
    let mut sizes = [0u32; REGION_COUNT];
    for (i, part) in parts.iter().enumerate() {
        sizes[i] = part.parse().map_err(|e| {
            DataError::format(cfg.path(), cfg.line_of(key), format!("'{key}': {e}"))
        })?;
    }
    Ok(sizes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_a_small_league() {
        let dir = std::env::temp_dir().join("pivotal-league-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let ratings = write_file(&dir, "ratings.csv", "team,strength\nA,0.5\nB,0.1\nC,-0.2\nD,-0.4\n");
        let fixtures = write_file(
            &dir,
            "fixtures.csv",
            "matchday,home,away,goals_home,goals_away\n1,A,B,2,1\n1,C,D,,\n",
        );
        let config = write_file(
            &dir,
            "league.conf",
            "league_size = 4\nregions = 1,1,0,1,0,1\ncup.open.candidates = A,B\nmodel.scores = off\n",
        );
        let setup = load_league_setup(&config, &ratings, &fixtures, None).unwrap();
        assert_eq!(setup.teams, vec!["A", "B", "C", "D"]);
        assert_eq!(setup.fixtures.len(), 2);
        assert_eq!(setup.fixtures[0].result, Some((2, 1)));
        assert_eq!(setup.fixtures[1].result, None);
        assert!(!setup.draw_scores);
        assert_eq!(setup.cups.len(), 1);
        assert_eq!(setup.cups[0].candidates, vec![0, 1]);
        assert_eq!(setup.cups[0].win_probs, vec![0.5, 0.5]);
    }

    #[test]
    fn malformed_fixture_reports_line() {
        let dir = std::env::temp_dir().join("pivotal-league-io-test2");
        std::fs::create_dir_all(&dir).unwrap();
        write_file(&dir, "ratings.csv", "team,strength\nA,0.5\nB,0.1\n");
        let fixtures = write_file(
            &dir,
            "fixtures.csv",
            "matchday,home,away,goals_home,goals_away\n1,A,B,2,\n",
        );
        let err = read_fixtures_csv(&fixtures, &["A".into(), "B".into()]).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }
}
