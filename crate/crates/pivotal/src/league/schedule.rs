//! Double round-robin calendar construction (circle method).

use rand::Rng;

use super::{Fixture, LeagueError};
use crate::rng::Stream;

/// Unordered pairings per round of a single round robin over `n` teams
/// (circle method: team n-1 fixed, the rest rotate).
fn circle_rounds(n: usize) -> Vec<Vec<(usize, usize)>> {
    let rounds = n - 1;
    let mut out = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let mut pairs = Vec::with_capacity(n / 2);
        let pivot_opponent = r;
        pairs.push((n - 1, pivot_opponent));
        for i in 1..n / 2 {
            let a = (r + i) % (n - 1);
            let b = (r + n - 1 - i) % (n - 1);
            pairs.push((a, b));
        }
        out.push(pairs);
    }
    out
}

/// Every pair meets twice with venues swapped between the halves:
/// 2(n-1) matchdays of n/2 matches each. `rng` shuffles which team takes
/// which circle position, so different seeds give different calendars.
pub fn generate_double_round_robin(
    n_teams: usize,
    rng: &mut Stream,
) -> Result<Vec<Fixture>, LeagueError> {
    let single = single_round_robin(n_teams, rng)?;
    let rounds = (n_teams - 1) as u32;
    let mut fixtures = single.clone();
    fixtures.extend(single.iter().map(|f| Fixture {
        matchday: f.matchday + rounds,
        home: f.away,
        away: f.home,
        result: None,
    }));
    Ok(fixtures)
}

/// First half only: every pair meets exactly once, n-1 matchdays.
pub fn single_round_robin(
    n_teams: usize,
    rng: &mut Stream,
) -> Result<Vec<Fixture>, LeagueError> {
    if n_teams < 2 || !n_teams.is_multiple_of(2) {
        return Err(LeagueError::OddTeamCount { n: n_teams });
    }
    let mut seats: Vec<u32> = (0..n_teams as u32).collect();
    for i in (1..seats.len()).rev() {
        let j = rng.random_range(0..=i);
        seats.swap(i, j);
    }

    let mut fixtures = Vec::with_capacity(n_teams * (n_teams - 1) / 2);
    for (r, pairs) in circle_rounds(n_teams).into_iter().enumerate() {
        for (i, (a, b)) in pairs.into_iter().enumerate() {
            // Alternate venues for rough home/away balance.
            let (home, away) = if (r + i) % 2 == 0 { (a, b) } else { (b, a) };
            fixtures.push(Fixture {
                matchday: r as u32 + 1,
                home: seats[home],
                away: seats[away],
                result: None,
            });
        }
    }
    Ok(fixtures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamKey};
    use std::collections::BTreeSet;

    fn rng() -> Stream {
        stream(3, StreamKey::setup(0, 0))
    }

    #[test]
    fn odd_team_count_is_rejected() {
        assert!(matches!(
            generate_double_round_robin(5, &mut rng()),
            Err(LeagueError::OddTeamCount { n: 5 })
        ));
    }

    #[test]
    fn eighteen_teams_give_34_matchdays_306_fixtures() {
        let fixtures = generate_double_round_robin(18, &mut rng()).unwrap();
        assert_eq!(fixtures.len(), 306);
        assert_eq!(fixtures.iter().map(|f| f.matchday).max(), Some(34));
        for md in 1..=34u32 {
            assert_eq!(fixtures.iter().filter(|f| f.matchday == md).count(), 9);
        }
    }

    #[test]
    fn four_teams_cover_every_ordered_pair_once() {
        let fixtures = generate_double_round_robin(4, &mut rng()).unwrap();
        assert_eq!(fixtures.len(), 12);
        assert_eq!(fixtures.iter().map(|f| f.matchday).max(), Some(6));
        let pairs: BTreeSet<(u32, u32)> = fixtures.iter().map(|f| (f.home, f.away)).collect();
        assert_eq!(pairs.len(), 12);
    }

    #[test]
    fn each_team_plays_once_per_matchday() {
        let fixtures = generate_double_round_robin(16, &mut rng()).unwrap();
        for md in 1..=30u32 {
            let mut seen = BTreeSet::new();
            for f in fixtures.iter().filter(|f| f.matchday == md) {
                assert!(seen.insert(f.home));
                assert!(seen.insert(f.away));
            }
            assert_eq!(seen.len(), 16);
        }
    }

    #[test]
    fn second_half_mirrors_venues() {
        let fixtures = generate_double_round_robin(6, &mut rng()).unwrap();
        let half = fixtures.len() / 2;
        for (first, second) in fixtures[..half].iter().zip(&fixtures[half..]) {
            assert_eq!(first.home, second.away);
            assert_eq!(first.away, second.home);
            assert_eq!(second.matchday, first.matchday + 5);
        }
    }
}
