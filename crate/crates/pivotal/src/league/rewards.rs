//! End-of-season reward regions: threshold blocks of the final ranking,
//! compact structure codes, per-team overrides and the cup-transfer rule.

use std::collections::BTreeMap;

use super::LeagueError;
use crate::contest::RewardLabel;

/// Reward region of a final-ranking position, ordered top to bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[repr(usize)]
pub enum Region {
    Champion = 0,
    ChampionsLeague = 1,
    EuropaLeague = 2,
    NoReward = 3,
    RelegationPlayoff = 4,
    DirectRelegation = 5,
}

pub const REGION_COUNT: usize = 6;

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::Champion => "champion",
            Region::ChampionsLeague => "champions-league",
            Region::EuropaLeague => "europa-league",
            Region::NoReward => "none",
            Region::RelegationPlayoff => "relegation-playoff",
            Region::DirectRelegation => "direct-relegation",
        }
    }

    pub fn all() -> [Region; REGION_COUNT] {
        [
            Region::Champion,
            Region::ChampionsLeague,
            Region::EuropaLeague,
            Region::NoReward,
            Region::RelegationPlayoff,
            Region::DirectRelegation,
        ]
    }
}

/// Reward labels in region order, shared by every league contest.
pub fn region_labels() -> Vec<RewardLabel> {
    Region::all().iter().map(|r| RewardLabel::new(r.label())).collect()
}

/// Structure codes observed in the covered leagues: Champions League
/// places / Europa League places / relegation pattern (P = play-off rank,
/// D = direct relegation rank). The champion rank counts within the
/// Champions League block. Where a Europa League place is itself decided by
/// a play-off among several ranks, those ranks enter the code as the single
/// reward they share.
pub const KNOWN_CODES: [&str; 12] = [
    "4/3/DDD", "4/3/PDD", "3/3/DDD", "3/3/DD", "3/3/PDD", "3/3/PD", "2/4/DD", "2/3/DDD",
    "2/3/DD", "2/3/PPD", "2/2/DD", "2/2/PPD",
];

/// Ordered rank-region blocks covering a whole league table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewardStructure {
    pub code: Option<String>,
    /// Block sizes in [`Region`] order; they sum to the league size.
    sizes: [u32; REGION_COUNT],
}

impl RewardStructure {
    /// Derive the regions for a structure code, e.g. "4/3/PDD" at 18 teams:
    /// champion {1}, Champions League {2-4}, Europa League {5-7},
    /// none {8-15}, play-off {16}, direct relegation {17-18}.
    pub fn from_code(code: &str, league_size: u32) -> Result<RewardStructure, LeagueError> {
        if !KNOWN_CODES.contains(&code) {
            return Err(LeagueError::UnknownRewardCode {
                code: code.to_owned(),
                known: KNOWN_CODES.join(", "),
            });
        }
        let parts: Vec<&str> = code.split('/').collect();
        let cl_total: u32 = parts[0].parse().expect("validated code");
        let el: u32 = parts[1].parse().expect("validated code");
        let playoff = parts[2].chars().filter(|&c| c == 'P').count() as u32;
        let direct = parts[2].chars().filter(|&c| c == 'D').count() as u32;
        let fixed = cl_total + el + playoff + direct;
        if fixed >= league_size {
            return Err(LeagueError::InvalidRegions {
                message: format!("code {code} does not fit a league of {league_size}"),
            });
        }
        let sizes = [
            1,
            cl_total - 1,
            el,
            league_size - fixed,
            playoff,
            direct,
        ];
        Ok(RewardStructure { code: Some(code.to_owned()), sizes })
    }

    /// Explicit block sizes (champion, CL, EL, none, play-off, direct).
    pub fn from_sizes(sizes: [u32; REGION_COUNT], league_size: u32) -> Result<Self, LeagueError> {
        let total: u32 = sizes.iter().sum();
        if total != league_size {
            return Err(LeagueError::InvalidRegions {
                message: format!("region sizes sum to {total}, league has {league_size} teams"),
            });
        }
        if sizes[Region::Champion as usize] != 1 {
            return Err(LeagueError::InvalidRegions {
                message: "champion region must hold exactly rank 1".into(),
            });
        }
        Ok(RewardStructure { code: None, sizes })
    }

    pub fn league_size(&self) -> u32 {
        self.sizes.iter().sum()
    }

    pub fn sizes(&self) -> [u32; REGION_COUNT] {
        self.sizes
    }

    /// Last rank qualifying for an international competition (champion +
    /// CL + EL blocks), before any cup transfer.
    pub fn international_last(&self) -> u32 {
        self.sizes[0] + self.sizes[1] + self.sizes[2]
    }

    /// Region of a 1-based rank. `el_extension` lowers the Europa League
    /// threshold by that many ranks (cup transfers), shrinking the unrewarded
    /// block; it saturates when that block is exhausted.
    pub fn region_of_rank(&self, rank: u32, el_extension: u32) -> Region {
        debug_assert!(rank >= 1 && rank <= self.league_size());
        let ext = el_extension.min(self.sizes[Region::NoReward as usize]);
        let mut upper = 0u32;
        for region in Region::all() {
            let mut size = self.sizes[region as usize];
            match region {
                Region::EuropaLeague => size += ext,
                Region::NoReward => size -= ext,
                _ => {}
            }
            upper += size;
            if rank <= upper {
                return region;
            }
        }
        Region::DirectRelegation
    }
}

/// Region of a final rank under a structure, with a per-team override
/// scheme taking precedence when present.
pub fn reward_of_rank(
    rank: u32,
    structure: &RewardStructure,
    team_override: Option<&RewardStructure>,
) -> Region {
    team_override.unwrap_or(structure).region_of_rank(rank, 0)
}

/// A national cup from the moment its final pairing is fixed: the set of
/// teams still able to win it, and informational win probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct CupCompetition {
    pub name: String,
    /// Team indices still able to win the cup.
    pub candidates: Vec<u32>,
    /// Win probabilities per candidate (parsed and echoed; the transfer
    /// rule below does not depend on who actually wins).
    pub win_probs: Vec<f64>,
}

/// Cup-transfer rule evaluated on one completed season: if every team still
/// able to win a cup finishes inside the international-qualification region,
/// that cup's reserved Europa League spot is transferred to the league table
/// and the EL threshold drops by one rank. With two cups both are evaluated
/// (a shared finalist simply appears in both candidate sets). Averaging over
/// simulated seasons then weighs the two possibilities by how likely the
/// transfer is.
pub fn apply_cup_transfer(
    ranks: &[u32],
    cups: &[CupCompetition],
    structure: &RewardStructure,
    overrides: &BTreeMap<u32, RewardStructure>,
) -> Vec<Region> {
    let intl_last = structure.international_last();
    let mut extension = 0u32;
    for cup in cups {
        if !cup.candidates.is_empty()
            && cup.candidates.iter().all(|&t| ranks[t as usize] <= intl_last)
        {
            extension += 1;
        }
    }
    ranks
        .iter()
        .enumerate()
        .map(|(team, &rank)| {
            overrides
                .get(&(team as u32))
                .unwrap_or(structure)
                .region_of_rank(rank, extension)
        })
        .collect()
}
