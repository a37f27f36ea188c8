//! Parametric match outcome model: ordered logit over a latent strength
//! index for the categorical result, and independent Poisson score draws
//! conditioned on it for the tie-breaking goals.

use rand::Rng;

use super::LeagueError;
use crate::engine::SimError;
use crate::rng::Stream;

/// Categorical match result, ordered on the latent scale as
/// away win < draw < home win.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum MatchOutcome {
    Home = 0,
    Draw = 1,
    Away = 2,
}

impl MatchOutcome {
    pub fn from_index(i: usize) -> MatchOutcome {
        match i {
            0 => MatchOutcome::Home,
            1 => MatchOutcome::Draw,
            _ => MatchOutcome::Away,
        }
    }

    pub fn from_score(goals_home: u32, goals_away: u32) -> MatchOutcome {
        match goals_home.cmp(&goals_away) {
            std::cmp::Ordering::Greater => MatchOutcome::Home,
            std::cmp::Ordering::Equal => MatchOutcome::Draw,
            std::cmp::Ordering::Less => MatchOutcome::Away,
        }
    }

    pub fn matches_score(&self, goals_home: u32, goals_away: u32) -> bool {
        MatchOutcome::from_score(goals_home, goals_away) == *self
    }
}

/// Ordered-choice and score parameters of the match model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchModelParams {
    /// Lower and upper cut points of the ordered logit (must increase).
    pub cut_low: f64,
    pub cut_high: f64,
    /// Coefficient on (home strength - away strength).
    pub coef_strength: f64,
    /// Coefficient on the constant home-advantage covariate.
    pub coef_home_adv: f64,
    /// Coefficients on the previous-iteration EI covariates.
    pub coef_ei_home: f64,
    pub coef_ei_away: f64,
    /// Poisson means of the score draws.
    pub lambda_home: f64,
    pub lambda_away: f64,
}

impl Default for MatchModelParams {
    fn default() -> Self {
        // Cut points calibrated so that equal-strength opponents give
        // (H, D, A) = (0.45, 0.26, 0.29) with the default home advantage.
        MatchModelParams {
            cut_low: -0.4953840470548413,
            cut_high: 0.6006706954621512,
            coef_strength: 1.0,
            coef_home_adv: 0.4,
            coef_ei_home: 0.0,
            coef_ei_away: 0.0,
            lambda_home: 1.55,
            lambda_away: 1.16,
        }
    }
}

impl MatchModelParams {
    pub fn validate(&self) -> Result<(), LeagueError> {
        if self.cut_low >= self.cut_high {
            return Err(LeagueError::InvalidParams {
                message: format!("cut points must increase: {} >= {}", self.cut_low, self.cut_high),
            });
        }
        if self.lambda_home <= 0.0 || self.lambda_away <= 0.0 {
            return Err(LeagueError::InvalidParams {
                message: "Poisson means must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn consumes_ei(&self) -> bool {
        self.coef_ei_home != 0.0 || self.coef_ei_away != 0.0
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Ordered-logit outcome probabilities (home, draw, away) for one fixture.
pub fn match_outcome_probs(
    params: &MatchModelParams,
    strength_home: f64,
    strength_away: f64,
    ei_home: f64,
    ei_away: f64,
) -> [f64; 3] {
    let index = params.coef_home_adv
        + params.coef_strength * (strength_home - strength_away)
        + params.coef_ei_home * ei_home
        + params.coef_ei_away * ei_away;
    let lo = sigmoid(params.cut_low - index);
    let hi = sigmoid(params.cut_high - index);
    [1.0 - hi, hi - lo, lo]
}

const SCORE_ATTEMPTS: u32 = 10_000;

/// Poisson score sampler with precomputed inverse-CDF tables.
#[derive(Debug, Clone)]
pub struct ScoreSampler {
    cdf_home: Vec<f64>,
    cdf_away: Vec<f64>,
}

fn poisson_cdf(lambda: f64) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(16);
    let mut pmf = (-lambda).exp();
    let mut acc = pmf;
    cdf.push(acc);
    for k in 1..64 {
        pmf *= lambda / k as f64;
        acc += pmf;
        cdf.push(acc);
        if 1.0 - acc < 1e-12 {
            break;
        }
    }
    cdf
}

fn draw_poisson(cdf: &[f64], rng: &mut Stream) -> u32 {
    let u: f64 = rng.random();
    for (k, &c) in cdf.iter().enumerate() {
        if u < c {
            return k as u32;
        }
    }
    cdf.len() as u32
}

impl ScoreSampler {
    pub fn new(lambda_home: f64, lambda_away: f64) -> ScoreSampler {
        ScoreSampler { cdf_home: poisson_cdf(lambda_home), cdf_away: poisson_cdf(lambda_away) }
    }

    fn draw_pair(&self, rng: &mut Stream) -> (u32, u32) {
        (draw_poisson(&self.cdf_home, rng), draw_poisson(&self.cdf_away, rng))
    }
}

/// Draw an exact score consistent with the categorical outcome: independent
/// Poisson pairs are rejected until their sign matches. The cap exists only
/// to turn a corrupted state into an error instead of a hang.
pub fn draw_score(
    outcome: MatchOutcome,
    sampler: &ScoreSampler,
    rng: &mut Stream,
) -> Result<(u32, u32), SimError> {
    for _ in 0..SCORE_ATTEMPTS {
        let (gh, ga) = sampler.draw_pair(rng);
        if outcome.matches_score(gh, ga) {
            return Ok((gh, ga));
        }
    }
    Err(SimError::ScoreRejectionCap { event: usize::MAX, attempts: SCORE_ATTEMPTS })
}
