//! Distance functions between conditional reward distributions.
//!
//! The importance of an event is the distance between the reward
//! distributions induced by its possible outcomes, weighted by the outcome
//! probabilities. All metrics here are bounded in [0, 1] and use natural
//! logarithms.

use thiserror::Error;

use crate::contest::{RewardDistribution, RewardLabel};

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Conditional reward distributions weighted by their outcome probabilities.
#[derive(Debug, Clone)]
pub struct WeightedDistributionFamily {
    members: Vec<(RewardDistribution, f64)>,
}

impl WeightedDistributionFamily {
    /// Checks weights (non-negative, sum 1 within 1e-9) and that all members
    /// share one reward label set.
    pub fn new(members: Vec<(RewardDistribution, f64)>) -> Result<Self, DistanceError> {
        if members.is_empty() {
            return Err(DistanceError::TooFewMembers { found: 0, required: 1 });
        }
        let mut total = 0.0;
        for (_, w) in &members {
            if !w.is_finite() || *w < 0.0 {
                return Err(DistanceError::InvalidWeight { weight: *w });
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(DistanceError::WeightsNotNormalized { total });
        }
        let first = &members[0].0;
        if members.iter().any(|(d, _)| !d.same_labels(first)) {
            return Err(DistanceError::MismatchedLabels);
        }
        Ok(WeightedDistributionFamily { members })
    }

    /// Equal weights over `members`.
    pub fn uniform(members: Vec<RewardDistribution>) -> Result<Self, DistanceError> {
        let w = 1.0 / members.len() as f64;
        Self::new(members.into_iter().map(|d| (d, w)).collect())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[(RewardDistribution, f64)] {
        &self.members
    }
}

/// Selects the distance applied to a family of conditional distributions.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceKind {
    /// Weighted Jensen-Shannon divergence, normalized by ln(m).
    Jsd,
    /// Total variation distance (pairwise weighted mean for m > 2).
    TotalVariation,
    /// |P1(target) - P2(target)| for binary events.
    WinProbDifference(RewardLabel),
}

impl DistanceKind {
    pub fn evaluate(&self, family: &WeightedDistributionFamily) -> Result<f64, DistanceError> {
        match self {
            DistanceKind::Jsd => weighted_jsd(family),
            DistanceKind::TotalVariation => total_variation(family),
            DistanceKind::WinProbDifference(target) => win_prob_difference(family, target),
        }
    }
}

/// Shannon entropy in nats, with 0 ln 0 := 0.
pub fn shannon_entropy(d: &RewardDistribution) -> f64 {
    -d.mass()
        .values()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Weighted Jensen-Shannon divergence over m >= 2 distributions, scaled by
/// ln(m)^-1 so the result lies in [0, 1]:
///
/// JSD = [H(sum_i pi_i P_i) - sum_i pi_i H(P_i)] / ln(m)
///
/// Returns exactly 0 when all positively weighted members are identical, so
/// structurally settled contestants keep a hard zero.
pub fn weighted_jsd(family: &WeightedDistributionFamily) -> Result<f64, DistanceError> {
    let members = family.members();
    if members.len() < 2 {
        return Err(DistanceError::TooFewMembers { found: members.len(), required: 2 });
    }

    let positive: Vec<&RewardDistribution> =
        members.iter().filter(|(_, w)| *w > 0.0).map(|(d, _)| d).collect();
    if positive.windows(2).all(|w| w[0].mass() == w[1].mass()) {
        return Ok(0.0);
    }

    let labels: Vec<&RewardLabel> = members[0].0.labels().collect();
    let mut mixture_entropy = 0.0;
    for label in &labels {
        let m: f64 = members.iter().map(|(d, w)| w * d.prob(label)).sum();
        if m > 0.0 {
            mixture_entropy -= m * m.ln();
        }
    }
    let mean_entropy: f64 = members.iter().map(|(d, w)| w * shannon_entropy(d)).sum();
    let jsd = (mixture_entropy - mean_entropy) / (members.len() as f64).ln();
    Ok(jsd.clamp(0.0, 1.0))
}

/// Difference between the contest-winning probabilities conditional on a
/// binary event outcome: |P1(target) - P2(target)|.
pub fn win_prob_difference(
    family: &WeightedDistributionFamily,
    target: &RewardLabel,
) -> Result<f64, DistanceError> {
    let members = family.members();
    if members.len() != 2 {
        return Err(DistanceError::NotBinary { found: members.len() });
    }
    if !members[0].0.labels().any(|l| l == target) {
        return Err(DistanceError::UnknownTarget { target: target.clone() });
    }
    Ok((members[0].0.prob(target) - members[1].0.prob(target)).abs())
}

fn tv_pair(a: &RewardDistribution, b: &RewardDistribution) -> f64 {
    0.5 * a
        .labels()
        .map(|l| (a.prob(l) - b.prob(l)).abs())
        .sum::<f64>()
}

/// Total variation distance: for m = 2 the usual half L1 distance; for
/// m > 2 the weighted mean of pairwise distances with weights pi_i pi_j
/// renormalized. Returns 0 when one member carries all the weight.
pub fn total_variation(family: &WeightedDistributionFamily) -> Result<f64, DistanceError> {
    let members = family.members();
    if members.len() < 2 {
        return Err(DistanceError::TooFewMembers { found: members.len(), required: 2 });
    }
    if members.len() == 2 {
        return Ok(tv_pair(&members[0].0, &members[1].0).clamp(0.0, 1.0));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            let w = members[i].1 * members[j].1;
            num += w * tv_pair(&members[i].0, &members[j].0);
            den += w;
        }
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DistanceError {
    #[error("family has {found} member(s), {required} required")]
    TooFewMembers { found: usize, required: usize },
    #[error("win-probability difference needs exactly 2 members, found {found}")]
    NotBinary { found: usize },
    #[error("invalid member weight {weight}")]
    InvalidWeight { weight: f64 },
    #[error("member weights sum to {total}, expected 1")]
    WeightsNotNormalized { total: f64 },
    #[error("members have mismatched reward label sets")]
    MismatchedLabels,
    #[error("target label '{target}' not in the reward label set")]
    UnknownTarget { target: RewardLabel },
}
