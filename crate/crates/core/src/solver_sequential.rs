//! Bidding over several rounds of simultaneous auctions.
//!
//! Losing every auction in round `r` leaves the bidder with the continuation
//! value `U^{r+1}` of the later rounds, so round `r` is the simultaneous
//! problem with valuation `v - γ U^{r+1}`. Rounds are solved last to first.

use serde::Serialize;

use crate::distributions::CompetitiveBidModel;
use crate::error::{check_range, Error, Result};
use crate::solver_identical::solve_identical;
use crate::solver_nonidentical::{solve_nonidentical, DEFAULT_SWEEP_GRID};
use crate::utility::{AuctionSet, GlobalBid};

/// Largest auction count an uncertain round may put weight on.
pub const MAX_UNCERTAIN_AUCTIONS: usize = 20;
const PROBABILITY_TOL: f64 = 1e-9;

/// The auctions of one round.
#[derive(Debug, Clone)]
pub enum Round {
    /// A known set of simultaneous auctions.
    Known(AuctionSet),
    /// `probabilities[j]` is the chance of `j` identical auctions with law `model`.
    Uncertain { probabilities: Vec<f64>, model: CompetitiveBidModel },
}

impl Round {
    fn validate(&self) -> Result<()> {
        if let Round::Uncertain { probabilities, .. } = self {
            if probabilities.is_empty() || probabilities.len() > MAX_UNCERTAIN_AUCTIONS + 1 {
                return Err(Error::InvalidParameter(format!(
                    "auction-count distribution must cover 0..=m_max with m_max <= {MAX_UNCERTAIN_AUCTIONS}"
                )));
            }
            if probabilities.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidParameter("auction-count probabilities must lie in [0, 1]".into()));
            }
            let total: f64 = probabilities.iter().sum();
            if (total - 1.0).abs() > PROBABILITY_TOL {
                return Err(Error::InvalidParameter(format!("auction-count probabilities sum to {total}, not 1")));
            }
        }
        Ok(())
    }

    fn v_max(&self) -> f64 {
        match self {
            Round::Known(set) => set.v_max(),
            Round::Uncertain { model, .. } => model.v_max(),
        }
    }
}

/// Rounds in chronological order plus the chance that the process goes on
/// after each round.
#[derive(Debug, Clone)]
pub struct RoundSchedule {
    rounds: Vec<Round>,
    continuation: f64,
}

impl RoundSchedule {
    /// `continuation` is the probability that later rounds take place.
    pub fn new(rounds: Vec<Round>, continuation: f64) -> Result<Self> {
        if rounds.is_empty() {
            return Err(Error::InvalidParameter("a schedule needs at least one round".into()));
        }
        check_range("continuation probability", continuation, 0.0, 1.0)?;
        for r in &rounds {
            r.validate()?;
        }
        let v_max = rounds[0].v_max();
        if rounds.iter().any(|r| r.v_max() != v_max) {
            return Err(Error::InvalidParameter("all rounds must share v_max".into()));
        }
        Ok(Self { rounds, continuation })
    }

    /// Same as [`RoundSchedule::new`] but parameterised by the probability
    /// that the process stops after each round.
    pub fn with_stop_probability(rounds: Vec<Round>, stop: f64) -> Result<Self> {
        check_range("stop probability", stop, 0.0, 1.0)?;
        Self::new(rounds, 1.0 - stop)
    }

    /// `counts[r]` identical auctions with law `model` in round `r`, continuing for sure.
    pub fn identical_rounds(counts: &[usize], model: &CompetitiveBidModel) -> Result<Self> {
        let rounds = counts
            .iter()
            .map(|&m| AuctionSet::identical(model.clone(), m).map(Round::Known))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rounds, 1.0)
    }

    /// Turns auctions that overlap in time into rounds.
    ///
    /// Waiting for earlier auctions to close before bidding in later ones
    /// makes overlapping auctions sequential, so auctions are grouped by
    /// closing time and each group becomes one round.
    pub fn from_closing_times(closing_times: &[f64], model: &CompetitiveBidModel) -> Result<Self> {
        if closing_times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("closing times must be finite".into()));
        }
        let mut times = closing_times.to_vec();
        times.sort_by(f64::total_cmp);
        let mut counts: Vec<usize> = Vec::new();
        let mut last = None;
        for t in times {
            if last == Some(t) {
                *counts.last_mut().expect("group exists") += 1;
            } else {
                counts.push(1);
                last = Some(t);
            }
        }
        Self::identical_rounds(&counts, model)
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn continuation(&self) -> f64 {
        self.continuation
    }
}

/// Optimal bids for one possible auction count within a round.
#[derive(Debug, Clone, Serialize)]
pub struct RoundOutcome {
    pub auctions: usize,
    pub probability: f64,
    pub bids: GlobalBid,
    /// Utility of the round's bids at the effective valuation.
    pub round_utility: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundPlan {
    pub effective_valuation: f64,
    /// Expected utility from this round onwards, `U^r`.
    pub continuation_utility: f64,
    pub outcomes: Vec<RoundOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SequentialPlan {
    /// Rounds in chronological order.
    pub rounds: Vec<RoundPlan>,
    /// `U^1`, the expected utility of the whole schedule.
    pub utility: f64,
}

/// `v - γ · future_utility`.
pub fn effective_valuation(v: f64, future_utility: f64, continuation: f64) -> f64 {
    v - continuation * future_utility
}

pub fn solve_sequential(schedule: &RoundSchedule, v: f64) -> Result<SequentialPlan> {
    check_range("valuation", v, f64::MIN_POSITIVE, schedule.rounds[0].v_max())?;
    let gamma = schedule.continuation;
    let mut future = 0.0;
    let mut plans = Vec::with_capacity(schedule.rounds.len());
    for round in schedule.rounds.iter().rev() {
        let v_eff = effective_valuation(v, future, gamma);
        let carried = gamma * future;
        let outcomes = match round {
            Round::Known(set) => vec![solve_round(set, v_eff, 1.0)?],
            Round::Uncertain { probabilities, model } => probabilities
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(m, &p)| {
                    if m == 0 {
                        Ok(RoundOutcome { auctions: 0, probability: p, bids: GlobalBid(Vec::new()), round_utility: 0.0 })
                    } else {
                        solve_round(&AuctionSet::identical(model.clone(), m)?, v_eff, p)
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let expected: f64 = outcomes.iter().map(|o| o.probability * o.round_utility).sum();
        let continuation_utility = carried + expected;
        plans.push(RoundPlan { effective_valuation: v_eff, continuation_utility, outcomes });
        future = continuation_utility;
    }
    plans.reverse();
    Ok(SequentialPlan { utility: future, rounds: plans })
}

fn solve_round(set: &AuctionSet, v: f64, probability: f64) -> Result<RoundOutcome> {
    let result = if set.is_identical() {
        solve_identical(set.len(), v, &set.models()[0])?
    } else {
        solve_nonidentical(v, set, DEFAULT_SWEEP_GRID)?.result
    };
    Ok(RoundOutcome { auctions: set.len(), probability, bids: result.bids, round_utility: result.utility })
}
