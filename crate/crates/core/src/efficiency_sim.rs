//! Monte Carlo estimates of allocative efficiency in a market of
//! simultaneous second-price auctions, with and without a global bidder.
//!
//! Every bidder's valuation is uniform on `[0, 1]`. Local bidders bid their
//! valuation in a single auction; the global bidder bids its optimal global
//! bid in all of them. Efficiency is realised welfare divided by the welfare
//! of handing the `m` items to the `m` highest valuations in the market.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::distributions::CompetitiveBidModel;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::solver_identical::solve_identical;

/// Replication count used by the reference experiment.
pub const DEFAULT_REPLICATIONS: usize = 10_000;
pub const DEFAULT_CONFIDENCE: f64 = 0.99;
/// Redraws allowed when a replication has fewer bidders than items.
const MAX_REDRAWS: usize = 10_000;

/// How many local bidders sit in each auction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalBidders {
    /// Exactly `n` per auction.
    Static { n: u32 },
    /// Poisson with mean `mean_n` per auction, independently.
    Dynamic { mean_n: f64 },
}

impl LocalBidders {
    /// The competitive-bid law the global bidder faces in each auction.
    pub fn model(&self) -> Result<CompetitiveBidModel> {
        match *self {
            LocalBidders::Static { n } => CompetitiveBidModel::static_uniform(n),
            LocalBidders::Dynamic { mean_n } => CompetitiveBidModel::dynamic_uniform(mean_n),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            LocalBidders::Static { .. } => "static",
            LocalBidders::Dynamic { .. } => "dynamic",
        }
    }

    /// `n` for static markets, `mean_n` for dynamic ones.
    pub fn size(&self) -> f64 {
        match *self {
            LocalBidders::Static { n } => n as f64,
            LocalBidders::Dynamic { mean_n } => mean_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketConfig {
    pub m: usize,
    pub locals: LocalBidders,
    pub global_bidder: bool,
    /// Without a global bidder, add one extra local bidder to a uniformly
    /// drawn auction so both markets hold the same expected population.
    pub balance_population: bool,
    pub replications: usize,
    pub seed: u64,
    pub confidence: f64,
}

impl MarketConfig {
    pub fn new(m: usize, locals: LocalBidders, global_bidder: bool, seed: u64) -> Result<Self> {
        let config = Self {
            m,
            locals,
            global_bidder,
            balance_population: true,
            replications: DEFAULT_REPLICATIONS,
            seed,
            confidence: DEFAULT_CONFIDENCE,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("market needs at least one auction".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be >= 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidParameter(format!("confidence must lie in (0, 1), got {}", self.confidence)));
        }
        match self.locals {
            LocalBidders::Static { n: 0 } => Err(Error::InvalidParameter("static markets need n >= 1".into())),
            LocalBidders::Dynamic { mean_n } if !(mean_n > 0.0 && mean_n.is_finite()) => {
                Err(Error::InvalidParameter(format!("mean_n must be positive, got {mean_n}")))
            }
            _ => Ok(()),
        }
    }
}

/// Winner of one auction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "bidder", rename_all = "snake_case")]
pub enum Winner {
    /// Local bidder `index` of auction `auction`.
    Local { auction: usize, index: usize },
    Global,
}

/// Outcome of one auction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sale {
    pub winner: Winner,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replication {
    pub local_valuations: Vec<Vec<f64>>,
    pub global_valuation: Option<f64>,
    pub global_bids: Option<Vec<f64>>,
    /// `None` for auctions nobody bid in.
    pub sales: Vec<Option<Sale>>,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub config: MarketConfig,
    pub mean_efficiency: f64,
    pub half_width: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replications: usize,
}

/// Realised welfare over the best achievable welfare.
///
/// `winners[k]` is the winner of auction `k`. The global bidder's valuation
/// counts once however many items it wins.
pub fn allocation_efficiency(
    valuations_by_auction: &[Vec<f64>],
    global_valuation: Option<f64>,
    winners: &[Option<Winner>],
) -> Result<f64> {
    let m = winners.len();
    if m == 0 {
        return Err(Error::InvalidParameter("no auctions".into()));
    }
    if valuations_by_auction.len() != m {
        return Err(Error::DimensionMismatch { bids: valuations_by_auction.len(), auctions: m });
    }
    let mut everyone: Vec<f64> = valuations_by_auction.iter().flatten().copied().chain(global_valuation).collect();
    if everyone.len() < m {
        return Err(Error::InvalidParameter(format!("{} bidders cannot fill {m} items", everyone.len())));
    }
    if everyone.iter().any(|v| !(0.0..=f64::MAX).contains(v)) {
        return Err(Error::InvalidParameter("valuations must be finite and nonnegative".into()));
    }

    let mut realised = Vec::with_capacity(m);
    let mut global_counted = false;
    for w in winners.iter().flatten() {
        match *w {
            Winner::Local { auction, index } => {
                let v = valuations_by_auction
                    .get(auction)
                    .and_then(|a| a.get(index))
                    .ok_or_else(|| Error::InvalidParameter(format!("no local bidder {index} in auction {auction}")))?;
                realised.push(*v);
            }
            Winner::Global => {
                let v = global_valuation.ok_or_else(|| Error::InvalidParameter("global winner in a market without one".into()))?;
                if !global_counted {
                    realised.push(v);
                    global_counted = true;
                }
            }
        }
    }

    // identical sets of winners must give a ratio of exactly one
    let descending = |xs: &mut Vec<f64>| xs.sort_by(|a, b| b.total_cmp(a));
    descending(&mut everyone);
    descending(&mut realised);
    let best: f64 = everyone[..m].iter().sum();
    let got: f64 = realised.iter().sum();
    if best == 0.0 {
        return Ok(1.0);
    }
    Ok((got / best).min(1.0))
}

fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Simulates replication `index` of `config`; each index has its own random stream.
pub fn run_replication(config: &MarketConfig, index: u64) -> Result<Replication> {
    config.validate()?;
    let model = if config.global_bidder { Some(config.locals.model()?) } else { None };
    replicate(config, model.as_ref(), index)
}

fn replicate(config: &MarketConfig, model: Option<&CompetitiveBidModel>, index: u64) -> Result<Replication> {
    let m = config.m;
    let mut rng = replication_rng(config.seed, index);
    let poisson = match config.locals {
        LocalBidders::Dynamic { mean_n } => Some(Poisson::new(mean_n).map_err(|e| Error::InvalidParameter(e.to_string()))?),
        LocalBidders::Static { .. } => None,
    };

    let (locals, global_valuation) = (0..MAX_REDRAWS)
        .find_map(|_| {
            let mut counts: Vec<usize> = match (config.locals, &poisson) {
                (LocalBidders::Static { n }, _) => vec![n as usize; m],
                (_, Some(p)) => (0..m).map(|_| p.sample(&mut rng) as usize).collect(),
                _ => unreachable!("dynamic markets carry a Poisson law"),
            };
            if !config.global_bidder && config.balance_population {
                counts[rng.random_range(0..m)] += 1;
            }
            let locals: Vec<Vec<f64>> = counts.iter().map(|&c| (0..c).map(|_| rng.random::<f64>()).collect()).collect();
            let global = config.global_bidder.then(|| rng.random::<f64>());
            let population = counts.iter().sum::<usize>() + usize::from(global.is_some());
            (population >= m).then_some((locals, global))
        })
        .ok_or_else(|| Error::Infeasible(format!("could not draw a market with at least {m} bidders")))?;

    let global_bids = match (global_valuation, model) {
        (Some(v), Some(model)) if v > 0.0 => {
            let mut bids = solve_identical(m, v, model)?.bids.0;
            bids.shuffle(&mut rng);
            Some(bids)
        }
        (Some(_), Some(_)) => Some(vec![0.0; m]),
        _ => None,
    };

    let sales: Vec<Option<Sale>> = (0..m)
        .map(|k| {
            let mut offers: Vec<(f64, Winner)> =
                locals[k].iter().enumerate().map(|(i, &v)| (v, Winner::Local { auction: k, index: i })).collect();
            if let Some(b) = global_bids.as_ref().map(|b| b[k]).filter(|&b| b > 0.0) {
                offers.push((b, Winner::Global));
            }
            run_auction(&offers, &mut rng)
        })
        .collect();

    let winners: Vec<Option<Winner>> = sales.iter().map(|s| s.map(|s| s.winner)).collect();
    let efficiency = allocation_efficiency(&locals, global_valuation, &winners)?;
    Ok(Replication { local_valuations: locals, global_valuation, global_bids, sales, efficiency })
}

/// Second-price sale; ties among the highest offers are broken uniformly.
fn run_auction(offers: &[(f64, Winner)], rng: &mut ChaCha8Rng) -> Option<Sale> {
    let top = offers.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..offers.len()).filter(|&i| offers[i].0 == top).collect();
    let pick = match tied.len() {
        0 => return None,
        1 => tied[0],
        t => tied[rng.random_range(0..t)],
    };
    let price = if tied.len() > 1 {
        top
    } else {
        offers.iter().enumerate().filter(|&(i, _)| i != pick).map(|(_, o)| o.0).fold(0.0, f64::max)
    };
    Some(Sale { winner: offers[pick].1, price })
}

/// Mean efficiency over `config.replications` replications with a
/// normal-approximation confidence interval.
pub fn run_experiment(config: &MarketConfig) -> Result<EfficiencyReport> {
    config.validate()?;
    let model = if config.global_bidder { Some(config.locals.model()?) } else { None };
    let samples: Vec<f64> = (0..config.replications as u64)
        .into_par_iter()
        .map(|i| replicate(config, model.as_ref(), i).map(|r| r.efficiency))
        .collect::<Result<_>>()?;

    let r = samples.len() as f64;
    let mean = pairwise_sum(&samples) / r;
    let half_width = if samples.len() < 2 || samples.iter().all(|&x| x == samples[0]) {
        0.0
    } else {
        let squares: Vec<f64> = samples.iter().map(|x| (x - mean).powi(2)).collect();
        let sd = (pairwise_sum(&squares) / (r - 1.0)).sqrt();
        let z = Normal::standard().inverse_cdf(0.5 + config.confidence / 2.0);
        z * sd / r.sqrt()
    };
    Ok(EfficiencyReport {
        config: config.clone(),
        mean_efficiency: mean,
        half_width,
        ci_low: (mean - half_width).max(0.0),
        ci_high: (mean + half_width).min(1.0),
        replications: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(m: usize, n: u32, global: bool, reps: usize) -> MarketConfig {
        MarketConfig { replications: reps, ..MarketConfig::new(m, LocalBidders::Static { n }, global, 7).unwrap() }
    }

    #[test]
    fn efficiency_of_a_split_market() {
        let vals = vec![vec![0.9, 0.8], vec![0.7, 0.1]];
        let winners = [Some(Winner::Local { auction: 0, index: 0 }), Some(Winner::Local { auction: 1, index: 0 })];
        let eta = allocation_efficiency(&vals, None, &winners).unwrap();
        assert!((eta - 1.6 / 1.7).abs() < 1e-12);
        assert!((eta - 0.941176).abs() < 1e-6);
    }

    #[test]
    fn global_value_counts_once() {
        let vals = vec![vec![0.2], vec![0.6]];
        let winners = [Some(Winner::Global), Some(Winner::Global)];
        let eta = allocation_efficiency(&vals, Some(0.9), &winners).unwrap();
        assert!((eta - 0.9 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn single_auction_is_efficient() {
        let vals = vec![vec![0.3, 0.75, 0.5]];
        let eta = allocation_efficiency(&vals, None, &[Some(Winner::Local { auction: 0, index: 1 })]).unwrap();
        assert_eq!(eta, 1.0);
        let c = config(1, 3, true, 200);
        for i in 0..200 {
            assert_eq!(run_replication(&c, i).unwrap().efficiency, 1.0);
        }
    }

    #[test]
    fn degenerate_markets_rejected() {
        assert!(allocation_efficiency(&[vec![0.5], vec![]], None, &[Some(Winner::Local { auction: 0, index: 0 }), None]).is_err());
        assert!(allocation_efficiency(&[vec![0.5]], None, &[Some(Winner::Global)]).is_err());
        assert!(MarketConfig::new(0, LocalBidders::Static { n: 1 }, false, 0).is_err());
        assert!(MarketConfig::new(2, LocalBidders::Dynamic { mean_n: 0.0 }, false, 0).is_err());
    }

    #[test]
    fn one_local_per_auction_is_efficient() {
        let c = MarketConfig { balance_population: false, ..config(2, 1, false, 2000) };
        let report = run_experiment(&c).unwrap();
        assert_eq!(report.mean_efficiency, 1.0);
        assert_eq!(report.half_width, 0.0);
    }

    #[test]
    fn replications_replay_and_stay_in_range() {
        let c = config(3, 2, true, 50);
        for i in 0..50 {
            let a = run_replication(&c, i).unwrap();
            assert_eq!(a, run_replication(&c, i).unwrap());
            assert!((0.0..=1.0).contains(&a.efficiency));
        }
        assert_eq!(run_experiment(&c).unwrap(), run_experiment(&c).unwrap());
    }

    #[test]
    fn empty_dynamic_auctions_go_to_the_global_bidder() {
        let c = MarketConfig { replications: 300, ..MarketConfig::new(3, LocalBidders::Dynamic { mean_n: 0.7 }, true, 3).unwrap() };
        let mut seen = 0;
        for i in 0..300 {
            let r = run_replication(&c, i).unwrap();
            for (k, sale) in r.sales.iter().enumerate() {
                if r.local_valuations[k].is_empty() {
                    let sale = sale.expect("global bidder always bids");
                    assert_eq!(sale.winner, Winner::Global);
                    assert_eq!(sale.price, 0.0);
                    seen += 1;
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn balanced_market_holds_one_extra_local() {
        let c = config(3, 2, false, 10);
        let r = run_replication(&c, 4).unwrap();
        let total: usize = r.local_valuations.iter().map(Vec::len).sum();
        assert_eq!(total, 7);
        assert!(r.global_bids.is_none());
    }

    #[test]
    fn second_price() {
        let mut rng = replication_rng(1, 1);
        let offers = [(0.4, Winner::Local { auction: 0, index: 0 }), (0.7, Winner::Global), (0.2, Winner::Local { auction: 0, index: 1 })];
        assert_eq!(run_auction(&offers, &mut rng), Some(Sale { winner: Winner::Global, price: 0.4 }));
        assert_eq!(run_auction(&[], &mut rng), None);
        let lone = run_auction(&offers[..1], &mut rng).unwrap();
        assert_eq!(lone.price, 0.0);
    }
}
