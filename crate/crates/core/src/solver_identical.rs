//! Optimal global bid for `m` identical auctions.
//!
//! Stationarity forces every bid to equalise `H(b) = b (1 - G(b))`, so under
//! a nondecreasing hazard rate the optimum holds at most two distinct values:
//! `m - 1` low bids at or below the critical point `b^f` of `H` and at most one
//! high bid above it. The high bid follows from the low one through the best
//! response `b_+ = v (1 - G(b_-))^{m-1}`, which leaves a one dimensional
//! search over `b_-` whose cost does not depend on `m`.

use rayon::prelude::*;
use serde::Serialize;

use crate::ascent::projected_ascent;
use crate::distributions::CompetitiveBidModel;
use crate::error::{check_range, Error, Result};
use crate::numeric::{bisect, golden_max};
use crate::oracle::{grid_maximize, GridSpec, MAX_ORACLE_AUCTIONS};
use crate::utility::{local_utility, AuctionSet, GlobalBid};

/// Lower end of the low-bid search interval.
pub const LOW_BID_EPSILON: f64 = 1e-9;
/// Utilities closer than this are treated as a tie (resolved towards uniform bids).
pub const TIE_TOLERANCE: f64 = 1e-12;

const FIXED_POINT_DAMPING: f64 = 0.5;
const FIXED_POINT_ITERS: usize = 200;
const FIXED_POINT_RESIDUAL: f64 = 1e-12;
const GOLDEN_TOL: f64 = 1e-10;
/// Bids closer than this are reported as one value.
const DISTINCT_BID_TOL: f64 = 1e-7;
const FALLBACK_RESOLUTION: f64 = 1e-2;

/// Shape of an optimal global bid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type")]
pub enum BidStructure {
    /// The same bid in every auction.
    Uniform,
    /// One high bid (at `high_index`) and `m - 1` low ones.
    HighLow { low: f64, high: f64, high_index: usize },
    /// Bids set auction by auction, as for non-identical auctions.
    PerAuction,
}

impl BidStructure {
    pub fn label(&self) -> &'static str {
        match self {
            BidStructure::Uniform => "uniform",
            BidStructure::HighLow { .. } => "high_low",
            BidStructure::PerAuction => "per_auction",
        }
    }
}

/// Residuals and flags describing how a solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `max_i |H_i(b_i) - v Π_j (1 - G_j(b_j))|`.
    pub equalization_residual: f64,
    /// `max_i |∂U/∂b_i|`.
    pub gradient_residual: f64,
    /// Hazard rate of `G` verified nondecreasing on a grid.
    pub hazard_certified: bool,
    /// The brute-force oracle replaced the reduced search.
    pub oracle_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverResult {
    pub bids: GlobalBid,
    pub utility: f64,
    pub structure: BidStructure,
    pub diagnostics: Diagnostics,
}

impl SolverResult {
    pub fn low_bid(&self) -> f64 {
        match self.structure {
            BidStructure::Uniform => self.bids.0[0],
            BidStructure::HighLow { low, .. } => low,
            BidStructure::PerAuction => self.bids.0.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn high_bid(&self) -> f64 {
        match self.structure {
            BidStructure::Uniform => self.bids.0[0],
            BidStructure::HighLow { high, .. } => high,
            BidStructure::PerAuction => self.bids.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Tuning for [`solve_identical_with`].
#[derive(Debug, Clone, Copy)]
pub struct IdenticalOptions {
    /// Use the brute-force oracle when the hazard certificate fails (`m <= 4` only).
    pub allow_oracle_fallback: bool,
    /// Grid points scanned over the low-bid interval before refinement.
    pub low_bid_grid: usize,
}

impl Default for IdenticalOptions {
    fn default() -> Self {
        Self { allow_oracle_fallback: true, low_bid_grid: 2000 }
    }
}

/// Best response in one auction: `v Π_j (1 - G(b_j))` over the other bids.
pub fn best_response(others: &[f64], v: f64, model: &CompetitiveBidModel) -> Result<f64> {
    let v_max = model.v_max();
    check_range("valuation", v, f64::MIN_POSITIVE, v_max)?;
    for &b in others {
        check_range("bid", b, 0.0, v_max)?;
    }
    let lose: f64 = others.iter().map(|&b| 1.0 - model.cdf(b)).product();
    Ok((v * lose).clamp(0.0, v_max))
}

/// Optimal uniform bid: the fixed point of `b = v (1 - G(b))^{m-1}`.
pub fn solve_uniform(m: usize, v: f64, model: &CompetitiveBidModel) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    check_range("valuation", v, f64::MIN_POSITIVE, model.v_max())?;
    if m == 1 {
        return Ok(v);
    }
    let map = |b: f64| v * (1.0 - model.cdf(b)).powi(m as i32 - 1);
    let mut b = 0.5 * v;
    for _ in 0..FIXED_POINT_ITERS {
        let next = (1.0 - FIXED_POINT_DAMPING) * b + FIXED_POINT_DAMPING * map(b);
        b = next;
        if (b - map(b)).abs() < FIXED_POINT_RESIDUAL {
            return Ok(b);
        }
    }
    // b - map(b) is increasing, nonpositive at 0 and nonnegative at v
    Ok(bisect(|b| b - map(b), 0.0, v, 0.0).unwrap_or(b))
}

/// Candidate from the high/low family for a given low bid.
fn high_low_bids(m: usize, v: f64, model: &CompetitiveBidModel, low: f64) -> (f64, f64) {
    let high = v * (1.0 - model.cdf(low)).powi(m as i32 - 1);
    (low, high.min(model.v_max()))
}

fn high_low_utility(m: usize, v: f64, model: &CompetitiveBidModel, low: f64) -> f64 {
    let (low, high) = high_low_bids(m, v, model, low);
    let lose_low = (1.0 - model.cdf(low)).powi(m as i32 - 1);
    v * (1.0 - (1.0 - model.cdf(high)) * lose_low) - model.payment(high) - (m as f64 - 1.0) * model.payment(low)
}

/// Stationarity residual of the low-bid auctions given the implied high bid.
fn low_consistency(m: usize, v: f64, model: &CompetitiveBidModel, low: f64) -> f64 {
    let (low, high) = high_low_bids(m, v, model, low);
    v * (1.0 - model.cdf(low)).powi(m as i32 - 2) * (1.0 - model.cdf(high)) - low
}

fn assemble(m: usize, low: f64, high: f64) -> Vec<f64> {
    let mut bids = vec![low; m];
    bids[0] = high;
    bids
}

pub(crate) fn diagnostics(auctions: &AuctionSet, bids: &[f64], v: f64, hazard_certified: bool, oracle_fallback: bool) -> Diagnostics {
    let lose_all = auctions.lose_all(bids);
    let equalization_residual = auctions
        .models()
        .iter()
        .zip(bids)
        .map(|(g, &b)| (g.h(b) - v * lose_all).abs())
        .fold(0.0, f64::max);
    let gradient_residual = auctions.gradient_unchecked(bids, v).iter().map(|d| d.abs()).fold(0.0, f64::max);
    Diagnostics { equalization_residual, gradient_residual, hazard_certified, oracle_fallback }
}

/// Local maxima of the high/low family, refined and polished.
///
/// Each entry is `(low, high, utility)`.
fn high_low_candidates(m: usize, v: f64, model: &CompetitiveBidModel, upper: f64, grid: usize) -> Vec<(f64, f64, f64)> {
    let lo = LOW_BID_EPSILON;
    let hi = upper.max(lo);
    let xs: Vec<f64> = (0..=grid).map(|k| lo + (hi - lo) * k as f64 / grid as f64).collect();
    let us: Vec<f64> = xs.iter().map(|&x| high_low_utility(m, v, model, x)).collect();
    let mut out = Vec::new();
    for k in 0..=grid {
        let left = if k > 0 { us[k - 1] } else { f64::NEG_INFINITY };
        let right = if k < grid { us[k + 1] } else { f64::NEG_INFINITY };
        if us[k] < left || us[k] < right {
            continue;
        }
        // skip the second cell of a flat plateau
        if k > 0 && us[k] == left {
            continue;
        }
        let a = xs[k.saturating_sub(1)];
        let b = xs[(k + 1).min(grid)];
        let (mut low, _) = golden_max(|x| high_low_utility(m, v, model, x), a, b, GOLDEN_TOL);
        // polish on the first-order condition, which is far better conditioned
        let width = (b - a).max(1e-9);
        let (pa, pb) = ((low - width).max(lo), (low + width).min(hi));
        if let Some(root) = bisect(|x| low_consistency(m, v, model, x), pa, pb, 0.0) {
            if high_low_utility(m, v, model, root) >= high_low_utility(m, v, model, low) - 1e-15 {
                low = root;
            }
        }
        let (low, high) = high_low_bids(m, v, model, low);
        out.push((low, high, high_low_utility(m, v, model, low)));
    }
    out
}

/// Every stationary candidate of the reduced family for `m` auctions:
/// the uniform fixed point and each refined high/low local maximum.
pub fn stationary_candidates(m: usize, v: f64, model: &CompetitiveBidModel) -> Result<Vec<GlobalBid>> {
    let uniform = solve_uniform(m, v, model)?;
    let mut out = vec![GlobalBid::uniform(m, uniform)];
    if m >= 2 {
        let upper = model.critical_point().unwrap_or(v).min(v);
        for (low, high, _) in high_low_candidates(m, v, model, upper, IdenticalOptions::default().low_bid_grid) {
            if high - low > DISTINCT_BID_TOL {
                out.push(GlobalBid(assemble(m, low, high)));
            }
        }
    }
    Ok(out)
}

/// Optimal global bid for `m` identical auctions with default options.
pub fn solve_identical(m: usize, v: f64, model: &CompetitiveBidModel) -> Result<SolverResult> {
    solve_identical_with(m, v, model, &IdenticalOptions::default())
}

pub fn solve_identical_with(m: usize, v: f64, model: &CompetitiveBidModel, opts: &IdenticalOptions) -> Result<SolverResult> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    let v_max = model.v_max();
    check_range("valuation", v, f64::MIN_POSITIVE, v_max)?;
    let auctions = AuctionSet::identical(model.clone(), m)?;
    let critical = model.critical_point();
    let certified = critical.is_ok() && model.hazard_certified();

    if m == 1 {
        let bids = vec![v];
        return Ok(SolverResult {
            utility: auctions.utility_unchecked(&bids, v),
            diagnostics: diagnostics(&auctions, &bids, v, certified, false),
            bids: GlobalBid(bids),
            structure: BidStructure::Uniform,
        });
    }

    if !certified && opts.allow_oracle_fallback && m <= MAX_ORACLE_AUCTIONS {
        return oracle_fallback(m, v, &auctions);
    }

    let uniform_bid = solve_uniform(m, v, model)?;
    let uniform = vec![uniform_bid; m];
    let mut best = (auctions.utility_unchecked(&uniform, v), uniform, BidStructure::Uniform);

    let upper = critical.unwrap_or(v).min(v);
    let mut contenders: Vec<(f64, f64, f64)> = high_low_candidates(m, v, model, upper, opts.low_bid_grid.max(2));
    if (v - v_max).abs() <= 1e-12 {
        // bid v_max once and nothing elsewhere
        let bids = assemble(m, 0.0, v_max);
        contenders.push((0.0, v_max, auctions.utility_unchecked(&bids, v)));
    }
    for (low, high, u) in contenders {
        if high - low > DISTINCT_BID_TOL && u > best.0 + TIE_TOLERANCE {
            best = (u, assemble(m, low, high), BidStructure::HighLow { low, high, high_index: 0 });
        }
    }

    let (utility, bids, structure) = best;
    Ok(SolverResult {
        diagnostics: diagnostics(&auctions, &bids, v, certified, false),
        bids: GlobalBid(bids),
        utility,
        structure,
    })
}

fn oracle_fallback(m: usize, v: f64, auctions: &AuctionSet) -> Result<SolverResult> {
    let spec = GridSpec::new(FALLBACK_RESOLUTION, m, None)?;
    let (start, _) = grid_maximize(v, auctions, &spec)?;
    let v_max = auctions.v_max();
    let mut bids = projected_ascent(auctions, v, start.as_slice(), v_max, f64::INFINITY);
    // identical auctions: report the high bid first
    bids.sort_by(|a, b| b.total_cmp(a));
    let (high, low) = (bids[0], bids[m - 1]);
    let structure = if high - low > DISTINCT_BID_TOL {
        BidStructure::HighLow { low, high, high_index: 0 }
    } else {
        BidStructure::Uniform
    };
    Ok(SolverResult {
        utility: auctions.utility_unchecked(&bids, v),
        diagnostics: diagnostics(auctions, &bids, v, false, true),
        bids: GlobalBid(bids),
        structure,
    })
}

/// One row of a valuation sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub v: f64,
    pub result: SolverResult,
    /// Utility of bidding `v` in a single auction.
    pub local_utility: f64,
    pub utility_ratio: f64,
}

/// Solves on `grid` evenly spaced valuations `v_max·k/grid`, `k = 1..=grid`.
pub fn sweep_valuations(m: usize, model: &CompetitiveBidModel, grid: usize) -> Result<Vec<SweepRow>> {
    sweep_valuations_with(m, model, grid, &IdenticalOptions::default())
}

pub fn sweep_valuations_with(
    m: usize,
    model: &CompetitiveBidModel,
    grid: usize,
    opts: &IdenticalOptions,
) -> Result<Vec<SweepRow>> {
    if grid < 2 {
        return Err(Error::InvalidParameter("sweep grid needs at least 2 points".into()));
    }
    let v_max = model.v_max();
    (1..=grid)
        .into_par_iter()
        .map(|k| {
            let v = if k == grid { v_max } else { v_max * k as f64 / grid as f64 };
            let result = solve_identical_with(m, v, model, opts)?;
            let local = local_utility(v, model);
            let utility_ratio = if local > 0.0 { result.utility / local } else { f64::NAN };
            Ok(SweepRow { v, result, local_utility: local, utility_ratio })
        })
        .collect()
}

/// Smallest swept valuation at which the optimum splits into high and low bids.
pub fn detect_bifurcation(sweep: &[SweepRow]) -> Option<f64> {
    sweep
        .iter()
        .filter(|r| matches!(r.result.structure, BidStructure::HighLow { .. }))
        .map(|r| r.v)
        .reduce(f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn static_uniform(n: u32) -> CompetitiveBidModel {
        CompetitiveBidModel::static_uniform(n).unwrap()
    }

    #[test]
    fn best_response_examples() {
        let m1 = static_uniform(1);
        assert_eq!(best_response(&[], 0.7, &m1).unwrap(), 0.7);
        assert!((best_response(&[1.0 / 3.0], 0.5, &m1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((best_response(&[0.2, 0.2], 0.5, &m1).unwrap() - 0.32).abs() < 1e-15);
        assert!(best_response(&[1.2], 0.5, &m1).is_err());
        assert!(best_response(&[0.2], 0.0, &m1).is_err());
    }

    #[test]
    fn uniform_fixed_point_examples() {
        let m1 = static_uniform(1);
        assert_eq!(solve_uniform(1, 0.5, &m1).unwrap(), 0.5);
        assert!((solve_uniform(2, 0.5, &m1).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((solve_uniform(2, 0.9, &m1).unwrap() - 0.9 / 1.9).abs() < 1e-12);
        for m in [3, 10, 100, 1000] {
            let model = static_uniform(5);
            let b = solve_uniform(m, 0.8, &model).unwrap();
            let resid = b - 0.8 * (1.0 - model.cdf(b)).powi(m as i32 - 1);
            assert!(resid.abs() < 1e-12, "m={m} resid={resid}");
        }
        assert!(solve_uniform(0, 0.5, &m1).is_err());
    }

    #[test]
    fn two_auction_optimum_is_uniform_third() {
        let r = solve_identical(2, 0.5, &static_uniform(1)).unwrap();
        assert_eq!(r.structure, BidStructure::Uniform);
        for b in r.bids.as_slice() {
            assert!((b - 1.0 / 3.0).abs() < 1e-9);
        }
        assert!((r.utility - 1.0 / 6.0).abs() < 1e-9);
        assert!(r.diagnostics.gradient_residual < 1e-8);
    }

    #[test]
    fn structure_invariants_across_valuations() {
        let model = static_uniform(5);
        let bf = model.critical_point().unwrap();
        for m in [2, 3, 4, 6] {
            for k in 1..20 {
                let v = k as f64 / 20.0;
                let r = solve_identical(m, v, &model).unwrap();
                let bids = r.bids.as_slice();
                assert!(bids.iter().all(|&b| b > 0.0));
                assert!(bids.iter().filter(|&&b| b > bf + 1e-9).count() <= 1);
                let mut distinct: Vec<f64> = bids.to_vec();
                distinct.sort_by(f64::total_cmp);
                distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-7);
                assert!(distinct.len() <= 2);
                if let BidStructure::HighLow { low, high, .. } = r.structure {
                    assert!(low <= bf + 1e-12 && high >= bf - 1e-12);
                }
                assert!(r.diagnostics.gradient_residual < 1e-8, "m={m} v={v} {:?}", r.diagnostics);
                assert!(r.diagnostics.equalization_residual < 1e-8, "m={m} v={v} {:?}", r.diagnostics);
            }
        }
    }

    #[test]
    fn single_auction_bids_truthfully() {
        let rows = sweep_valuations(1, &static_uniform(5), 3).unwrap();
        for row in rows {
            assert_eq!(row.result.bids.0, vec![row.v]);
            assert!((row.utility_ratio - 1.0).abs() < 1e-12);
        }
        assert!(detect_bifurcation(&sweep_valuations(1, &static_uniform(5), 10).unwrap()).is_none());
    }

    #[test]
    fn sweep_ratio_for_two_auctions() {
        let rows = sweep_valuations(2, &static_uniform(1), 2).unwrap();
        let row = &rows[0];
        assert!((row.v - 0.5).abs() < 1e-15);
        assert!((row.result.utility - 1.0 / 6.0).abs() < 1e-9);
        assert!((row.local_utility - 0.125).abs() < 1e-15);
        assert!((row.utility_ratio - 4.0 / 3.0).abs() < 1e-8);
        assert!(sweep_valuations(2, &static_uniform(1), 1).is_err());
    }

    #[test]
    fn uncertified_model_uses_oracle_fallback() {
        let model = crate::distributions::tests::two_step_model();
        let r = solve_identical(2, 0.6, &model).unwrap();
        assert!(r.diagnostics.oracle_fallback);
        assert!(!r.diagnostics.hazard_certified);
        let no_fallback = IdenticalOptions { allow_oracle_fallback: false, ..Default::default() };
        let r2 = solve_identical_with(2, 0.6, &model, &no_fallback).unwrap();
        assert!(!r2.diagnostics.oracle_fallback);
        assert!(r.utility >= r2.utility - 1e-9);
    }
}
