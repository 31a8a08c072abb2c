//! Optimal global bid when every auction has its own competitive-bid law.
//!
//! At an interior optimum all `H_i(b_i) = b_i (1 - G_i(b_i))` share one
//! value. Sweeping the bid of a single auction fixes that value; each other
//! auction then has at most one root of `H_k(b) = target` on either side of
//! its critical point, and the last bid follows from the best response
//! `b_m = v Π_{k≠m} (1 - G_k(b_k))`. The best sweep point is refined and then
//! polished by Newton's method on the best-response system.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::CompetitiveBidModel;
use crate::error::{check_range, Error, Result};
use crate::numeric::{bisect, golden_max};
use crate::solver_identical::{diagnostics, BidStructure, SolverResult};
use crate::utility::{AuctionSet, GlobalBid};

/// Largest auction count for the exhaustive root-combination search.
pub const MAX_NONIDENTICAL_AUCTIONS: usize = 15;
/// Default number of sweep points.
pub const DEFAULT_SWEEP_GRID: usize = 1000;
/// Tolerance of the pointwise comparison in [`dominance`].
pub const DOMINANCE_TOL: f64 = 1e-12;

const ROOT_TOL: f64 = 1e-12;
const ROOT_SCAN: usize = 1000;
const NEWTON_TOL: f64 = 1e-14;

/// How two auctions compare as `G_i` against `G_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// `G_i >= G_j` everywhere, strictly somewhere: auction `i` is preferred.
    IPreferred,
    JPreferred,
    Equal,
    /// The distribution functions cross.
    Incomparable,
}

/// Pairwise preference verdicts between auctions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceRelation {
    verdicts: Vec<Vec<Verdict>>,
    /// `strict[i][j]`: `G_i > G_j` at every interior grid point, up to relative rounding.
    strict: Vec<Vec<bool>>,
}

impl DominanceRelation {
    pub fn len(&self) -> usize {
        self.verdicts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }

    pub fn verdict(&self, i: usize, j: usize) -> Verdict {
        self.verdicts[i][j]
    }

    /// Auction `i` beats auction `j` strictly on the whole open support.
    pub fn strictly_preferred(&self, i: usize, j: usize) -> bool {
        self.strict[i][j]
    }

    /// Auction indices from most to least preferred, by number of strict wins
    /// and then by number of weak wins; ties keep index order.
    pub fn preference_order(&self) -> Vec<usize> {
        let n = self.len();
        let score = |i: usize| {
            let strict = (0..n).filter(|&j| self.strict[i][j]).count();
            let weak = (0..n).filter(|&j| self.verdicts[i][j] == Verdict::IPreferred).count();
            (strict, weak)
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&b| std::cmp::Reverse(score(b)));
        order
    }
}

/// Compares every pair of auctions on `grid` evenly spaced points of `[0, v_max]`.
pub fn dominance(auctions: &AuctionSet, grid: usize) -> Result<DominanceRelation> {
    if grid < 2 {
        return Err(Error::InvalidParameter("dominance grid needs at least 2 points".into()));
    }
    let v_max = auctions.v_max();
    let xs: Vec<f64> = (0..grid).map(|k| v_max * k as f64 / (grid - 1) as f64).collect();
    let cdfs: Vec<Vec<f64>> = auctions.models().iter().map(|g| xs.iter().map(|&x| g.cdf(x)).collect()).collect();
    let m = auctions.len();
    let mut verdicts = vec![vec![Verdict::Equal; m]; m];
    let mut strict = vec![vec![false; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let diffs: Vec<f64> = cdfs[i].iter().zip(&cdfs[j]).map(|(a, b)| a - b).collect();
            let above = diffs.iter().any(|&d| d > DOMINANCE_TOL);
            let below = diffs.iter().any(|&d| d < -DOMINANCE_TOL);
            verdicts[i][j] = match (above, below) {
                (false, false) => Verdict::Equal,
                (true, false) => Verdict::IPreferred,
                (false, true) => Verdict::JPreferred,
                (true, true) => Verdict::Incomparable,
            };
            // relative test, so the ordering survives where both laws are tiny near 0
            strict[i][j] = grid > 2
                && (1..grid - 1).all(|k| diffs[k] > DOMINANCE_TOL * cdfs[i][k].max(cdfs[j][k]));
        }
    }
    Ok(DominanceRelation { verdicts, strict })
}

/// True when every strictly ordered pair of auctions carries strictly ordered bids.
pub fn ordering_consistent(result: &SolverResult, relation: &DominanceRelation) -> bool {
    let b = result.bids.as_slice();
    (0..relation.len()).all(|i| (0..relation.len()).all(|j| !relation.strictly_preferred(i, j) || b[i] > b[j]))
}

/// Tuning for [`solve_nonidentical_with`].
#[derive(Debug, Clone, Copy)]
pub struct NonIdenticalOptions {
    /// Sweep points over the bid of the most preferred auction.
    pub sweep_grid: usize,
    /// Skip root combinations that contradict a strict preference.
    pub prune: bool,
}

impl Default for NonIdenticalOptions {
    fn default() -> Self {
        Self { sweep_grid: DEFAULT_SWEEP_GRID, prune: true }
    }
}

/// Solution together with sweep statistics.
#[derive(Debug, Clone, Serialize)]
pub struct NonIdenticalSolution {
    pub result: SolverResult,
    /// Auction whose bid was swept.
    pub swept_auction: usize,
    /// Sweep points where some `H_k = target` had no root.
    pub unmatched_points: usize,
    /// Root combinations whose utility was evaluated.
    pub combinations: usize,
}

/// Optimal global bid for non-identical auctions with default options.
pub fn solve_nonidentical(v: f64, auctions: &AuctionSet, sweep_grid: usize) -> Result<NonIdenticalSolution> {
    solve_nonidentical_with(v, auctions, &NonIdenticalOptions { sweep_grid, ..Default::default() })
}

/// Side of an auction's critical point on which a level root lies.
#[derive(Debug, Clone, Copy)]
struct Branch {
    low_side: bool,
}

/// What the sweep needs to know about each auction.
struct Level<'a> {
    model: &'a CompetitiveBidModel,
    critical: Option<f64>,
}

impl Level<'_> {
    /// Solutions of `H(b) = target` with `0 < b <= cap`, tagged by side.
    fn roots(&self, target: f64, cap: f64) -> Vec<(f64, Branch)> {
        let f = |b: f64| self.model.h(b) - target;
        let v_max = self.model.v_max();
        let mut out = Vec::with_capacity(2);
        match self.critical {
            Some(c) => {
                for (lo, hi, low_side) in [(0.0, c, true), (c, v_max, false)] {
                    if let Some(r) = bisect(f, lo, hi, ROOT_TOL) {
                        if r > 0.0 && r <= cap && out.last().is_none_or(|&(x, _)| x != r) {
                            out.push((r, Branch { low_side }));
                        }
                    }
                }
            }
            None => {
                let xs: Vec<f64> = (0..=ROOT_SCAN).map(|k| v_max * k as f64 / ROOT_SCAN as f64).collect();
                for w in xs.windows(2) {
                    let (fa, fb) = (f(w[0]), f(w[1]));
                    if fa == 0.0 || fa.signum() != fb.signum() {
                        if let Some(r) = bisect(f, w[0], w[1], ROOT_TOL) {
                            if r > 0.0 && r <= cap && out.last().is_none_or(|&(x, _)| x != r) {
                                out.push((r, Branch { low_side: fa < fb }));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn solve_nonidentical_with(v: f64, auctions: &AuctionSet, opts: &NonIdenticalOptions) -> Result<NonIdenticalSolution> {
    let m = auctions.len();
    check_range("valuation", v, f64::MIN_POSITIVE, auctions.v_max())?;
    if m > MAX_NONIDENTICAL_AUCTIONS {
        return Err(Error::InvalidParameter(format!(
            "exact non-identical search supports at most {MAX_NONIDENTICAL_AUCTIONS} auctions, got {m}"
        )));
    }
    if opts.sweep_grid < 2 {
        return Err(Error::InvalidParameter("sweep grid needs at least 2 points".into()));
    }
    let certified = auctions.models().iter().all(|g| g.critical_point().is_ok() && g.hazard_certified());
    if m == 1 {
        let bids = vec![v];
        return Ok(NonIdenticalSolution {
            result: finish(auctions, bids, v, certified),
            swept_auction: 0,
            unmatched_points: 0,
            combinations: 1,
        });
    }

    let relation = dominance(auctions, DEFAULT_SWEEP_GRID)?;
    let order = relation.preference_order();
    let swept = order[0];
    let closing = order[m - 1];
    let middle: Vec<usize> = order[1..m - 1].to_vec();
    let levels: Vec<Level> = auctions
        .models()
        .iter()
        .map(|g| Level { model: g, critical: g.critical_point().ok() })
        .collect();
    let search = Search { auctions, v, swept, closing, middle: &middle, levels: &levels, relation: &relation, prune: opts.prune };

    let grid = opts.sweep_grid;
    let points: Vec<f64> = (1..=grid).map(|k| v * k as f64 / grid as f64).collect();
    let per_point: Vec<(Option<Candidate>, bool, usize)> = points.par_iter().map(|&b| search.best_at(b)).collect();
    let unmatched_points = per_point.iter().filter(|p| p.1).count();
    let combinations = per_point.iter().map(|p| p.2).sum();

    let mut best: Option<(usize, Candidate)> = None;
    for (k, (cand, _, _)) in per_point.into_iter().enumerate() {
        if let Some(c) = cand {
            if best.as_ref().is_none_or(|(_, b)| c.utility > b.utility) {
                best = Some((k, c));
            }
        }
    }
    let mut bids = match best {
        Some((k, cand)) => {
            // refine the swept bid between the neighbouring grid points on the same branches
            let lo = if k == 0 { 0.0 } else { points[k - 1] };
            let hi = points[(k + 1).min(grid - 1)];
            let (b_ref, _) = golden_max(
                |b| search.evaluate(b, &cand.branches).map_or(f64::NEG_INFINITY, |c| c.utility),
                lo.max(1e-12),
                hi,
                1e-12,
            );
            let mut bids = match search.evaluate(b_ref, &cand.branches) {
                Some(c) if c.utility >= cand.utility => c.bids,
                _ => cand.bids,
            };
            if let Some(polished) = newton_polish(auctions, v, &bids) {
                if auctions.utility_unchecked(&polished, v) >= auctions.utility_unchecked(&bids, v) - 1e-12 {
                    bids = polished;
                }
            }
            Some(bids)
        }
        None => None,
    };
    if v >= auctions.v_max() - 1e-12 {
        // a sure win in the most preferred auction sits on the boundary, outside the sweep
        let mut sure = vec![0.0; m];
        sure[swept] = auctions.v_max();
        let better = bids.as_ref().is_none_or(|b| auctions.utility_unchecked(&sure, v) > auctions.utility_unchecked(b, v));
        if better {
            bids = Some(sure);
        }
    }
    let bids = bids.ok_or_else(|| Error::Infeasible("no sweep point produced a consistent bid vector".into()))?;
    Ok(NonIdenticalSolution { result: finish(auctions, bids, v, certified), swept_auction: swept, unmatched_points, combinations })
}

fn finish(auctions: &AuctionSet, bids: Vec<f64>, v: f64, certified: bool) -> SolverResult {
    let first = bids[0];
    let structure = if bids.iter().all(|&b| (b - first).abs() <= 1e-7) {
        BidStructure::Uniform
    } else {
        BidStructure::PerAuction
    };
    SolverResult {
        utility: auctions.utility_unchecked(&bids, v),
        diagnostics: diagnostics(auctions, &bids, v, certified, false),
        bids: GlobalBid(bids),
        structure,
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    bids: Vec<f64>,
    utility: f64,
    /// Root side chosen for each middle auction.
    branches: Vec<Branch>,
}

struct Search<'a> {
    auctions: &'a AuctionSet,
    v: f64,
    swept: usize,
    closing: usize,
    middle: &'a [usize],
    levels: &'a [Level<'a>],
    relation: &'a DominanceRelation,
    prune: bool,
}

impl Search<'_> {
    fn violates(&self, bids: &[Option<f64>], i: usize, b: f64) -> bool {
        self.prune
            && bids.iter().enumerate().any(|(j, bj)| match bj {
                Some(bj) => {
                    (self.relation.strictly_preferred(i, j) && b <= *bj)
                        || (self.relation.strictly_preferred(j, i) && *bj <= b)
                }
                None => false,
            })
    }

    /// Best root combination for one value of the swept bid. Also reports
    /// whether some level equation had no root and how many combinations
    /// were evaluated.
    fn best_at(&self, b_swept: f64) -> (Option<Candidate>, bool, usize) {
        let target = self.levels[self.swept].model.h(b_swept);
        let roots: Vec<Vec<(f64, Branch)>> = self.middle.iter().map(|&k| self.levels[k].roots(target, self.v)).collect();
        if roots.iter().any(|r| r.is_empty()) {
            return (None, true, 0);
        }
        let mut partial: Vec<Option<f64>> = vec![None; self.auctions.len()];
        partial[self.swept] = Some(b_swept);
        let mut best = None;
        let mut count = 0;
        let mut branches = Vec::with_capacity(self.middle.len());
        self.descend(0, &roots, &mut partial, &mut branches, &mut best, &mut count);
        (best, false, count)
    }

    fn descend(
        &self,
        depth: usize,
        roots: &[Vec<(f64, Branch)>],
        partial: &mut Vec<Option<f64>>,
        branches: &mut Vec<Branch>,
        best: &mut Option<Candidate>,
        count: &mut usize,
    ) {
        if depth == self.middle.len() {
            if let Some(c) = self.close(partial, branches) {
                *count += 1;
                if best.as_ref().is_none_or(|b| c.utility > b.utility) {
                    *best = Some(c);
                }
            }
            return;
        }
        let k = self.middle[depth];
        for &(r, branch) in &roots[depth] {
            if self.violates(partial, k, r) {
                continue;
            }
            partial[k] = Some(r);
            branches.push(branch);
            self.descend(depth + 1, roots, partial, branches, best, count);
            branches.pop();
            partial[k] = None;
        }
    }

    /// Completes a partial vector with the best response of the closing auction.
    fn close(&self, partial: &[Option<f64>], branches: &[Branch]) -> Option<Candidate> {
        let models = self.auctions.models();
        let lose: f64 = partial
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.map(|b| 1.0 - models[i].cdf(b)))
            .product();
        let last = (self.v * lose).clamp(0.0, self.auctions.v_max());
        let bids: Vec<f64> = partial.iter().enumerate().map(|(i, b)| if i == self.closing { last } else { b.unwrap_or(0.0) }).collect();
        let utility = self.auctions.utility_unchecked(&bids, self.v);
        Some(Candidate { bids, utility, branches: branches.to_vec() })
    }

    /// Bid vector for a swept value on fixed root sides, if every root exists.
    fn evaluate(&self, b_swept: f64, branches: &[Branch]) -> Option<Candidate> {
        let target = self.levels[self.swept].model.h(b_swept);
        let mut partial: Vec<Option<f64>> = vec![None; self.auctions.len()];
        partial[self.swept] = Some(b_swept);
        for (&k, want) in self.middle.iter().zip(branches) {
            let (r, _) = self.levels[k].roots(target, self.v).into_iter().find(|(_, b)| b.low_side == want.low_side)?;
            partial[k] = Some(r);
        }
        self.close(&partial, branches)
    }
}

/// Newton's method on `F_i(b) = b_i - v Π_{k≠i} (1 - G_k(b_k)) = 0`.
fn newton_polish(auctions: &AuctionSet, v: f64, start: &[f64]) -> Option<Vec<f64>> {
    let models = auctions.models();
    let m = start.len();
    let v_max = auctions.v_max();
    let residual = |b: &[f64]| -> DVector<f64> {
        let others = crate::utility::lose_all_but_one(auctions, b);
        DVector::from_iterator(m, b.iter().zip(&others).map(|(bi, p)| bi - v * p))
    };
    let mut b = start.to_vec();
    let mut r = residual(&b);
    for _ in 0..50 {
        if r.amax() < NEWTON_TOL {
            break;
        }
        let lose: Vec<f64> = models.iter().zip(&b).map(|(g, &x)| 1.0 - g.cdf(x)).collect();
        let mut jac = DMatrix::identity(m, m);
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let rest: f64 = (0..m).filter(|&k| k != i && k != j).map(|k| lose[k]).product();
                jac[(i, j)] = v * models[j].pdf(b[j]) * rest;
            }
        }
        let step = jac.lu().solve(&(-&r))?;
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-8 {
            let trial: Vec<f64> = b.iter().zip(step.iter()).map(|(x, d)| x + t * d).collect();
            if trial.iter().all(|&x| x > 0.0 && x <= v_max) {
                let rt = residual(&trial);
                if rt.amax() < r.amax() {
                    b = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (r.amax() < 1e-10).then_some(b)
}
