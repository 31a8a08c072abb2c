//! Optimal global bid under a hard cap on exposure, `Σ b_i <= C`.
//!
//! The unconstrained optimum is used whenever it already fits the budget.
//! When it does not, models with a convex density vanishing at zero let the
//! bidder put the whole budget into a single auction (provided `v >= C`).
//! Every other case is solved numerically: projected ascent from many
//! starting points, cross-checked against the interior stationary points,
//! and finished with a Newton step on the active-set KKT system.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ascent::{projected_ascent, projected_gradient_residual};
use crate::distributions::CompetitiveBidModel;
use crate::error::{check_range, Error, Result};
use crate::numeric::project_capped_box;
use crate::solver_identical::{solve_identical, stationary_candidates, TIE_TOLERANCE};
use crate::utility::{AuctionSet, GlobalBid};

/// Number of starting points for the numeric path.
pub const MULTISTART_POINTS: usize = 32;
/// Local optima closer than this in utility are treated as the same optimum.
pub const AGREEMENT_TOL: f64 = 1e-6;
/// Target for the first-order residual of the refined solution.
pub const KKT_TOL: f64 = 1e-8;

const CONVEXITY_GRID: usize = 1000;
const CONVEXITY_SLACK: f64 = 1e-9;
const ZERO_DENSITY_TOL: f64 = 1e-12;
const FEASIBILITY_SLACK: f64 = 1e-12;
const ACTIVE_TOL: f64 = 1e-9;
const FACE_TOL: f64 = 1e-6;
/// Coordinates with a smaller density barely move the utility and are held fixed.
const FLAT_DENSITY: f64 = 1e-8;
const START_SEED: u64 = 0x5eed_b0d6;

/// A budget-constrained bidding problem on `m` identical auctions.
#[derive(Debug, Clone)]
pub struct BudgetProblem {
    pub budget: f64,
    pub v: f64,
    pub m: usize,
    pub model: CompetitiveBidModel,
}

impl BudgetProblem {
    pub fn new(budget: f64, v: f64, m: usize, model: CompetitiveBidModel) -> Result<Self> {
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::Infeasible(format!("budget must be positive, got {budget}")));
        }
        check_range("valuation", v, f64::MIN_POSITIVE, model.v_max())?;
        if m == 0 {
            return Err(Error::InvalidParameter("m must be >= 1".into()));
        }
        Ok(Self { budget, v, m, model })
    }
}

/// Which regime the budget puts the bidder in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BudgetCase {
    /// The unconstrained optimum overspends and `v >= C`.
    Case1,
    /// The unconstrained optimum overspends and `v < C`.
    Case2,
    /// The budget does not bind.
    Case3,
}

/// Lagrange multiplier of the exposure constraint and the unused budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kkt {
    pub multiplier: f64,
    /// `C - Σ b_i`, the squared slack variable of the Lagrangian.
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetSolution {
    pub bids: GlobalBid,
    pub utility: f64,
    pub case: BudgetCase,
    pub exposure: f64,
    /// The whole budget went into one auction by the single-bid rule.
    pub single_bid_rule: bool,
    pub kkt: Option<Kkt>,
    /// First-order optimality residual over the feasible set.
    pub residual: f64,
    /// The multistart runs ended in local optima of different utility.
    pub multistart_disagreement: bool,
}

/// Sum of the bids.
pub fn exposure(bids: &GlobalBid) -> f64 {
    bids.exposure()
}

/// Compares the unconstrained optimum's exposure against the budget.
pub fn classify_case(p: &BudgetProblem) -> Result<BudgetCase> {
    let free = solve_identical(p.m, p.v, &p.model)?;
    Ok(case_for(p, free.bids.exposure()))
}

fn case_for(p: &BudgetProblem, unconstrained_exposure: f64) -> BudgetCase {
    if unconstrained_exposure <= p.budget + FEASIBILITY_SLACK {
        BudgetCase::Case3
    } else if p.v >= p.budget {
        BudgetCase::Case1
    } else {
        BudgetCase::Case2
    }
}

/// True when `g(0) = 0` and `g` is convex on a sampled grid, in which case a
/// binding budget no larger than `v` is best spent entirely in one auction.
pub fn single_bid_certified(model: &CompetitiveBidModel) -> bool {
    if model.pdf(0.0).abs() > ZERO_DENSITY_TOL {
        return false;
    }
    let v_max = model.v_max();
    let g: Vec<f64> = (0..=CONVEXITY_GRID)
        .map(|k| model.pdf(v_max * k as f64 / CONVEXITY_GRID as f64))
        .collect();
    g.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -CONVEXITY_SLACK)
}

pub fn solve_budget(p: &BudgetProblem) -> Result<BudgetSolution> {
    let auctions = AuctionSet::identical(p.model.clone(), p.m)?;
    let free = solve_identical(p.m, p.v, &p.model)?;
    let free_exposure = free.bids.exposure();
    let case = case_for(p, free_exposure);
    let cap = p.budget;
    let upper = p.v;

    if case == BudgetCase::Case3 {
        let residual = projected_gradient_residual(&auctions, p.v, free.bids.as_slice(), p.model.v_max(), f64::INFINITY);
        return Ok(BudgetSolution {
            exposure: free_exposure,
            utility: free.utility,
            bids: free.bids,
            case,
            single_bid_rule: false,
            kkt: Some(Kkt { multiplier: 0.0, slack: cap - free_exposure }),
            residual,
            multistart_disagreement: false,
        });
    }

    if case == BudgetCase::Case1 && single_bid_certified(&p.model) {
        let mut bids = vec![0.0; p.m];
        bids[0] = cap;
        // the other auctions are lost for sure, so the marginal value is g(C)(v - C)
        let multiplier = p.model.pdf(cap) * (p.v - cap);
        return Ok(BudgetSolution {
            utility: auctions.utility_unchecked(&bids, p.v),
            residual: projected_gradient_residual(&auctions, p.v, &bids, upper, cap),
            bids: GlobalBid(bids),
            case,
            exposure: cap,
            single_bid_rule: true,
            kkt: Some(Kkt { multiplier, slack: 0.0 }),
            multistart_disagreement: false,
        });
    }

    let starts = multistart_points(p, free.bids.as_slice(), upper);
    let ascended: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .map(|s| {
            let x = projected_ascent(&auctions, p.v, s, upper, cap);
            (auctions.utility_unchecked(&x, p.v), x)
        })
        .collect();
    let lo = ascended.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let hi = ascended.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let multistart_disagreement = hi - lo > AGREEMENT_TOL;

    // first maximal run in generation order, so the result is reproducible
    let (_, mut best) = ascended
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |acc, c| if c.0 > acc.0 { c } else { acc });
    // ascent can stall just short of the budget, so also try the exhausted branch
    let slack = cap - best.iter().sum::<f64>();
    let branches: &[bool] = if slack < FACE_TOL { &[false, true] } else { &[false] };
    let mut best_u = auctions.utility_unchecked(&best, p.v);
    for &on_face in branches {
        if let Some(polished) = kkt_polish(&auctions, p.v, &best, upper, cap, on_face) {
            let u = auctions.utility_unchecked(&polished, p.v);
            if u >= best_u - 1e-14 {
                best = polished;
                best_u = u;
            }
        }
    }

    // Slack branch: stationary points of the free problem restricted to
    // k auctions (zero elsewhere) that already fit the budget.
    let mut candidates = vec![(auctions.utility_unchecked(&best, p.v), best)];
    for k in 1..=p.m {
        for b in stationary_candidates(k, p.v, &p.model)? {
            let mut padded = b.0;
            padded.resize(p.m, 0.0);
            if padded.iter().sum::<f64>() <= cap + FEASIBILITY_SLACK && padded.iter().all(|&x| x <= upper) {
                candidates.push((auctions.utility_unchecked(&padded, p.v), padded));
            }
        }
    }
    // among utilities tied with the best, keep the smallest exposure
    let top = candidates.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let (_, mut best) = candidates
        .into_iter()
        .filter(|c| c.0 >= top - TIE_TOLERANCE)
        .fold((f64::INFINITY, Vec::new()), |acc, (_, b)| {
            let e = b.iter().sum::<f64>();
            if e < acc.0 {
                (e, b)
            } else {
                acc
            }
        });
    best.sort_by(|a, b| b.total_cmp(a));
    let bids = project_capped_box(&best, upper, cap);
    let exposure = bids.iter().sum::<f64>();
    let multiplier = constraint_multiplier(&auctions, p.v, &bids, cap);
    Ok(BudgetSolution {
        utility: auctions.utility_unchecked(&bids, p.v),
        residual: projected_gradient_residual(&auctions, p.v, &bids, upper, cap),
        bids: GlobalBid(bids),
        case,
        exposure,
        single_bid_rule: false,
        kkt: Some(Kkt { multiplier, slack: (cap - exposure).max(0.0) }),
        multistart_disagreement,
    })
}

/// Even splits of the budget over `k = 1..=m` auctions, then random
/// perturbations of the scaled unconstrained optimum.
fn multistart_points(p: &BudgetProblem, free: &[f64], upper: f64) -> Vec<Vec<f64>> {
    let m = p.m;
    let cap = p.budget;
    let mut starts: Vec<Vec<f64>> = (1..=m.min(MULTISTART_POINTS))
        .map(|k| {
            let share = (cap / k as f64).min(upper);
            (0..m).map(|i| if i < k { share } else { 0.0 }).collect()
        })
        .collect();
    let total: f64 = free.iter().sum();
    let scale = if total > cap { cap / total } else { 1.0 };
    let scaled: Vec<f64> = free.iter().map(|b| b * scale).collect();
    starts.push(project_capped_box(&scaled, upper, cap));
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    while starts.len() < MULTISTART_POINTS {
        let jitter: Vec<f64> = scaled.iter().map(|&b| b * rng.random_range(0.0..2.0)).collect();
        starts.push(project_capped_box(&jitter, upper, cap));
    }
    starts
}

/// Multiplier of the budget constraint: zero when it has slack, otherwise
/// the average gradient over the positive bids.
fn constraint_multiplier(auctions: &AuctionSet, v: f64, bids: &[f64], cap: f64) -> f64 {
    if cap - bids.iter().sum::<f64>() > ACTIVE_TOL {
        0.0
    } else {
        mean_gradient(auctions, v, bids)
    }
}

fn mean_gradient(auctions: &AuctionSet, v: f64, bids: &[f64]) -> f64 {
    let grad = auctions.gradient_unchecked(bids, v);
    let free: Vec<f64> = bids.iter().zip(&grad).filter(|(b, _)| **b > ACTIVE_TOL).map(|(_, g)| *g).collect();
    if free.is_empty() {
        0.0
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    }
}

/// Newton iterations on the KKT system of the active set at `x`.
///
/// Bids at zero, at the box bound or on a flat stretch of the density stay
/// fixed. With `on_face` the budget is held exhausted and the multiplier
/// joins the unknowns.
fn kkt_polish(auctions: &AuctionSet, v: f64, x: &[f64], upper: f64, cap: f64, on_face: bool) -> Option<Vec<f64>> {
    let models = auctions.models();
    let free: Vec<usize> = (0..x.len())
        .filter(|&i| x[i] > ACTIVE_TOL && x[i] < upper - ACTIVE_TOL && models[i].pdf(x[i]) > FLAT_DENSITY)
        .collect();
    if free.is_empty() {
        return None;
    }
    let nf = free.len();
    let dim = nf + usize::from(on_face);

    let residual = |b: &[f64], lambda: f64| -> DVector<f64> {
        let grad = auctions.gradient_unchecked(b, v);
        let mut r = DVector::zeros(dim);
        for (row, &i) in free.iter().enumerate() {
            r[row] = grad[i] - lambda;
        }
        if on_face {
            r[nf] = b.iter().sum::<f64>() - cap;
        }
        r
    };

    let mut b = x.to_vec();
    let mut lambda = if on_face { mean_gradient(auctions, v, &b) } else { 0.0 };
    let mut r = residual(&b, lambda);
    for _ in 0..50 {
        if r.amax() < KKT_TOL * 1e-3 {
            break;
        }
        let mut jac = DMatrix::zeros(dim, dim);
        for (col, &i) in free.iter().enumerate() {
            let h = 1e-7 * b[i].max(1e-3);
            let mut up = b.clone();
            let mut down = b.clone();
            up[i] += h;
            down[i] -= h;
            let gu = auctions.gradient_unchecked(&up, v);
            let gd = auctions.gradient_unchecked(&down, v);
            for (row, &j) in free.iter().enumerate() {
                jac[(row, col)] = (gu[j] - gd[j]) / (2.0 * h);
            }
            if on_face {
                jac[(nf, col)] = 1.0;
                jac[(col, nf)] = -1.0;
            }
        }
        let step = jac.lu().solve(&(-&r))?;
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-6 {
            let mut trial = b.clone();
            for (k, &i) in free.iter().enumerate() {
                trial[i] += t * step[k];
            }
            let trial_lambda = if on_face { lambda + t * step[nf] } else { lambda };
            let feasible = trial.iter().sum::<f64>() <= cap + FEASIBILITY_SLACK;
            if feasible && free.iter().all(|&i| trial[i] > 0.0 && trial[i] <= upper) {
                let rt = residual(&trial, trial_lambda);
                if rt.amax() < r.amax() {
                    b = trial;
                    lambda = trial_lambda;
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
    (r.amax() < KKT_TOL).then_some(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{grid_maximize, GridSpec};

    fn static_uniform(n: u32) -> CompetitiveBidModel {
        CompetitiveBidModel::static_uniform(n).unwrap()
    }

    #[test]
    fn exposure_examples() {
        assert_eq!(exposure(&GlobalBid::uniform(4, 0.0)), 0.0);
        assert_eq!(exposure(&GlobalBid(vec![0.8, 0.0, 0.0, 0.0])), 0.8);
        assert!((exposure(&GlobalBid::uniform(2, 1.0 / 3.0)) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn problem_validation() {
        assert!(matches!(BudgetProblem::new(0.0, 0.5, 2, static_uniform(5)), Err(Error::Infeasible(_))));
        assert!(BudgetProblem::new(1.0, 1.5, 2, static_uniform(5)).is_err());
        assert!(BudgetProblem::new(1.0, 0.5, 0, static_uniform(5)).is_err());
    }

    #[test]
    fn classification() {
        let m5 = static_uniform(5);
        let p = BudgetProblem::new(4.0, 0.9, 4, m5.clone()).unwrap();
        assert_eq!(classify_case(&p).unwrap(), BudgetCase::Case3);
        let p = BudgetProblem::new(0.8, 0.9, 4, m5.clone()).unwrap();
        assert_eq!(classify_case(&p).unwrap(), BudgetCase::Case1);
        let p = BudgetProblem::new(0.8, 0.1, 4, m5.clone()).unwrap();
        assert_eq!(classify_case(&p).unwrap(), BudgetCase::Case3);
        let p = BudgetProblem::new(0.8, 0.7, 4, m5).unwrap();
        assert_eq!(classify_case(&p).unwrap(), BudgetCase::Case2);
    }

    #[test]
    fn certificate() {
        for n in 2..8 {
            assert!(single_bid_certified(&static_uniform(n)), "n={n}");
        }
        assert!(!single_bid_certified(&static_uniform(1)));
        assert!(!single_bid_certified(&CompetitiveBidModel::dynamic_uniform(5.0).unwrap()));
    }

    #[test]
    fn loose_budget_returns_unconstrained() {
        let m5 = static_uniform(5);
        let free = solve_identical(4, 0.6, &m5).unwrap();
        let sol = solve_budget(&BudgetProblem::new(4.0, 0.6, 4, m5).unwrap()).unwrap();
        assert_eq!(sol.case, BudgetCase::Case3);
        assert_eq!(sol.bids, free.bids);
        assert_eq!(sol.kkt.unwrap().multiplier, 0.0);
    }

    #[test]
    fn single_bid_collapse() {
        for v in [0.8, 0.9, 1.0] {
            let sol = solve_budget(&BudgetProblem::new(0.8, v, 4, static_uniform(5)).unwrap()).unwrap();
            assert_eq!(sol.bids.0, vec![0.8, 0.0, 0.0, 0.0]);
            assert!(sol.single_bid_rule);
            assert_eq!(sol.case, BudgetCase::Case1);
        }
    }

    #[test]
    fn positive_density_at_zero_spreads_the_budget() {
        let model = CompetitiveBidModel::dynamic_uniform(5.0).unwrap();
        let sol = solve_budget(&BudgetProblem::new(0.5, 0.5, 2, model.clone()).unwrap()).unwrap();
        assert!(!sol.single_bid_rule);
        assert!(sol.bids.0.iter().all(|&b| b > 1e-4), "{:?}", sol.bids);
        let auctions = AuctionSet::identical(model, 2).unwrap();
        let single = auctions.utility_unchecked(&[0.5, 0.0], 0.5);
        assert!(sol.utility > single + 1e-6);
        assert!(sol.residual < KKT_TOL, "{}", sol.residual);
    }

    #[test]
    fn numeric_path_dominates_simple_feasible_bids() {
        let cases = [
            (static_uniform(5), 4, 0.8, 0.7),
            (static_uniform(10), 3, 1.5, 0.9),
            (CompetitiveBidModel::dynamic_uniform(3.0).unwrap(), 3, 0.6, 0.8),
        ];
        for (model, m, c, v) in cases {
            let sol = solve_budget(&BudgetProblem::new(c, v, m, model.clone()).unwrap()).unwrap();
            let auctions = AuctionSet::identical(model, m).unwrap();
            assert!(sol.exposure <= c + 1e-12);
            let mut single = vec![0.0; m];
            single[0] = c.min(v);
            let split = vec![c / m as f64; m];
            assert!(sol.utility >= auctions.utility_unchecked(&single, v) - 1e-12);
            assert!(sol.utility >= auctions.utility_unchecked(&split, v) - 1e-12);
            assert!(sol.residual < KKT_TOL, "residual {} for {:?}", sol.residual, sol.bids);
        }
    }

    #[test]
    fn constrained_oracle_agrees_with_single_bid_rule() {
        let m5 = static_uniform(5);
        for m in [2, 3] {
            for (c, v) in [(0.5, 0.6), (0.8, 0.9)] {
                let auctions = AuctionSet::identical(m5.clone(), m).unwrap();
                let sol = solve_budget(&BudgetProblem::new(c, v, m, m5.clone()).unwrap()).unwrap();
                let (_, u) = grid_maximize(v, &auctions, &GridSpec::new(1e-2, m, Some(c)).unwrap()).unwrap();
                assert!(u <= sol.utility + 1e-4, "m={m} c={c} v={v}: oracle {u} vs {}", sol.utility);
            }
        }
    }

    #[test]
    fn unconstrained_exposure_outgrows_any_budget() {
        let free = solve_identical(50, 0.5, &static_uniform(5)).unwrap();
        for c in [1.0, 2.0, 4.0] {
            assert!(free.bids.exposure() > c);
        }
    }
}
