//! Projected ascent on the expected utility over a capped box.

use crate::numeric::project_capped_box;
use crate::utility::{lose_all_but_one, AuctionSet};

const MAX_ITERS: usize = 50_000;
const MIN_STEP: f64 = 1e-10;
const MAX_STEP: f64 = 64.0;

/// Maximises `U(b, v)` over `{0 <= b_i <= upper, Σ b_i <= cap}` from `start`.
///
/// Each iteration tries two directions, the plain gradient and the
/// best-response gap `v Π_{j≠i}(1 - G_j) - b_i` (the gradient without its
/// density factor, which keeps coordinates with a nearly flat density
/// moving). Each direction keeps its own step length, doubled on success
/// and halved until the utility improves.
pub(crate) fn projected_ascent(auctions: &AuctionSet, v: f64, start: &[f64], upper: f64, cap: f64) -> Vec<f64> {
    let mut x = project_capped_box(start, upper, cap);
    let mut fx = auctions.utility_unchecked(&x, v);
    let mut steps = [1.0_f64, 1.0_f64];
    for _ in 0..MAX_ITERS {
        let grad = auctions.gradient_unchecked(&x, v);
        let gap: Vec<f64> = lose_all_but_one(auctions, &x).iter().zip(&x).map(|(p, b)| v * p - b).collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for (dir, step) in [&grad, &gap].into_iter().zip(steps.iter_mut()) {
            while *step > 1e-16 {
                let trial: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + *step * d).collect();
                let trial = project_capped_box(&trial, upper, cap);
                let ft = auctions.utility_unchecked(&trial, v);
                if ft > fx {
                    if best.as_ref().is_none_or(|(fb, _)| ft > *fb) {
                        best = Some((ft, trial));
                    }
                    *step = (*step * 2.0).min(MAX_STEP);
                    break;
                }
                *step *= 0.5;
            }
        }
        let Some((ft, trial)) = best else { break };
        let moved = x.iter().zip(&trial).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = trial;
        fx = ft;
        if moved < MIN_STEP {
            break;
        }
        // a direction that failed outright gets another chance next round
        for s in steps.iter_mut() {
            if *s <= 1e-16 {
                *s = 1.0;
            }
        }
    }
    x
}

/// Distance moved by one unit projected gradient step; zero exactly at
/// first-order stationary points of the capped box.
pub(crate) fn projected_gradient_residual(auctions: &AuctionSet, v: f64, bids: &[f64], upper: f64, cap: f64) -> f64 {
    let grad = auctions.gradient_unchecked(bids, v);
    let trial: Vec<f64> = bids.iter().zip(&grad).map(|(a, g)| a + g).collect();
    let projected = project_capped_box(&trial, upper, cap);
    bids.iter().zip(&projected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
