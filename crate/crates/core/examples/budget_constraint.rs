//! Optimal bids when the sum of all bids may not exceed a budget C.
//!
//! With n = 5 static bidders the whole budget goes into one auction once
//! v >= C. With n = 10 and three auctions the best bid sometimes leaves
//! part of the budget unused.
//!
//!     cargo run --example budget_constraint

use globalbid::solver_budget::{solve_budget, BudgetProblem};
use globalbid::CompetitiveBidModel;

fn show(label: &str, budget: f64, m: usize, model: &CompetitiveBidModel, vs: &[f64]) -> globalbid::Result<()> {
    println!("{label}, m = {m}, C = {budget}");
    for &v in vs {
        let s = solve_budget(&BudgetProblem::new(budget, v, m, model.clone())?)?;
        println!(
            "  v = {v:.2}: {:?} bids {:.4?} exposure {:.4} utility {:.6}",
            s.case, s.bids.0, s.exposure, s.utility
        );
    }
    Ok(())
}

fn main() -> globalbid::Result<()> {
    show("static n=5", 0.8, 4, &CompetitiveBidModel::static_uniform(5)?, &[0.5, 0.8, 1.0])?;
    show("static n=10", 1.5, 3, &CompetitiveBidModel::static_uniform(10)?, &[0.7, 0.76, 0.9, 1.0])?;
    show("dynamic mean 5", 0.5, 2, &CompetitiveBidModel::dynamic_uniform(5.0)?, &[0.5])?;
    Ok(())
}
