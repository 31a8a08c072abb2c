//! Compares the solvers with exhaustive lattice search on small instances.
//!
//!     cargo run --example oracle_check

use globalbid::oracle::{grid_maximize, zero_coordinate_best, GridSpec};
use globalbid::solver_budget::{solve_budget, BudgetProblem};
use globalbid::{solve_identical, AuctionSet, CompetitiveBidModel};

fn main() -> globalbid::Result<()> {
    let model = CompetitiveBidModel::static_uniform(5)?;
    let set = AuctionSet::identical(model.clone(), 3)?;
    let spec = GridSpec::new(1e-2, 3, None)?;
    println!("identical auctions, m = 3, n = 5");
    for v in [0.4, 0.7, 1.0] {
        let r = solve_identical(3, v, &model)?;
        let (bids, u) = grid_maximize(v, &set, &spec)?;
        let without_one = zero_coordinate_best(v, &set, &spec, 2)?;
        println!("  v = {v}: solver {:.6} lattice {:.6} at {:?}, one auction skipped {:.6}", r.utility, u, bids.0, without_one);
    }

    let capped = GridSpec::new(1e-2, 3, Some(0.8))?;
    println!("budget C = 0.8");
    for v in [0.6, 0.9] {
        let s = solve_budget(&BudgetProblem::new(0.8, v, 3, model.clone())?)?;
        let (bids, u) = grid_maximize(v, &set, &capped)?;
        println!("  v = {v}: solver {:.6} at {:.3?}, lattice {:.6} at {:?}", s.utility, s.bids.0, u, bids.0);
    }
    Ok(())
}
