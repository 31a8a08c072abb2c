//! Backward induction over rounds of simultaneous auctions, including a
//! round whose number of auctions is uncertain and a schedule built from
//! overlapping auctions' closing times.
//!
//!     cargo run --example sequential_rounds

use globalbid::solver_sequential::{solve_sequential, Round, RoundSchedule};
use globalbid::{AuctionSet, CompetitiveBidModel};

fn main() -> globalbid::Result<()> {
    let single = CompetitiveBidModel::static_uniform(1)?;
    let plan = solve_sequential(&RoundSchedule::identical_rounds(&[1, 1], &single)?, 0.5)?;
    println!("two single-auction rounds at v = 0.5: U1 = {}", plan.utility);
    for (r, round) in plan.rounds.iter().enumerate() {
        println!("  round {}: bid {:?} at effective valuation {}", r + 1, round.outcomes[0].bids.0, round.effective_valuation);
    }

    let model = CompetitiveBidModel::static_uniform(4)?;
    let rounds = vec![
        Round::Known(AuctionSet::identical(model.clone(), 2)?),
        Round::Uncertain { probabilities: vec![0.2, 0.3, 0.5], model: model.clone() },
    ];
    for gamma in [1.0, 0.5] {
        let plan = solve_sequential(&RoundSchedule::new(rounds.clone(), gamma)?, 0.8)?;
        println!("continuation {gamma}: U1 = {:.6}, first-round bids {:.4?}", plan.utility, plan.rounds[0].outcomes[0].bids.0);
    }

    let overlapping = RoundSchedule::from_closing_times(&[10.0, 12.0, 10.0, 15.0], &model)?;
    let plan = solve_sequential(&overlapping, 0.8)?;
    println!("closing times 10, 12, 10, 15: {} rounds, U1 = {:.6}", plan.rounds.len(), plan.utility);
    Ok(())
}
