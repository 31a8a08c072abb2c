//! Auctions with different numbers of local bidders: the auction facing the
//! least competition gets the highest bid.
//!
//!     cargo run --example nonidentical_auctions

use globalbid::solver_nonidentical::{dominance, ordering_consistent, solve_nonidentical};
use globalbid::{AuctionSet, CompetitiveBidModel};

fn main() -> globalbid::Result<()> {
    let sizes = [6, 8, 10, 15];
    let set = AuctionSet::new(sizes.iter().map(|&n| CompetitiveBidModel::static_uniform(n)).collect::<globalbid::Result<_>>()?)?;
    let relation = dominance(&set, 1000)?;
    println!("local bidders per auction: {sizes:?}");
    println!("preference order: {:?}", relation.preference_order());
    for v in [0.3, 0.6, 0.9] {
        let s = solve_nonidentical(v, &set, 1000)?;
        println!(
            "v = {v}: bids {:.4?} utility {:.6} ordered {}",
            s.result.bids.0,
            s.result.utility,
            ordering_consistent(&s.result, &relation)
        );
    }
    Ok(())
}
