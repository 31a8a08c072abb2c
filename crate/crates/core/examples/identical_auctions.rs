//! Optimal global bid in m identical auctions against n = 5 static local
//! bidders, compared with bidding truthfully in a single auction.
//!
//!     cargo run --example identical_auctions

use globalbid::utility::local_utility;
use globalbid::{solve_identical, CompetitiveBidModel};

fn main() -> globalbid::Result<()> {
    let model = CompetitiveBidModel::static_uniform(5)?;
    for v in [0.3, 0.7, 0.97] {
        println!("v = {v}");
        for m in [1, 2, 4, 8] {
            let r = solve_identical(m, v, &model)?;
            println!(
                "  m = {m}: {:9} low {:.4} high {:.4} utility {:.6} ({:.2}x local)",
                r.structure.label(),
                r.low_bid(),
                r.high_bid(),
                r.utility,
                r.utility / local_utility(v, &model)
            );
        }
    }
    Ok(())
}
