//! Sweeps the valuation for n = 5 static local bidders and reports where the
//! optimal global bid splits from uniform into one high and m - 1 low bids.
//!
//!     cargo run --example bifurcation_sweep

use globalbid::solver_identical::{detect_bifurcation, sweep_valuations};
use globalbid::CompetitiveBidModel;

fn main() -> globalbid::Result<()> {
    let model = CompetitiveBidModel::static_uniform(5)?;
    for m in [1, 2, 4, 6, 10, 20] {
        let rows = sweep_valuations(m, &model, 99)?;
        match detect_bifurcation(&rows) {
            Some(v) => println!("m = {m:2}: bids split at v = {v:.4}"),
            None => println!("m = {m:2}: uniform bids on the whole grid"),
        }
        let top = rows.last().expect("nonempty sweep");
        println!(
            "        at v = 1: low {:.4}, high {:.4}, utility {:.4} ({:.2}x local)",
            top.result.low_bid(),
            top.result.high_bid(),
            top.result.utility,
            top.utility_ratio
        );
    }
    Ok(())
}
