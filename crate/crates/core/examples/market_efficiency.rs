//! Allocative efficiency of a market of m = 4 auctions with and without a
//! global bidder, for few and many local bidders.
//!
//!     cargo run --release --example market_efficiency

use globalbid::efficiency_sim::{run_experiment, LocalBidders, MarketConfig};

fn main() -> globalbid::Result<()> {
    for locals in [
        LocalBidders::Static { n: 2 },
        LocalBidders::Static { n: 10 },
        LocalBidders::Dynamic { mean_n: 2.0 },
    ] {
        for global in [false, true] {
            let r = run_experiment(&MarketConfig::new(4, locals, global, 2024)?)?;
            println!(
                "{:7} n = {:4.1} global {:5}: efficiency {:.4} [{:.4}, {:.4}]",
                locals.label(),
                locals.size(),
                global,
                r.mean_efficiency,
                r.ci_low,
                r.ci_high
            );
        }
    }
    Ok(())
}
