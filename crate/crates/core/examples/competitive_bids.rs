//! The law of the highest opposing bid in one auction for static, dynamic
//! and binomial local bidders: win probability, expected payment and the
//! critical point of `H(b) = b (1 - G(b))`.
//!
//!     cargo run --example competitive_bids

use globalbid::{CompetitiveBidModel, ValuationDistribution};

fn main() -> globalbid::Result<()> {
    let uniform = ValuationDistribution::uniform(1.0)?;
    let models = [
        ("static n=5", CompetitiveBidModel::static_bidders(uniform.clone(), 5)?),
        ("dynamic mean 5", CompetitiveBidModel::dynamic(uniform.clone(), 5.0)?),
        ("binomial 10 x 0.5", CompetitiveBidModel::binomial(uniform, 10, 0.5)?),
    ];
    for (name, g) in &models {
        println!("{name}: critical point {:.6}, hazard certified {}", g.critical_point()?, g.hazard_certified());
        for b in [0.25, 0.5, 0.75] {
            println!("  b = {b:.2}: G = {:.5}, g = {:.5}, EP = {:.5}", g.cdf(b), g.pdf(b), g.expected_payment(b)?);
        }
    }
    Ok(())
}
