//! Utility-maximising bids for a global bidder in simultaneous second-price
//! auctions of perfect substitutes.
//!
//! The bidder wants one item and may bid in every auction at once. The
//! crate computes its optimal bid vector for identical auctions
//! ([`solver_identical`]), under a hard exposure budget ([`solver_budget`]),
//! for auctions with different competition ([`solver_nonidentical`]) and
//! over several rounds ([`solver_sequential`]). [`efficiency_sim`] measures
//! the allocative efficiency of markets with and without such a bidder, and
//! [`oracle`] provides brute-force ground truth for small instances.

mod ascent;
pub mod cli;
pub mod distributions;
pub mod efficiency_sim;
pub mod error;
pub mod numeric;
pub mod oracle;
pub mod solver_budget;
pub mod solver_identical;
pub mod solver_nonidentical;
pub mod solver_sequential;
pub mod utility;

pub use distributions::{CompetitiveBidModel, ModelKind, ValuationDistribution};
pub use error::{Error, Result};
pub use solver_identical::{solve_identical, BidStructure, SolverResult};
pub use utility::{expected_utility, AuctionSet, GlobalBid};
