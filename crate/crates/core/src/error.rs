use thiserror::Error;

/// Errors raised by the distribution, utility and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("dimension mismatch: {bids} bids for {auctions} auctions")]
    DimensionMismatch { bids: usize, auctions: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("critical point of H is not unique ({sign_changes} sign changes of H' on the diagnostic grid)")]
    NonUniqueCriticalPoint { sign_changes: usize },
    #[error("infeasible problem: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::Domain { what, value, lo, hi })
    }
}
