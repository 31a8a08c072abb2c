//! Expected utility of a global bid across a set of simultaneous auctions.

use serde::Serialize;

use crate::distributions::CompetitiveBidModel;
use crate::error::{check_range, Error, Result};

/// Bids slightly outside the support by this much are clamped instead of rejected.
const BID_SLACK: f64 = 1e-12;

/// One bid per auction.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct GlobalBid(pub Vec<f64>);

impl GlobalBid {
    pub fn new(bids: Vec<f64>) -> Result<Self> {
        if bids.is_empty() {
            return Err(Error::InvalidParameter("a global bid needs at least one auction".into()));
        }
        Ok(Self(bids))
    }

    pub fn uniform(m: usize, bid: f64) -> Self {
        Self(vec![bid; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of bids, the worst-case total payment.
    pub fn exposure(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// The competitive-bid laws of `m` simultaneous auctions.
#[derive(Debug, Clone)]
pub struct AuctionSet {
    models: Vec<CompetitiveBidModel>,
}

impl AuctionSet {
    pub fn new(models: Vec<CompetitiveBidModel>) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::InvalidParameter("auction set must be nonempty".into()))?;
        let v_max = first.v_max();
        if models.iter().any(|m| m.v_max() != v_max) {
            return Err(Error::InvalidParameter("all auctions must share v_max".into()));
        }
        Ok(Self { models })
    }

    /// `m` copies of one model.
    pub fn identical(model: CompetitiveBidModel, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("auction set must be nonempty".into()));
        }
        Ok(Self { models: vec![model; m] })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> &[CompetitiveBidModel] {
        &self.models
    }

    pub fn v_max(&self) -> f64 {
        self.models[0].v_max()
    }

    /// True when every auction has the same law.
    pub fn is_identical(&self) -> bool {
        self.models.iter().all(|m| m.same_law(&self.models[0]))
    }

    fn validate(&self, bids: &[f64]) -> Result<Vec<f64>> {
        if bids.len() != self.len() {
            return Err(Error::DimensionMismatch { bids: bids.len(), auctions: self.len() });
        }
        let v_max = self.v_max();
        bids.iter()
            .map(|&b| {
                check_range("bid", b, -BID_SLACK, v_max + BID_SLACK)?;
                Ok(b.clamp(0.0, v_max))
            })
            .collect()
    }

    fn validate_valuation(&self, v: f64) -> Result<()> {
        if v > 0.0 && v <= self.v_max() + BID_SLACK {
            Ok(())
        } else {
            Err(Error::Domain { what: "valuation", value: v, lo: 0.0, hi: self.v_max() })
        }
    }

    /// `Π (1 - G_i(b_i))`, the probability of losing every auction.
    pub(crate) fn lose_all(&self, bids: &[f64]) -> f64 {
        self.models.iter().zip(bids).map(|(m, &b)| 1.0 - m.cdf(b)).product()
    }

    pub(crate) fn utility_unchecked(&self, bids: &[f64], v: f64) -> f64 {
        let payments: f64 = self.models.iter().zip(bids).map(|(m, &b)| m.payment(b)).sum();
        v * (1.0 - self.lose_all(bids)) - payments
    }

    /// `∂U/∂b_i = g_i(b_i) [v Π_{j≠i} (1 - G_j(b_j)) - b_i]`.
    pub(crate) fn gradient_unchecked(&self, bids: &[f64], v: f64) -> Vec<f64> {
        let others = lose_all_but_one(self, bids);
        self.models
            .iter()
            .zip(bids)
            .zip(others)
            .map(|((m, &b), rest)| m.pdf(b) * (v * rest - b))
            .collect()
    }
}

/// `Π_{j≠i} (1 - G_j(b_j))` for every `i`, via prefix and suffix products
/// so that a certain win in one auction is handled exactly.
pub(crate) fn lose_all_but_one(auctions: &AuctionSet, bids: &[f64]) -> Vec<f64> {
    let lose: Vec<f64> = auctions.models.iter().zip(bids).map(|(m, &b)| 1.0 - m.cdf(b)).collect();
    let m = lose.len();
    let mut prefix = vec![1.0; m + 1];
    for i in 0..m {
        prefix[i + 1] = prefix[i] * lose[i];
    }
    let mut suffix = vec![1.0; m + 1];
    for i in (0..m).rev() {
        suffix[i] = suffix[i + 1] * lose[i];
    }
    (0..m).map(|i| prefix[i] * suffix[i + 1]).collect()
}

/// `v [1 - Π (1 - G_i(b_i))] - Σ EP_i(b_i)`.
pub fn expected_utility(bids: &GlobalBid, v: f64, auctions: &AuctionSet) -> Result<f64> {
    auctions.validate_valuation(v)?;
    let b = auctions.validate(bids.as_slice())?;
    Ok(auctions.utility_unchecked(&b, v))
}

/// Probability of winning at least one auction.
pub fn win_probability(bids: &GlobalBid, auctions: &AuctionSet) -> Result<f64> {
    let b = auctions.validate(bids.as_slice())?;
    Ok((1.0 - auctions.lose_all(&b)).clamp(0.0, 1.0))
}

/// Analytic gradient of [`expected_utility`] with respect to the bids.
pub fn utility_gradient(bids: &GlobalBid, v: f64, auctions: &AuctionSet) -> Result<Vec<f64>> {
    auctions.validate_valuation(v)?;
    let b = auctions.validate(bids.as_slice())?;
    Ok(auctions.gradient_unchecked(&b, v))
}

/// Utility of bidding `v` in a single auction: `v G(v) - EP(v)`.
pub fn local_utility(v: f64, model: &CompetitiveBidModel) -> f64 {
    v * model.cdf(v) - model.payment(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n1(m: usize) -> AuctionSet {
        AuctionSet::identical(CompetitiveBidModel::static_uniform(1).unwrap(), m).unwrap()
    }

    #[test]
    fn utility_examples() {
        let zero = GlobalBid::uniform(3, 0.0);
        let five = AuctionSet::identical(CompetitiveBidModel::static_uniform(5).unwrap(), 3).unwrap();
        assert_eq!(expected_utility(&zero, 0.7, &five).unwrap(), 0.0);
        let third = GlobalBid::uniform(2, 1.0 / 3.0);
        let u = expected_utility(&third, 0.5, &n1(2)).unwrap();
        assert!((u - 1.0 / 6.0).abs() < 1e-15);
        let single = GlobalBid::uniform(1, 0.5);
        assert!((expected_utility(&single, 0.5, &n1(1)).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn utility_errors() {
        let set = n1(2);
        assert!(matches!(
            expected_utility(&GlobalBid::uniform(3, 0.1), 0.5, &set),
            Err(Error::DimensionMismatch { bids: 3, auctions: 2 })
        ));
        assert!(matches!(
            expected_utility(&GlobalBid(vec![0.1, 1.2]), 0.5, &set),
            Err(Error::Domain { .. })
        ));
        assert!(expected_utility(&GlobalBid(vec![0.1, 0.2]), 0.0, &set).is_err());
        assert!(GlobalBid::new(vec![]).is_err());
        assert!(AuctionSet::new(vec![]).is_err());
    }

    #[test]
    fn win_probability_examples() {
        assert_eq!(win_probability(&GlobalBid::uniform(4, 0.0), &n1(4)).unwrap(), 0.0);
        assert!((win_probability(&GlobalBid::uniform(2, 0.5), &n1(2)).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(win_probability(&GlobalBid(vec![0.2, 1.0, 0.4]), &n1(3)).unwrap(), 1.0);
    }

    #[test]
    fn gradient_examples() {
        let set = n1(2);
        let g = utility_gradient(&GlobalBid::uniform(2, 1.0 / 3.0), 0.5, &set).unwrap();
        assert!(g.iter().all(|d| d.abs() < 1e-9));
        let g = utility_gradient(&GlobalBid::uniform(2, 0.2), 0.5, &set).unwrap();
        assert!(g.iter().all(|d| (d - 0.2).abs() < 1e-15));
        let g = utility_gradient(&GlobalBid::uniform(1, 0.6), 0.6, &n1(1)).unwrap();
        assert_eq!(g, vec![0.0]);
    }

    #[test]
    fn free_disposal_of_zero_bid_auction() {
        let model = CompetitiveBidModel::static_uniform(3).unwrap();
        let two = AuctionSet::identical(model.clone(), 2).unwrap();
        let three = AuctionSet::identical(model, 3).unwrap();
        let u2 = expected_utility(&GlobalBid(vec![0.4, 0.6]), 0.8, &two).unwrap();
        let u3 = expected_utility(&GlobalBid(vec![0.4, 0.6, 0.0]), 0.8, &three).unwrap();
        assert_eq!(u2, u3);
    }

    fn model_strategy() -> impl Strategy<Value = CompetitiveBidModel> {
        prop_oneof![
            (1u32..12).prop_map(|n| CompetitiveBidModel::static_uniform(n).unwrap()),
            (0.5f64..10.0).prop_map(|n| CompetitiveBidModel::dynamic_uniform(n).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn gradient_matches_central_differences(
            model in model_strategy(),
            bids in prop::collection::vec(0.01f64..0.99, 1..5),
            v in 0.05f64..1.0,
        ) {
            let set = AuctionSet::identical(model, bids.len()).unwrap();
            let analytic = set.gradient_unchecked(&bids, v);
            let h = 1e-5;
            for i in 0..bids.len() {
                let mut up = bids.clone();
                let mut down = bids.clone();
                up[i] += h;
                down[i] -= h;
                let fd = (set.utility_unchecked(&up, v) - set.utility_unchecked(&down, v)) / (2.0 * h);
                let err = (fd - analytic[i]).abs();
                prop_assert!(err < 1e-6 * analytic[i].abs() || err < 1e-9, "i={} fd={} an={}", i, fd, analytic[i]);
            }
        }

        #[test]
        fn utility_bounds_and_monotone_in_valuation(
            model in model_strategy(),
            bids in prop::collection::vec(0.0f64..1.0, 1..6),
            v in 0.01f64..0.98,
            dv in 0.0f64..0.02,
        ) {
            let set = AuctionSet::identical(model, bids.len()).unwrap();
            let b = GlobalBid(bids);
            let p = win_probability(&b, &set).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            let u = expected_utility(&b, v, &set).unwrap();
            prop_assert!(u <= v);
            let u2 = expected_utility(&b, v + dv, &set).unwrap();
            prop_assert!(u2 >= u);
        }
    }
}
