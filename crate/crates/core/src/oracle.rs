//! Exhaustive lattice search for the utility-maximising global bid.
//!
//! Slow and exact up to the lattice resolution. Used to validate the
//! solvers on small auction counts.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::utility::{AuctionSet, GlobalBid};

/// Largest auction count the oracle accepts.
pub const MAX_ORACLE_AUCTIONS: usize = 4;

/// Lattice utilities within this of each other count as tied; rounding
/// noise would otherwise break exact ties arbitrarily.
const TIE_EPS: f64 = 1e-14;

/// Lattice specification for [`grid_maximize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub resolution: f64,
    pub m: usize,
    /// Optional exposure cap `Σ b_i <= C`.
    pub constraint: Option<f64>,
}

impl GridSpec {
    pub fn new(resolution: f64, m: usize, constraint: Option<f64>) -> Result<Self> {
        let spec = Self { resolution, m, constraint };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::InvalidParameter(format!("resolution must be positive, got {}", self.resolution)));
        }
        if self.m == 0 || self.m > MAX_ORACLE_AUCTIONS {
            return Err(Error::InvalidParameter(format!(
                "oracle supports 1..={MAX_ORACLE_AUCTIONS} auctions, got {}",
                self.m
            )));
        }
        if let Some(c) = self.constraint {
            if c.is_nan() || c < 0.0 {
                return Err(Error::Infeasible(format!("exposure cap must be nonnegative, got {c}")));
            }
        }
        Ok(())
    }

    fn lattice(&self, v_max: f64) -> Vec<f64> {
        let steps = (v_max / self.resolution + 1e-9).floor() as usize;
        let mut pts: Vec<f64> = (0..=steps).map(|k| k as f64 * self.resolution).collect();
        if let Some(last) = pts.last_mut() {
            if (*last - v_max).abs() < 1e-9 * self.resolution.max(1.0) {
                *last = v_max;
            } else {
                pts.push(v_max);
            }
        }
        pts
    }
}

/// Best lattice point under `spec`; ties go to the lexicographically smallest bid vector.
pub fn grid_maximize(v: f64, auctions: &AuctionSet, spec: &GridSpec) -> Result<(GlobalBid, f64)> {
    search(v, auctions, spec, None)
}

/// Best lattice utility with auction `zero_index` pinned to a zero bid.
pub fn zero_coordinate_best(v: f64, auctions: &AuctionSet, spec: &GridSpec, zero_index: usize) -> Result<f64> {
    if zero_index >= spec.m {
        return Err(Error::InvalidParameter(format!("auction index {zero_index} out of range")));
    }
    search(v, auctions, spec, Some(zero_index)).map(|(_, u)| u)
}

fn search(v: f64, auctions: &AuctionSet, spec: &GridSpec, pinned: Option<usize>) -> Result<(GlobalBid, f64)> {
    spec.validate()?;
    if auctions.len() != spec.m {
        return Err(Error::DimensionMismatch { bids: spec.m, auctions: auctions.len() });
    }
    if !(v > 0.0 && v <= auctions.v_max() + 1e-12) {
        return Err(Error::Domain { what: "valuation", value: v, lo: 0.0, hi: auctions.v_max() });
    }
    let pts = spec.lattice(auctions.v_max());
    let k = pts.len();
    let m = spec.m;
    let lose: Vec<Vec<f64>> = auctions.models().iter().map(|g| pts.iter().map(|&x| 1.0 - g.cdf(x)).collect()).collect();
    let pay: Vec<Vec<f64>> = auctions.models().iter().map(|g| pts.iter().map(|&x| g.payment(x)).collect()).collect();
    let cap = spec.constraint.map(|c| c + spec.resolution * 1e-9).unwrap_or(f64::INFINITY);
    let first_range: Vec<usize> = if pinned == Some(0) { vec![0] } else { (0..k).collect() };

    let partial: Vec<Option<(f64, Vec<usize>)>> = first_range
        .par_iter()
        .map(|&k0| {
            let mut idx = vec![0usize; m];
            idx[0] = k0;
            if pts[k0] > cap {
                return None;
            }
            let mut best: Option<(f64, Vec<usize>)> = None;
            loop {
                let exposure: f64 = idx.iter().map(|&j| pts[j]).sum();
                if exposure <= cap {
                    let mut lose_all = 1.0;
                    let mut paid = 0.0;
                    for (i, &j) in idx.iter().enumerate() {
                        lose_all *= lose[i][j];
                        paid += pay[i][j];
                    }
                    let u = v * (1.0 - lose_all) - paid;
                    if best.as_ref().is_none_or(|(bu, _)| u > *bu + TIE_EPS) {
                        best = Some((u, idx.clone()));
                    }
                }
                // odometer over coordinates 1..m, skipping the pinned one
                let mut pos = m;
                loop {
                    if pos == 1 {
                        return best;
                    }
                    pos -= 1;
                    if pinned == Some(pos) {
                        continue;
                    }
                    if idx[pos] + 1 < k {
                        idx[pos] += 1;
                        break;
                    }
                    idx[pos] = 0;
                }
            }
        })
        .collect();

    let (u, idx) = partial
        .into_iter()
        .flatten()
        .fold(None::<(f64, Vec<usize>)>, |acc, cand| match acc {
            Some(a) if a.0 + TIE_EPS >= cand.0 => Some(a),
            _ => Some(cand),
        })
        .ok_or_else(|| Error::Infeasible("no lattice point satisfies the exposure cap".into()))?;
    Ok((GlobalBid(idx.iter().map(|&j| pts[j]).collect()), u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::CompetitiveBidModel;

    fn set(n: u32, m: usize) -> AuctionSet {
        AuctionSet::identical(CompetitiveBidModel::static_uniform(n).unwrap(), m).unwrap()
    }

    #[test]
    fn single_auction_truthful_on_lattice() {
        let (b, u) = grid_maximize(0.5, &set(1, 1), &GridSpec::new(1e-3, 1, None).unwrap()).unwrap();
        assert!((b.0[0] - 0.5).abs() < 1e-12);
        assert!((u - 0.125).abs() < 1e-12);
    }

    #[test]
    fn two_auctions_near_analytic_optimum() {
        let (b, u) = grid_maximize(0.5, &set(1, 2), &GridSpec::new(1e-3, 2, None).unwrap()).unwrap();
        assert!((b.0[0] - 0.333).abs() < 1e-9 && (b.0[1] - 0.333).abs() < 1e-9, "{b:?}");
        assert!((u - 1.0 / 6.0).abs() < 2e-6);
        assert!(u <= 1.0 / 6.0);
    }

    #[test]
    fn budget_collapses_to_single_bid() {
        let (b, _) = grid_maximize(0.5, &set(5, 2), &GridSpec::new(1e-2, 2, Some(0.5)).unwrap()).unwrap();
        let positive: Vec<f64> = b.0.iter().cloned().filter(|&x| x > 0.0).collect();
        assert_eq!(positive.len(), 1, "{b:?}");
        assert!((positive[0] - 0.5).abs() < 1e-12);
        // lexicographic tie rule picks the zero-first ordering
        assert_eq!(b.0[0], 0.0);
    }

    #[test]
    fn pinned_coordinate() {
        let spec = GridSpec::new(1e-3, 2, None).unwrap();
        let u = zero_coordinate_best(0.5, &set(1, 2), &spec, 1).unwrap();
        assert!((u - 0.125).abs() < 1e-12);
        let u1 = zero_coordinate_best(0.5, &set(1, 1), &GridSpec::new(1e-2, 1, None).unwrap(), 0).unwrap();
        assert_eq!(u1, 0.0);
        let spec3 = GridSpec::new(2e-2, 3, None).unwrap();
        let full = grid_maximize(0.7, &set(5, 3), &spec3).unwrap().1;
        for z in 0..3 {
            assert!(zero_coordinate_best(0.7, &set(5, 3), &spec3, z).unwrap() <= full);
        }
        assert!(zero_coordinate_best(0.7, &set(5, 3), &spec3, 3).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0.0, 2, None).is_err());
        assert!(GridSpec::new(0.1, 5, None).is_err());
        assert!(matches!(GridSpec::new(0.1, 2, Some(-1.0)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn loose_cap_equals_unconstrained() {
        let s = set(5, 2);
        let free = grid_maximize(0.8, &s, &GridSpec::new(1e-2, 2, None).unwrap()).unwrap();
        let capped = grid_maximize(0.8, &s, &GridSpec::new(1e-2, 2, Some(2.0)).unwrap()).unwrap();
        assert_eq!(free, capped);
    }

    #[test]
    fn deterministic_and_refines_monotonically() {
        let s = set(5, 2);
        let a = grid_maximize(0.9, &s, &GridSpec::new(1e-2, 2, None).unwrap()).unwrap();
        let b = grid_maximize(0.9, &s, &GridSpec::new(1e-2, 2, None).unwrap()).unwrap();
        assert_eq!(a, b);
        let fine = grid_maximize(0.9, &s, &GridSpec::new(5e-3, 2, None).unwrap()).unwrap();
        assert!(fine.1 >= a.1 && fine.1 - a.1 < 1e-4);
    }
}
