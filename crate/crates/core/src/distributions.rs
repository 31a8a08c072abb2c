//! Valuation laws of local bidders and the induced laws of the best
//! competitive bid in a single second-price auction.
//!
//! A [`ValuationDistribution`] describes `F`/`f` on `[0, v_max]`. A
//! [`CompetitiveBidModel`] turns it into `G`/`g`, the distribution of the
//! highest opposing bid, for a fixed number of local bidders (static), a
//! Poisson number of them (dynamic), a binomial participation model, or an
//! explicitly supplied `G`/`g` pair.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_range, Error, Result};
use crate::numeric::{adaptive_simpson, bisect};

/// A real function shared between threads.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Absolute tolerance used when no closed form for the expected payment exists.
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Recursion limit for adaptive Simpson.
pub const QUADRATURE_MAX_DEPTH: u32 = 60;
/// Absolute tolerance on the critical point of `H(b) = b (1 - G(b))`.
pub const CRITICAL_POINT_TOL: f64 = 1e-12;

const DIAGNOSTIC_GRID: usize = 1000;
const HAZARD_SLACK: f64 = 1e-9;

#[derive(Clone)]
enum Law {
    Uniform,
    Custom { cdf: RealFn, pdf: RealFn },
}

/// Distribution of a local bidder's valuation on `[0, v_max]`.
#[derive(Clone)]
pub struct ValuationDistribution {
    v_max: f64,
    law: Law,
}

impl ValuationDistribution {
    pub fn uniform(v_max: f64) -> Result<Self> {
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(Error::InvalidParameter(format!("v_max must be positive, got {v_max}")));
        }
        Ok(Self { v_max, law: Law::Uniform })
    }

    /// User supplied `F`/`f` pair. `F` must satisfy `F(0) = 0`, `F(v_max) = 1`.
    pub fn custom(v_max: f64, cdf: RealFn, pdf: RealFn) -> Result<Self> {
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(Error::InvalidParameter(format!("v_max must be positive, got {v_max}")));
        }
        let (f0, f1) = (cdf(0.0), cdf(v_max));
        if f0.abs() > 1e-12 || (f1 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "valuation cdf must run from 0 to 1, got F(0) = {f0}, F(v_max) = {f1}"
            )));
        }
        Ok(Self { v_max, law: Law::Custom { cdf, pdf } })
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.law, Law::Uniform)
    }

    /// `F(x)`, with `x` clamped to the support.
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.v_max);
        match &self.law {
            Law::Uniform => x / self.v_max,
            Law::Custom { cdf, .. } => cdf(x).clamp(0.0, 1.0),
        }
    }

    /// `f(x)`, with `x` clamped to the support.
    pub fn pdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.v_max);
        match &self.law {
            Law::Uniform => 1.0 / self.v_max,
            Law::Custom { pdf, .. } => pdf(x).max(0.0),
        }
    }

    fn same_law(&self, other: &Self) -> bool {
        self.v_max == other.v_max
            && match (&self.law, &other.law) {
                (Law::Uniform, Law::Uniform) => true,
                (Law::Custom { cdf: a, .. }, Law::Custom { cdf: b, .. }) => Arc::ptr_eq(a, b),
                _ => false,
            }
    }
}

impl Default for ValuationDistribution {
    fn default() -> Self {
        Self { v_max: 1.0, law: Law::Uniform }
    }
}

impl fmt::Debug for ValuationDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.law {
            Law::Uniform => write!(f, "Uniform[0, {}]", self.v_max),
            Law::Custom { .. } => write!(f, "Custom[0, {}]", self.v_max),
        }
    }
}

/// How the best competitive bid arises from the local bidders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// Exactly `n` local bidders: `G = F^n`.
    Static { n: u32 },
    /// Poisson number of local bidders with mean `mean_n`: `G = exp(mean_n (F - 1))`.
    Dynamic { mean_n: f64 },
    /// `total` potential bidders, each present with probability `p`: `G = (1 - p + pF)^total`.
    Binomial { total: u32, p: f64 },
    /// `G` and `g` supplied directly.
    Explicit,
}

/// Law `G`/`g` of the highest opposing bid in one auction.
#[derive(Clone)]
pub struct CompetitiveBidModel {
    kind: ModelKind,
    base: ValuationDistribution,
    explicit: Option<(RealFn, RealFn)>,
}

impl fmt::Debug for CompetitiveBidModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompetitiveBidModel")
            .field("kind", &self.kind)
            .field("base", &self.base)
            .finish()
    }
}

impl CompetitiveBidModel {
    pub fn static_bidders(base: ValuationDistribution, n: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("static model needs n >= 1".into()));
        }
        Ok(Self { kind: ModelKind::Static { n }, base, explicit: None })
    }

    pub fn dynamic(base: ValuationDistribution, mean_n: f64) -> Result<Self> {
        if !(mean_n.is_finite() && mean_n > 0.0) {
            return Err(Error::InvalidParameter(format!("dynamic model needs mean_n > 0, got {mean_n}")));
        }
        Ok(Self { kind: ModelKind::Dynamic { mean_n }, base, explicit: None })
    }

    pub fn binomial(base: ValuationDistribution, total: u32, p: f64) -> Result<Self> {
        if total < 1 {
            return Err(Error::InvalidParameter("binomial model needs N >= 1".into()));
        }
        check_range("p", p, 0.0, 1.0)?;
        Ok(Self { kind: ModelKind::Binomial { total, p }, base, explicit: None })
    }

    /// Explicit `G`/`g` on `[0, v_max]`; `G(v_max)` must be 1.
    pub fn explicit(v_max: f64, cdf: RealFn, pdf: RealFn) -> Result<Self> {
        let base = ValuationDistribution::uniform(v_max)?;
        let top = cdf(v_max);
        if (top - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("explicit G(v_max) must be 1, got {top}")));
        }
        Ok(Self { kind: ModelKind::Explicit, base, explicit: Some((cdf, pdf)) })
    }

    /// Static model over the uniform `[0, 1]` valuation law.
    pub fn static_uniform(n: u32) -> Result<Self> {
        Self::static_bidders(ValuationDistribution::default(), n)
    }

    /// Dynamic model over the uniform `[0, 1]` valuation law.
    pub fn dynamic_uniform(mean_n: f64) -> Result<Self> {
        Self::dynamic(ValuationDistribution::default(), mean_n)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn base(&self) -> &ValuationDistribution {
        &self.base
    }

    pub fn v_max(&self) -> f64 {
        self.base.v_max
    }

    /// True when both models describe the same `G`.
    pub fn same_law(&self, other: &Self) -> bool {
        match (&self.explicit, &other.explicit) {
            (Some((a, _)), Some((b, _))) => self.v_max() == other.v_max() && Arc::ptr_eq(a, b),
            (None, None) => self.kind == other.kind && self.base.same_law(&other.base),
            _ => false,
        }
    }

    /// `G(y)` with `y` clamped to `[0, v_max]`.
    pub fn cdf(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, self.v_max());
        match self.kind {
            ModelKind::Static { n } => self.base.cdf(y).powi(n as i32),
            ModelKind::Dynamic { mean_n } => (mean_n * (self.base.cdf(y) - 1.0)).exp(),
            ModelKind::Binomial { total, p } => (1.0 - p + p * self.base.cdf(y)).powi(total as i32),
            ModelKind::Explicit => {
                let (cdf, _) = self.explicit.as_ref().expect("explicit model carries G");
                cdf(y).clamp(0.0, 1.0)
            }
        }
    }

    /// `g(y)` with `y` clamped to `[0, v_max]`.
    pub fn pdf(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, self.v_max());
        match self.kind {
            ModelKind::Static { n } => {
                let f = self.base.pdf(y);
                if n == 1 {
                    f
                } else {
                    n as f64 * self.base.cdf(y).powi(n as i32 - 1) * f
                }
            }
            ModelKind::Dynamic { mean_n } => {
                mean_n * self.base.pdf(y) * (mean_n * (self.base.cdf(y) - 1.0)).exp()
            }
            ModelKind::Binomial { total, p } => {
                total as f64
                    * p
                    * self.base.pdf(y)
                    * (1.0 - p + p * self.base.cdf(y)).powi(total as i32 - 1)
            }
            ModelKind::Explicit => {
                let (_, pdf) = self.explicit.as_ref().expect("explicit model carries g");
                pdf(y).max(0.0)
            }
        }
    }

    pub fn checked_cdf(&self, y: f64) -> Result<f64> {
        check_range("bid", y, 0.0, self.v_max())?;
        Ok(self.cdf(y))
    }

    pub fn checked_pdf(&self, y: f64) -> Result<f64> {
        check_range("bid", y, 0.0, self.v_max())?;
        Ok(self.pdf(y))
    }

    /// Expected payment `EP(b) = ∫₀ᵇ y g(y) dy` of a single second-price
    /// auction when bidding `b`.
    pub fn expected_payment(&self, b: f64) -> Result<f64> {
        check_range("bid", b, 0.0, self.v_max())?;
        Ok(self.payment(b))
    }

    /// Unchecked expected payment; `b` is clamped to the support.
    pub(crate) fn payment(&self, b: f64) -> f64 {
        let b = b.clamp(0.0, self.v_max());
        if b == 0.0 {
            return 0.0;
        }
        let v_max = self.v_max();
        if self.base.is_uniform() {
            match self.kind {
                ModelKind::Static { n } => {
                    let n = n as f64;
                    return n / (n + 1.0) * b * (b / v_max).powf(n);
                }
                ModelKind::Dynamic { mean_n } => {
                    // by parts: b G(b) - ∫₀ᵇ G
                    let g_b = self.cdf(b);
                    let g_0 = (-mean_n).exp();
                    return (b * g_b - v_max / mean_n * (g_b - g_0)).max(0.0);
                }
                ModelKind::Binomial { total, p } => {
                    if p == 0.0 {
                        return 0.0;
                    }
                    let q = 1.0 - p;
                    let big_n = total as f64;
                    let upper = (q + p * b / v_max).powi(total as i32 + 1);
                    let lower = q.powi(total as i32 + 1);
                    return (b * self.cdf(b) - v_max / (p * (big_n + 1.0)) * (upper - lower)).max(0.0);
                }
                ModelKind::Explicit => {}
            }
        }
        adaptive_simpson(&|y: f64| y * self.pdf(y), 0.0, b, QUADRATURE_TOL, QUADRATURE_MAX_DEPTH)
    }

    /// `H(b) = b (1 - G(b))`.
    pub fn h(&self, b: f64) -> f64 {
        b * (1.0 - self.cdf(b))
    }

    /// `H'(b) = 1 - G(b) - b g(b)`.
    pub fn h_prime(&self, b: f64) -> f64 {
        1.0 - self.cdf(b) - b * self.pdf(b)
    }

    /// Hazard rate `g / (1 - G)`; infinite where `G = 1`.
    pub fn hazard(&self, x: f64) -> f64 {
        let tail = 1.0 - self.cdf(x);
        if tail <= 0.0 {
            f64::INFINITY
        } else {
            self.pdf(x) / tail
        }
    }

    /// The unique maximiser `b^f` of `H(b) = b (1 - G(b))` on `(0, v_max)`.
    pub fn critical_point(&self) -> Result<f64> {
        let v_max = self.v_max();
        let grid: Vec<f64> = (0..=DIAGNOSTIC_GRID)
            .map(|k| v_max * k as f64 / DIAGNOSTIC_GRID as f64)
            .collect();
        let signs: Vec<f64> = grid
            .iter()
            .map(|&x| self.h_prime(x))
            .filter(|d| *d != 0.0)
            .map(f64::signum)
            .collect();
        let sign_changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        if sign_changes > 1 {
            return Err(Error::NonUniqueCriticalPoint { sign_changes });
        }
        let first_negative = grid.iter().position(|&x| self.h_prime(x) < 0.0);
        let (lo, hi) = match first_negative {
            Some(0) | None => {
                // H' never negative on the grid; fall back to the best grid point's cell
                let k = grid
                    .iter()
                    .enumerate()
                    .max_by(|a, b| self.h(*a.1).total_cmp(&self.h(*b.1)))
                    .map(|(k, _)| k)
                    .unwrap_or(0);
                let lo = grid[k.saturating_sub(1)];
                let hi = grid[(k + 1).min(DIAGNOSTIC_GRID)];
                let (x, _) = crate::numeric::golden_max(|b| self.h(b), lo, hi, CRITICAL_POINT_TOL);
                return Ok(x);
            }
            Some(k) => (grid[k - 1], grid[k]),
        };
        Ok(bisect(|b| self.h_prime(b), lo, hi, CRITICAL_POINT_TOL * 1e-2).unwrap_or(0.5 * (lo + hi)))
    }

    /// Samples the hazard rate on `grid_size` interior points.
    pub fn hazard_profile(&self, grid_size: usize) -> Result<HazardProfile> {
        if grid_size < 2 {
            return Err(Error::InvalidParameter("hazard grid needs at least 2 points".into()));
        }
        let v_max = self.v_max();
        let samples: Vec<(f64, f64)> = (1..=grid_size)
            .map(|k| {
                let x = v_max * k as f64 / (grid_size + 1) as f64;
                (x, self.hazard(x))
            })
            .collect();
        let monotone_nondecreasing = samples.windows(2).all(|w| {
            let (a, b) = (w[0].1, w[1].1);
            b.is_infinite() || b >= a - HAZARD_SLACK * a.abs().max(1.0)
        });
        Ok(HazardProfile { samples, monotone_nondecreasing })
    }

    /// Cheap certificate that the two-value reduction applies.
    pub fn hazard_certified(&self) -> bool {
        self.hazard_profile(DIAGNOSTIC_GRID)
            .map(|p| p.monotone_nondecreasing)
            .unwrap_or(false)
    }
}

/// Sampled hazard rate `λ_G` with a monotonicity verdict.
#[derive(Debug, Clone)]
pub struct HazardProfile {
    /// `(x, λ(x))` pairs on an interior grid.
    pub samples: Vec<(f64, f64)>,
    pub monotone_nondecreasing: bool,
}

/// `F(y)^n`: highest of `n` independent valuations.
pub fn static_cdf(valuations: &ValuationDistribution, n: u32, y: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    check_range("bid", y, 0.0, valuations.v_max())?;
    Ok(valuations.cdf(y).powi(n as i32))
}

/// `n F(y)^{n-1} f(y)`.
pub fn static_pdf(valuations: &ValuationDistribution, n: u32, y: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    check_range("bid", y, 0.0, valuations.v_max())?;
    Ok(n as f64 * valuations.cdf(y).powi(n as i32 - 1) * valuations.pdf(y))
}

/// `exp(mean_n (F(y) - 1))`: Poisson number of local bidders.
pub fn dynamic_cdf(valuations: &ValuationDistribution, mean_n: f64, y: f64) -> Result<f64> {
    if !(mean_n.is_finite() && mean_n > 0.0) {
        return Err(Error::InvalidParameter(format!("mean_n must be positive, got {mean_n}")));
    }
    check_range("bid", y, 0.0, valuations.v_max())?;
    Ok((mean_n * (valuations.cdf(y) - 1.0)).exp())
}

/// `(1 - p + p F(y))^total`: each of `total` bidders participates with probability `p`.
pub fn binomial_cdf(valuations: &ValuationDistribution, total: u32, p: f64, y: f64) -> Result<f64> {
    if total < 1 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    check_range("p", p, 0.0, 1.0)?;
    check_range("bid", y, 0.0, valuations.v_max())?;
    Ok((1.0 - p + p * valuations.cdf(y)).powi(total as i32))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn uniform() -> ValuationDistribution {
        ValuationDistribution::default()
    }

    #[test]
    fn static_cdf_examples() {
        assert_eq!(static_cdf(&uniform(), 1, 0.5).unwrap(), 0.5);
        assert!((static_cdf(&uniform(), 5, 0.5).unwrap() - 0.03125).abs() < 1e-15);
        assert_eq!(static_cdf(&uniform(), 7, 1.0).unwrap(), 1.0);
        assert!((static_pdf(&uniform(), 5, 0.5).unwrap() - 5.0 * 0.0625).abs() < 1e-15);
        assert!(matches!(static_cdf(&uniform(), 3, 1.5), Err(Error::Domain { .. })));
        assert!(static_cdf(&uniform(), 3, -0.1).is_err());
    }

    #[test]
    fn dynamic_cdf_examples() {
        assert_eq!(dynamic_cdf(&uniform(), 5.0, 1.0).unwrap(), 1.0);
        assert!((dynamic_cdf(&uniform(), 5.0, 0.5).unwrap() - (-2.5f64).exp()).abs() < 1e-15);
        assert!((dynamic_cdf(&uniform(), 5.0, 0.5).unwrap() - 0.0820850).abs() < 1e-7);
        assert!((dynamic_cdf(&uniform(), 5.0, 0.0).unwrap() - 0.0067379).abs() < 1e-7);
        assert!(dynamic_cdf(&uniform(), 5.0, 1.01).is_err());
    }

    #[test]
    fn binomial_cdf_examples() {
        for y in [0.0, 0.2, 0.5, 0.9] {
            assert_eq!(
                binomial_cdf(&uniform(), 7, 1.0, y).unwrap(),
                static_cdf(&uniform(), 7, y).unwrap()
            );
        }
        assert!((binomial_cdf(&uniform(), 10, 0.5, 0.5).unwrap() - 0.75f64.powi(10)).abs() < 1e-15);
        assert!((binomial_cdf(&uniform(), 10, 0.5, 0.5).unwrap() - 0.0563135).abs() < 1e-7);
        let limit = binomial_cdf(&uniform(), 1000, 5.0 / 1000.0, 0.5).unwrap();
        assert!((limit - 0.0820850).abs() < 1e-3);
        assert!(binomial_cdf(&uniform(), 10, 1.5, 0.5).is_err());
    }

    #[test]
    fn expected_payment_closed_forms() {
        let m1 = CompetitiveBidModel::static_uniform(1).unwrap();
        let m5 = CompetitiveBidModel::static_uniform(5).unwrap();
        assert_eq!(m1.expected_payment(0.0).unwrap(), 0.0);
        assert!((m1.expected_payment(0.5).unwrap() - 0.125).abs() < 1e-15);
        assert!((m5.expected_payment(0.6).unwrap() - 5.0 * 0.6f64.powi(6) / 6.0).abs() < 1e-15);
        assert!((m5.expected_payment(0.6).unwrap() - 0.03888).abs() < 1e-12);
        assert!(m5.expected_payment(1.2).is_err());
    }

    #[test]
    fn closed_forms_agree_with_quadrature() {
        let models = [
            CompetitiveBidModel::static_uniform(5).unwrap(),
            CompetitiveBidModel::dynamic_uniform(5.0).unwrap(),
            CompetitiveBidModel::binomial(uniform(), 12, 0.3).unwrap(),
        ];
        for model in &models {
            for b in [0.05, 0.3, 0.77, 1.0] {
                let quad = adaptive_simpson(&|y: f64| y * model.pdf(y), 0.0, b, 1e-12, 60);
                assert!((model.payment(b) - quad).abs() < 1e-10, "{model:?} b={b}");
            }
        }
    }

    #[test]
    fn explicit_model_uses_quadrature() {
        let m = CompetitiveBidModel::explicit(1.0, Arc::new(|b: f64| b * b), Arc::new(|b: f64| 2.0 * b)).unwrap();
        // ∫ y 2y = 2b³/3
        assert!((m.expected_payment(0.6).unwrap() - 2.0 * 0.216 / 3.0).abs() < 1e-10);
        assert!(CompetitiveBidModel::explicit(1.0, Arc::new(|b: f64| 0.5 * b), Arc::new(|_| 0.5)).is_err());
    }

    #[test]
    fn uniform_cdf_matches_quadrature_of_density() {
        let f = ValuationDistribution::uniform(2.0).unwrap();
        let q = adaptive_simpson(&|x: f64| f.pdf(x), 0.3, 1.7, 1e-12, 60);
        assert!((f.cdf(1.7) - f.cdf(0.3) - q).abs() < 1e-8);
    }

    #[test]
    fn critical_point_examples() {
        let b1 = CompetitiveBidModel::static_uniform(1).unwrap().critical_point().unwrap();
        assert!((b1 - 0.5).abs() < 1e-12);
        let b5 = CompetitiveBidModel::static_uniform(5).unwrap().critical_point().unwrap();
        assert!((b5 - 6f64.powf(-0.2)).abs() < 1e-12);
        assert!((b5 - 0.698827).abs() < 1e-6);
        let b2 = CompetitiveBidModel::static_uniform(2).unwrap().critical_point().unwrap();
        assert!((b2 - 3f64.powf(-0.5)).abs() < 1e-12);
        assert!((b2 - 0.577350).abs() < 1e-6);
    }

    #[test]
    fn critical_point_with_vanishing_density_at_top() {
        // G = 1 - (1-b)^2, H' = (1-b)(1-3b) vanishes at 1/3 and at v_max
        let m = CompetitiveBidModel::explicit(
            1.0,
            Arc::new(|b: f64| 1.0 - (1.0 - b) * (1.0 - b)),
            Arc::new(|b: f64| 2.0 * (1.0 - b)),
        )
        .unwrap();
        assert!((m.critical_point().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    /// Two logistic steps make `H` bimodal while `G` stays increasing.
    pub(crate) fn two_step_model() -> CompetitiveBidModel {
        let raw = |b: f64| {
            let s = |x: f64| 1.0 / (1.0 + (-x).exp());
            0.2 * b + 0.4 * s((b - 0.3) / 0.03) + 0.4 * s((b - 0.8) / 0.03)
        };
        let (r0, r1) = (raw(0.0), raw(1.0));
        let cdf = move |b: f64| (raw(b) - r0) / (r1 - r0);
        let pdf = move |b: f64| {
            let s = |x: f64| 1.0 / (1.0 + (-x).exp());
            let ds = |x: f64| s(x) * (1.0 - s(x));
            (0.2 + 0.4 / 0.03 * ds((b - 0.3) / 0.03) + 0.4 / 0.03 * ds((b - 0.8) / 0.03)) / (r1 - r0)
        };
        CompetitiveBidModel::explicit(1.0, Arc::new(cdf), Arc::new(pdf)).unwrap()
    }

    #[test]
    fn critical_point_rejects_multiple_sign_changes() {
        let m = two_step_model();
        assert!(matches!(m.critical_point(), Err(Error::NonUniqueCriticalPoint { sign_changes: 3 })));
        assert!(!m.hazard_certified());
    }

    #[test]
    fn critical_point_closed_form_for_static_uniform() {
        for n in 1..=20u32 {
            let m = CompetitiveBidModel::static_uniform(n).unwrap();
            let bf = m.critical_point().unwrap();
            let expected = ((n + 1) as f64).powf(-1.0 / n as f64);
            assert!((bf - expected).abs() < 1e-9, "n={n}");
            assert!(m.h_prime(bf).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn hazard_profiles_are_monotone_for_standard_models() {
        let n1 = CompetitiveBidModel::static_uniform(1).unwrap();
        let p1 = n1.hazard_profile(100).unwrap();
        for (x, l) in &p1.samples {
            assert!((l - 1.0 / (1.0 - x)).abs() < 1e-9 * l);
        }
        assert!(p1.monotone_nondecreasing);
        assert!(CompetitiveBidModel::static_uniform(5).unwrap().hazard_profile(10_000).unwrap().monotone_nondecreasing);
        assert!(CompetitiveBidModel::dynamic_uniform(5.0).unwrap().hazard_profile(10_000).unwrap().monotone_nondecreasing);
        assert!(n1.hazard_profile(1).is_err());
    }

    #[test]
    fn decreasing_hazard_is_flagged() {
        // G(b) = sqrt(b) has hazard 1 / (2 sqrt(b) (1 - sqrt(b))), falling near 0
        let m = CompetitiveBidModel::explicit(
            1.0,
            Arc::new(|b: f64| b.sqrt()),
            Arc::new(|b: f64| if b > 0.0 { 0.5 / b.sqrt() } else { f64::MAX }),
        )
        .unwrap();
        assert!(!m.hazard_profile(1000).unwrap().monotone_nondecreasing);
        assert!(!m.hazard_certified());
    }

    #[test]
    fn model_invariants_on_grid() {
        let models = [
            CompetitiveBidModel::static_uniform(1).unwrap(),
            CompetitiveBidModel::static_uniform(5).unwrap(),
            CompetitiveBidModel::dynamic_uniform(5.0).unwrap(),
            CompetitiveBidModel::binomial(uniform(), 10, 0.5).unwrap(),
        ];
        for m in &models {
            assert!((m.cdf(1.0) - 1.0).abs() < 1e-15);
            let mut prev = m.cdf(0.0);
            for k in 1..=10_000 {
                let x = k as f64 / 10_000.0;
                let g = m.cdf(x);
                assert!(g >= prev);
                assert!(m.pdf(x) >= 0.0);
                prev = g;
            }
        }
        assert_eq!(models[1].cdf(0.0), 0.0);
        assert!((models[2].cdf(0.0) - (-5f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn static_density_integrates_to_mass_above_zero() {
        for n in [1, 3, 8] {
            let m = CompetitiveBidModel::static_uniform(n).unwrap();
            let total = adaptive_simpson(&|y| m.pdf(y), 0.0, 1.0, 1e-12, 60);
            assert!((total - (1.0 - m.cdf(0.0))).abs() < 1e-6);
        }
        let d = CompetitiveBidModel::dynamic_uniform(5.0).unwrap();
        let total = adaptive_simpson(&|y| d.pdf(y), 0.0, 1.0, 1e-12, 60);
        assert!((total - (1.0 - d.cdf(0.0))).abs() < 1e-6);
    }

    #[test]
    fn binomial_converges_to_dynamic() {
        let f = uniform();
        let n = 5.0;
        let total = 10_000u32;
        let max_err = (0..=1000)
            .map(|k| {
                let y = k as f64 / 1000.0;
                (binomial_cdf(&f, total, n / total as f64, y).unwrap() - dynamic_cdf(&f, n, y).unwrap()).abs()
            })
            .fold(0.0, f64::max);
        assert!(max_err < 1e-3, "max_err = {max_err}");
    }
}
