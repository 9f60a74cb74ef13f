//! Utility curves `u(x)`: the payoff a buyer gets from one good at price `x`.
//!
//! Every curve is continuous, decreasing (the oscillatory family only up to
//! small wiggles) and eventually reaches zero. Curves are defined on the whole
//! real line: below price 0 they continue linearly, which keeps `invert` total
//! for targets above `u(0)`. Where a target has several preimages, `invert`
//! returns the smallest one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};

/// Round-trip tolerance of [`UtilitySpec::invert`] in payoff units.
pub const EPS_INV: f64 = 1e-9;

/// Steep slope used to represent a hard budget as a continuous curve.
pub const HARD_BUDGET_SLOPE: f64 = 1e9;

/// Distance below `V` where the oscillatory formula hands over to a unit-slope line.
pub const OSCILLATORY_GUARD: f64 = 1e-6;

/// Smallest slope magnitude used for the extension of an oscillatory curve below 0.
const MIN_EXTENSION_SLOPE: f64 = 0.1;

const MAX_BRACKET_EXPANSIONS: usize = 60;
const MAX_BISECTION_STEPS: usize = 200;
const VALIDATION_SAMPLES: usize = 256;

/// Which trigonometric term drives an [`UtilitySpec::Oscillatory`] curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Sin,
    Cos,
}

/// A parametric utility curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilitySpec {
    /// `v - x`.
    Quasilinear { v: f64 },
    /// Linear interpolation between `(price, utility)` breakpoints. Outside the
    /// breakpoints the curve continues with `left_slope` / `right_slope`, which
    /// default to the slope of the adjacent segment.
    PiecewiseLinear {
        points: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        left_slope: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        right_slope: Option<f64>,
    },
    /// `v - x` up to the budget `b`, then falls with slope `k`.
    Budgeted {
        v: f64,
        b: f64,
        #[serde(default = "default_budget_slope")]
        k: f64,
    },
    /// `V - x - (V - x)/V * trig(V ln(V - x))`.
    Oscillatory {
        #[serde(rename = "V")]
        v: f64,
        variant: Phase,
    },
    /// `inner(x + price_shift) - payoff_shift`.
    Shifted {
        inner: Box<UtilitySpec>,
        price_shift: f64,
        payoff_shift: f64,
    },
    /// `inner(map(x))`.
    PriceMapped { inner: Box<UtilitySpec>, map: PriceMap },
}

fn default_budget_slope() -> f64 {
    HARD_BUDGET_SLOPE
}

/// A continuous, strictly increasing transformation of prices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriceMap {
    Identity,
    /// `x / divisor`.
    Scale {
        divisor: f64,
    },
    /// Increasing breakpoints, extended linearly with the end segment slopes.
    PiecewiseLinearIncreasing {
        points: Vec<[f64; 2]>,
    },
    /// `-seller^{-1}(x)`: the transfer that leaves a seller with payoff `x`.
    SellerInverse {
        seller: Box<UtilitySpec>,
    },
}

/// Why a curve or price map is rejected.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("parameter `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("curve is not strictly decreasing near price {at}")]
    NotDecreasing { at: f64 },
    #[error("curve never reaches a non-positive payoff")]
    NoRoot,
    #[error("oscillatory curve needs V >= 2, got {v}")]
    OscillatoryBound { v: f64 },
    #[error("piecewise curve needs at least {needed} breakpoints")]
    TooFewPoints { needed: usize },
    #[error("budget parameters are invalid: {0}")]
    InvalidBudget(&'static str),
    #[error("price map is invalid: {0}")]
    InvalidMap(&'static str),
    #[error("inner curve is invalid: {0}")]
    Inner(Box<SpecError>),
}

impl UtilitySpec {
    pub fn quasilinear(v: f64) -> Self {
        UtilitySpec::Quasilinear { v }
    }

    pub fn budgeted(v: f64, b: f64) -> Self {
        UtilitySpec::Budgeted {
            v,
            b,
            k: HARD_BUDGET_SLOPE,
        }
    }

    pub fn oscillatory(v: f64, variant: Phase) -> Self {
        UtilitySpec::Oscillatory { v, variant }
    }

    pub fn piecewise(points: Vec<[f64; 2]>) -> Self {
        UtilitySpec::PiecewiseLinear {
            points,
            left_slope: None,
            right_slope: None,
        }
    }

    /// Payoff at `price`.
    pub fn evaluate(&self, price: f64) -> f64 {
        match self {
            UtilitySpec::Quasilinear { v } => v - price,
            UtilitySpec::PiecewiseLinear {
                points,
                left_slope,
                right_slope,
            } => piecewise_eval(points, *left_slope, *right_slope, price),
            UtilitySpec::Budgeted { v, b, k } => {
                if price <= *b {
                    v - price
                } else {
                    (v - b) - k * (price - b)
                }
            }
            UtilitySpec::Oscillatory { v, variant } => Oscillator::new(*v, *variant).utility(price),
            UtilitySpec::Shifted {
                inner,
                price_shift,
                payoff_shift,
            } => inner.evaluate(price + price_shift) - payoff_shift,
            UtilitySpec::PriceMapped { inner, map } => inner.evaluate(map.apply(price)),
        }
    }

    /// The price at which the curve yields `target`.
    ///
    /// Closed form wherever the curve allows it; the oscillatory middle section
    /// uses bracketed bisection.
    pub fn invert(&self, target: f64) -> Result<f64> {
        if !target.is_finite() {
            return Err(Error::InversionFailure {
                target,
                reason: "target is not finite".into(),
            });
        }
        match self {
            UtilitySpec::Quasilinear { v } => Ok(v - target),
            UtilitySpec::PiecewiseLinear {
                points,
                left_slope,
                right_slope,
            } => Ok(piecewise_invert(points, *left_slope, *right_slope, target)),
            UtilitySpec::Budgeted { v, b, k } => {
                if target >= v - b {
                    Ok(v - target)
                } else {
                    Ok(b + (v - b - target) / k)
                }
            }
            UtilitySpec::Oscillatory { v, variant } => Oscillator::new(*v, *variant).invert(target),
            UtilitySpec::Shifted {
                inner,
                price_shift,
                payoff_shift,
            } => Ok(inner.invert(target + payoff_shift)? - price_shift),
            UtilitySpec::PriceMapped { inner, map } => map.inverse(inner.invert(target)?),
        }
    }

    /// Price at which the payoff drops to zero.
    pub fn root(&self) -> Result<f64> {
        self.invert(0.0)
    }

    /// Checks the curve invariants: finite parameters, strictly decreasing,
    /// reaches zero.
    pub fn validate(&self) -> std::result::Result<(), SpecError> {
        self.validate_parameters()?;
        if !self.contains_oscillatory() {
            self.validate_by_sampling()?;
        }
        Ok(())
    }

    fn validate_parameters(&self) -> std::result::Result<(), SpecError> {
        match self {
            UtilitySpec::Quasilinear { v } => finite(*v, "v"),
            UtilitySpec::PiecewiseLinear {
                points,
                left_slope,
                right_slope,
            } => {
                if points.is_empty() {
                    return Err(SpecError::TooFewPoints { needed: 1 });
                }
                if points.len() == 1 && (left_slope.is_none() || right_slope.is_none()) {
                    return Err(SpecError::TooFewPoints { needed: 2 });
                }
                for p in points {
                    finite(p[0], "points")?;
                    finite(p[1], "points")?;
                }
                for w in points.windows(2) {
                    if !(w[1][0] > w[0][0]) || !(w[1][1] < w[0][1]) {
                        return Err(SpecError::NotDecreasing { at: w[0][0] });
                    }
                }
                for (slope, name) in [(left_slope, "left_slope"), (right_slope, "right_slope")] {
                    if let Some(s) = slope {
                        finite(*s, name)?;
                        if *s >= 0.0 {
                            return Err(SpecError::NotDecreasing { at: points[0][0] });
                        }
                    }
                }
                Ok(())
            }
            UtilitySpec::Budgeted { v, b, k } => {
                finite(*v, "v")?;
                finite(*b, "b")?;
                finite(*k, "k")?;
                if *b < 0.0 {
                    return Err(SpecError::InvalidBudget("budget must be nonnegative"));
                }
                if *k <= 0.0 {
                    return Err(SpecError::InvalidBudget("slope beyond the budget must be positive"));
                }
                Ok(())
            }
            UtilitySpec::Oscillatory { v, .. } => {
                finite(*v, "V")?;
                if *v < 2.0 {
                    return Err(SpecError::OscillatoryBound { v: *v });
                }
                Ok(())
            }
            UtilitySpec::Shifted {
                inner,
                price_shift,
                payoff_shift,
            } => {
                finite(*price_shift, "price_shift")?;
                finite(*payoff_shift, "payoff_shift")?;
                inner.validate_parameters().map_err(|e| SpecError::Inner(Box::new(e)))
            }
            UtilitySpec::PriceMapped { inner, map } => {
                map.validate()?;
                inner.validate_parameters().map_err(|e| SpecError::Inner(Box::new(e)))
            }
        }
    }

    fn validate_by_sampling(&self) -> std::result::Result<(), SpecError> {
        let root = self.root().map_err(|_| SpecError::NoRoot)?;
        if !root.is_finite() || self.evaluate(root) > 1e-6 * (1.0 + root.abs()) {
            return Err(SpecError::NoRoot);
        }
        let lo = root.min(0.0) - 1.0;
        let hi = root.max(0.0) + 1.0;
        let h = (hi - lo) / VALIDATION_SAMPLES as f64;
        let mut prev = self.evaluate(lo);
        for k in 1..=VALIDATION_SAMPLES {
            let x = lo + h * k as f64;
            let y = self.evaluate(x);
            if !y.is_finite() || y >= prev {
                return Err(SpecError::NotDecreasing { at: x });
            }
            prev = y;
        }
        Ok(())
    }

    /// True when an oscillatory curve appears anywhere inside this spec.
    pub fn contains_oscillatory(&self) -> bool {
        match self {
            UtilitySpec::Oscillatory { .. } => true,
            UtilitySpec::Shifted { inner, .. } => inner.contains_oscillatory(),
            UtilitySpec::PriceMapped { inner, map } => {
                inner.contains_oscillatory()
                    || matches!(map, PriceMap::SellerInverse { seller } if seller.contains_oscillatory())
            }
            _ => false,
        }
    }

    /// Smallest oscillatory constant `V` inside this spec, if any.
    pub fn oscillatory_limit(&self) -> Option<f64> {
        match self {
            UtilitySpec::Oscillatory { v, .. } => Some(*v),
            UtilitySpec::Shifted { inner, .. } | UtilitySpec::PriceMapped { inner, .. } => inner.oscillatory_limit(),
            _ => None,
        }
    }
}

/// `evaluate(out, x) = evaluate(spec, x + price_bound) - payoff_bound`.
pub fn shift_for_bounds(spec: &UtilitySpec, price_bound: f64, payoff_bound: f64) -> UtilitySpec {
    UtilitySpec::Shifted {
        inner: Box::new(spec.clone()),
        price_shift: price_bound,
        payoff_shift: payoff_bound,
    }
}

/// `evaluate(out, x) = evaluate(spec, map(x))`.
pub fn apply_price_map(spec: &UtilitySpec, map: &PriceMap) -> UtilitySpec {
    UtilitySpec::PriceMapped {
        inner: Box::new(spec.clone()),
        map: map.clone(),
    }
}

/// Inverts a strictly decreasing function by bracket expansion and bisection.
///
/// The bracket starts at `[-1, 1]` and each side doubles outward at most 60
/// times. Independent of the closed forms in [`UtilitySpec::invert`].
pub fn invert_by_bisection(f: impl Fn(f64) -> f64, target: f64) -> Result<f64> {
    let mut lo = -1.0_f64;
    let mut hi = 1.0_f64;
    let mut expansions = 0;
    while f(lo) < target {
        lo = 2.0 * lo - 1.0;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(Error::InversionFailure {
                target,
                reason: "lower bracket expansion cap reached".into(),
            });
        }
    }
    expansions = 0;
    while f(hi) > target {
        hi = 2.0 * hi + 1.0;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(Error::InversionFailure {
                target,
                reason: "upper bracket expansion cap reached".into(),
            });
        }
    }
    Ok(bisect(&f, target, lo, hi))
}

/// Bisection on `[lo, hi]` with `f(lo) >= target >= f(hi)`.
fn bisect(f: &impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (f(lo), f(hi));
    if (flo - target).abs() <= (fhi - target).abs() {
        lo
    } else {
        hi
    }
}

impl PriceMap {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            PriceMap::Identity => x,
            PriceMap::Scale { divisor } => x / divisor,
            PriceMap::PiecewiseLinearIncreasing { points } => increasing_eval(points, x),
            // A validated seller curve always inverts; NaN flags a broken one downstream.
            PriceMap::SellerInverse { seller } => seller.invert(x).map(|t| -t).unwrap_or(f64::NAN),
        }
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        match self {
            PriceMap::Identity => Ok(y),
            PriceMap::Scale { divisor } => Ok(y * divisor),
            PriceMap::PiecewiseLinearIncreasing { points } => Ok(increasing_invert(points, y)),
            PriceMap::SellerInverse { seller } => Ok(seller.evaluate(-y)),
        }
    }

    pub fn validate(&self) -> std::result::Result<(), SpecError> {
        match self {
            PriceMap::Identity => Ok(()),
            PriceMap::Scale { divisor } => {
                finite(*divisor, "divisor")?;
                if *divisor <= 0.0 {
                    return Err(SpecError::InvalidMap("scale divisor must be positive"));
                }
                Ok(())
            }
            PriceMap::PiecewiseLinearIncreasing { points } => {
                if points.len() < 2 {
                    return Err(SpecError::TooFewPoints { needed: 2 });
                }
                for p in points {
                    finite(p[0], "points")?;
                    finite(p[1], "points")?;
                }
                if points.windows(2).any(|w| !(w[1][0] > w[0][0]) || !(w[1][1] > w[0][1])) {
                    return Err(SpecError::InvalidMap("breakpoints must be strictly increasing"));
                }
                if increasing_eval(points, 0.0) < 0.0 {
                    return Err(SpecError::InvalidMap("map must be nonnegative at price 0"));
                }
                Ok(())
            }
            PriceMap::SellerInverse { seller } => seller.validate().map_err(|e| SpecError::Inner(Box::new(e))),
        }
    }
}

fn finite(x: f64, name: &'static str) -> std::result::Result<(), SpecError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(SpecError::NonFinite(name))
    }
}

fn segment_slope(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[1] - a[1]) / (b[0] - a[0])
}

fn end_slopes(points: &[[f64; 2]], left: Option<f64>, right: Option<f64>) -> (f64, f64) {
    let n = points.len();
    let l = left.unwrap_or_else(|| segment_slope(points[0], points[1]));
    let r = right.unwrap_or_else(|| segment_slope(points[n - 2], points[n - 1]));
    (l, r)
}

fn piecewise_eval(points: &[[f64; 2]], left: Option<f64>, right: Option<f64>, x: f64) -> f64 {
    let (l, r) = end_slopes(points, left, right);
    let first = points[0];
    let last = points[points.len() - 1];
    if x <= first[0] {
        return first[1] + l * (x - first[0]);
    }
    if x >= last[0] {
        return last[1] + r * (x - last[0]);
    }
    let k = points.partition_point(|p| p[0] <= x);
    let (a, b) = (points[k - 1], points[k]);
    a[1] + segment_slope(a, b) * (x - a[0])
}

fn piecewise_invert(points: &[[f64; 2]], left: Option<f64>, right: Option<f64>, y: f64) -> f64 {
    let (l, r) = end_slopes(points, left, right);
    let first = points[0];
    let last = points[points.len() - 1];
    if y >= first[1] {
        return first[0] + (y - first[1]) / l;
    }
    if y <= last[1] {
        return last[0] + (y - last[1]) / r;
    }
    // utilities decrease along the breakpoints
    let k = points.partition_point(|p| p[1] > y);
    let (a, b) = (points[k - 1], points[k]);
    a[0] + (y - a[1]) / segment_slope(a, b)
}

fn increasing_eval(points: &[[f64; 2]], x: f64) -> f64 {
    let n = points.len();
    let first = points[0];
    let last = points[n - 1];
    if x <= first[0] {
        return first[1] + segment_slope(points[0], points[1]) * (x - first[0]);
    }
    if x >= last[0] {
        return last[1] + segment_slope(points[n - 2], points[n - 1]) * (x - last[0]);
    }
    let k = points.partition_point(|p| p[0] <= x);
    let (a, b) = (points[k - 1], points[k]);
    a[1] + segment_slope(a, b) * (x - a[0])
}

fn increasing_invert(points: &[[f64; 2]], y: f64) -> f64 {
    let n = points.len();
    let first = points[0];
    let last = points[n - 1];
    if y <= first[1] {
        return first[0] + (y - first[1]) / segment_slope(points[0], points[1]);
    }
    if y >= last[1] {
        return last[0] + (y - last[1]) / segment_slope(points[n - 2], points[n - 1]);
    }
    let k = points.partition_point(|p| p[1] <= y);
    let (a, b) = (points[k - 1], points[k]);
    a[0] + (y - a[1]) / segment_slope(a, b)
}

/// The oscillatory family `V - c(x)` with `c(x) = x + (V-x)/V * trig(V ln(V-x))`.
///
/// The formula holds on `[0, V - guard]`. Below 0 the curve continues with its
/// slope at 0 (floored at [`MIN_EXTENSION_SLOPE`]); beyond the guard it continues
/// with slope -1 so that the curve crosses zero just past `V`.
#[derive(Clone, Copy, Debug)]
pub struct Oscillator {
    v: f64,
    phase: Phase,
}

impl Oscillator {
    pub fn new(v: f64, phase: Phase) -> Self {
        Oscillator { v, phase }
    }

    fn guard_price(&self) -> f64 {
        self.v - OSCILLATORY_GUARD
    }

    /// `(V - x)/V * trig(V ln(V - x))`, the part of `c(x)` that oscillates.
    pub fn wobble(&self, x: f64) -> f64 {
        let s = self.v * (self.v - x).ln();
        let t = match self.phase {
            Phase::Sin => s.sin(),
            Phase::Cos => s.cos(),
        };
        (self.v - x) / self.v * t
    }

    /// `c(x)` on the formula's domain.
    pub fn cost(&self, x: f64) -> f64 {
        x + self.wobble(x)
    }

    /// `c'(x)` on the formula's domain.
    pub fn cost_slope(&self, x: f64) -> f64 {
        let s = self.v * (self.v - x).ln();
        match self.phase {
            Phase::Sin => 1.0 - s.sin() / self.v - s.cos(),
            Phase::Cos => 1.0 - s.cos() / self.v + s.sin(),
        }
    }

    fn extension_slope(&self) -> f64 {
        self.cost_slope(0.0).max(MIN_EXTENSION_SLOPE)
    }

    pub fn utility(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.v - self.cost(0.0) - self.extension_slope() * x
        } else if x > self.guard_price() {
            let g = self.guard_price();
            self.v - self.cost(g) - (x - g)
        } else {
            self.v - self.cost(x)
        }
    }

    pub fn invert(&self, target: f64) -> Result<f64> {
        let at_zero = self.utility(0.0);
        let g = self.guard_price();
        let at_guard = self.utility(g);
        if target >= at_zero {
            return Ok(-(target - at_zero) / self.extension_slope());
        }
        if target <= at_guard {
            return Ok(g + (at_guard - target));
        }
        // Smallest preimage: the first monotone piece whose right end drops to the target.
        let f = |x| self.utility(x);
        let mut a = 0.0;
        for b in self.turning_points().into_iter().chain([g]) {
            if f(b) <= target {
                return Ok(bisect(&f, target, a, b));
            }
            a = b;
        }
        Ok(g)
    }

    /// Prices in `(0, V - guard)` where `c'` vanishes, in increasing order.
    ///
    /// With `s = V ln(V - x)`, `c' = 0` reduces to `cos(s - theta) = 1/R`
    /// for `R = sqrt(1 + 1/V^2)`.
    pub fn turning_points(&self) -> Vec<f64> {
        let inv = 1.0 / self.v;
        let theta = match self.phase {
            Phase::Sin => inv.atan(),
            Phase::Cos => -(1.0f64).atan2(inv),
        };
        let a = (1.0 / (1.0 + inv * inv).sqrt()).acos();
        let s_hi = self.v * self.v.ln();
        let s_lo = self.v * OSCILLATORY_GUARD.ln();
        let tau = std::f64::consts::TAU;
        let mut xs = Vec::new();
        for offset in [theta - a, theta + a] {
            let mut k = ((s_lo - offset) / tau).ceil();
            loop {
                let s = offset + k * tau;
                if s >= s_hi {
                    break;
                }
                if s > s_lo {
                    xs.push(self.v - (s / self.v).exp());
                }
                k += 1.0;
            }
        }
        xs.retain(|x| *x > 0.0 && *x < self.guard_price());
        xs.sort_by(f64::total_cmp);
        xs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn quasilinear_evaluates_and_inverts() {
        let u = UtilitySpec::quasilinear(5.0);
        assert_eq!(u.evaluate(2.0), 3.0);
        assert_eq!(u.invert(2.0).unwrap(), 3.0);
        assert_eq!(u.invert(0.0).unwrap(), 5.0);
        assert!(u.validate().is_ok());
    }

    #[test]
    fn oscillatory_below_two_is_rejected() {
        let u = UtilitySpec::oscillatory(1.5, Phase::Sin);
        assert_eq!(u.validate(), Err(SpecError::OscillatoryBound { v: 1.5 }));
        assert!(UtilitySpec::oscillatory(2.0, Phase::Cos).validate().is_ok());
    }

    #[test]
    fn increasing_piecewise_segment_is_rejected() {
        let u = UtilitySpec::piecewise(vec![[0.0, 5.0], [1.0, 6.0], [2.0, 0.0]]);
        assert!(matches!(u.validate(), Err(SpecError::NotDecreasing { .. })));
    }

    #[test]
    fn piecewise_with_positive_extension_is_rejected() {
        let u = UtilitySpec::PiecewiseLinear {
            points: vec![[0.0, 5.0], [2.0, 1.0]],
            left_slope: None,
            right_slope: Some(0.5),
        };
        assert!(u.validate().is_err());
    }

    #[test]
    fn oscillatory_value_at_zero() {
        // sin(11 ln 11) evaluated independently
        let s = (11.0_f64 * 11.0_f64.ln()).sin();
        assert!(close(s, 0.947_11, 1e-5));
        let u = UtilitySpec::oscillatory(11.0, Phase::Sin);
        assert!(close(u.evaluate(0.0), 11.0 - s, 1e-12));
        assert!(close(u.evaluate(0.0), 10.0532, 1e-3));
        let x = u.invert(u.evaluate(0.0)).unwrap();
        assert!(close(x, 0.0, 1e-9));
    }

    #[test]
    fn budgeted_formula_beyond_budget() {
        let u = UtilitySpec::budgeted(5.0, 2.0);
        assert_eq!(u.evaluate(3.0), -999_999_997.0);
        assert_eq!(u.evaluate(1.0), 4.0);
        assert_eq!(u.invert(4.0).unwrap(), 1.0);
        assert!(close(u.invert(0.0).unwrap(), 2.0 + 3e-9, 1e-15));
    }

    #[test]
    fn shift_matches_smaller_value() {
        let u = shift_for_bounds(&UtilitySpec::quasilinear(5.0), 1.0, 1.0);
        for x in [-1.0, 0.0, 0.5, 2.0, 7.0] {
            assert!(close(u.evaluate(x), 3.0 - x, 1e-12));
        }
        let same = shift_for_bounds(&UtilitySpec::quasilinear(5.0), 0.0, 0.0);
        for x in [-1.0, 0.0, 0.5, 2.0, 7.0] {
            assert_eq!(same.evaluate(x), 5.0 - x);
        }
    }

    #[test]
    fn shifting_a_budget_moves_the_kink() {
        let b = UtilitySpec::Budgeted {
            v: 5.0,
            b: 2.0,
            k: 100.0,
        };
        let s = shift_for_bounds(&b, 1.0, 0.0);
        // unit slope just left of price 1, steep just right of it
        assert!(close(s.evaluate(0.9) - s.evaluate(1.0), 0.1, 1e-9));
        assert!(close(s.evaluate(1.0) - s.evaluate(1.1), 10.0, 1e-9));
    }

    #[test]
    fn price_map_scale_composes() {
        let u = apply_price_map(&UtilitySpec::quasilinear(10.0), &PriceMap::Scale { divisor: 0.2 });
        for x in [0.0, 0.5, 1.0, 2.0] {
            assert!(close(u.evaluate(x), 10.0 - x / 0.2, 1e-12));
        }
        let root = u.invert(0.0).unwrap();
        assert!(close(root, 10.0 * 0.2, 1e-12));
        let id = apply_price_map(&UtilitySpec::quasilinear(10.0), &PriceMap::Identity);
        for x in [-1.0, 0.0, 3.0, 9.0, 12.0] {
            assert_eq!(id.evaluate(x), 10.0 - x);
        }
    }

    #[test]
    fn piecewise_map_inverts() {
        let map = PriceMap::PiecewiseLinearIncreasing {
            points: vec![[0.0, 0.0], [1.0, 2.0], [3.0, 3.0]],
        };
        assert!(map.validate().is_ok());
        for x in [-1.0, 0.5, 1.0, 2.0, 5.0] {
            assert!(close(map.inverse(map.apply(x)).unwrap(), x, 1e-12));
        }
    }

    #[test]
    fn turning_points_zero_the_slope() {
        for (v, phase) in [(11.0, Phase::Sin), (11.0, Phase::Cos), (7.456976637929914, Phase::Sin)] {
            let osc = Oscillator::new(v, phase);
            let xs = osc.turning_points();
            assert!(!xs.is_empty());
            for x in &xs {
                assert!(osc.cost_slope(*x).abs() < 1e-9, "slope {} at {x}", osc.cost_slope(*x));
            }
            assert!(xs.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn oscillatory_invert_takes_smallest_preimage() {
        let osc = Oscillator::new(7.456976637929914, Phase::Sin);
        let n = 200_000;
        let g = 7.456976637929914 - OSCILLATORY_GUARD;
        for target in [2.322_054_857_483_024_6, 1.0, 4.0, 6.5] {
            let x = osc.invert(target).unwrap();
            assert!(close(osc.utility(x), target, 1e-9));
            // No grid point before `x` already sits below the target.
            let first = (0..=n)
                .map(|k| k as f64 * g / n as f64)
                .find(|y| osc.utility(*y) <= target)
                .unwrap();
            assert!(x <= first + g / n as f64, "target {target}: {x} vs scan {first}");
        }
    }

    #[test]
    fn oscillatory_is_total_past_the_guard() {
        let u = UtilitySpec::oscillatory(11.0, Phase::Cos);
        let root = u.root().unwrap();
        assert!(root > 11.0 - OSCILLATORY_GUARD && root < 11.0 + 1e-5);
        assert!(u.evaluate(12.0) < 0.0);
    }

    #[test]
    fn serde_tags_round_trip() {
        let spec = UtilitySpec::PriceMapped {
            inner: Box::new(UtilitySpec::oscillatory(11.0, Phase::Sin)),
            map: PriceMap::Scale { divisor: 0.5 },
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"V\":11.0"));
        let back: UtilitySpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<UtilitySpec>(r#"{"type":"cubic","v":1}"#).is_err());
        let b: UtilitySpec = serde_json::from_str(r#"{"type":"budgeted","v":5,"b":2}"#).unwrap();
        assert_eq!(b, UtilitySpec::budgeted(5.0, 2.0));
    }
}
