//! Meet and join of equilibria, and the price path between the two extremes.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::market::{
    induced_payoffs, verify_equilibrium, Equilibrium, Market, Matching, PayoffVector, PriceVector, EPS_EQ,
};
use crate::solver::{solve_both, solve_lowest_bounded, supporting_matching, BoundEnvelope, SolverConfig};

enum Side {
    Meet,
    Join,
}

fn combine(a: &Equilibrium, b: &Equilibrium, side: Side) -> Result<Equilibrium> {
    if !a.same_market(b) {
        return Err(Error::MarketMismatch);
    }
    let pick_price: fn(f64, f64) -> f64 = match side {
        Side::Meet => f64::min,
        Side::Join => f64::max,
    };
    let pick_payoff: fn(f64, f64) -> f64 = match side {
        Side::Meet => f64::max,
        Side::Join => f64::min,
    };
    let prices = PriceVector(
        a.prices
            .iter()
            .zip(b.prices.iter())
            .map(|(x, y)| pick_price(*x, *y))
            .collect(),
    );
    let payoffs = PayoffVector(
        a.payoffs
            .iter()
            .zip(b.payoffs.iter())
            .map(|(x, y)| pick_payoff(*x, *y))
            .collect(),
    );
    let matching = Matching(
        (0..a.payoffs.len())
            .map(|i| {
                let (u, v) = (a.payoffs[i], b.payoffs[i]);
                let a_wins = match side {
                    Side::Meet => u >= v - EPS_EQ,
                    Side::Join => u < v - EPS_EQ,
                };
                if a_wins {
                    a.matching.good_of(i)
                } else {
                    b.matching.good_of(i)
                }
            })
            .collect(),
    );
    let mut eq = Equilibrium::new(a.market.clone(), prices, payoffs, matching);
    if verify_equilibrium(&eq, EPS_EQ).passed() {
        return Ok(eq);
    }
    // The case rule is only guaranteed for square markets.
    if let Ok(matching) = supporting_matching(&eq.market, &eq.prices, &eq.payoffs) {
        eq.matching = matching;
        if verify_equilibrium(&eq, EPS_EQ).passed() {
            return Ok(eq);
        }
    }
    // Wiggly curves can pair a higher price with a higher payoff; keep the prices.
    eq.payoffs = induced_payoffs(&eq.market, &eq.prices);
    eq.matching = supporting_matching(&eq.market, &eq.prices, &eq.payoffs)?;
    Ok(eq)
}

/// Component-wise lower price vector with the case-rule matching.
pub fn meet(a: &Equilibrium, b: &Equilibrium) -> Result<Equilibrium> {
    combine(a, b, Side::Meet)
}

/// Component-wise higher price vector with the case-rule matching.
pub fn join(a: &Equilibrium, b: &Equilibrium) -> Result<Equilibrium> {
    combine(a, b, Side::Join)
}

/// The lowest CE whose prices are at least `(1-t) p_low + t p_high`.
/// Non-square markets are padded with dummies internally; the result is on `market`.
pub fn interpolate_continuum(market: &Market, t: f64) -> Result<Equilibrium> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} is outside [0, 1]")));
    }
    let padded = market.pad_to_square();
    let (low, high) = solve_both(&padded, SolverConfig::default())?;
    let bounds = BoundEnvelope {
        price_lower: PriceVector(
            low.prices
                .iter()
                .zip(high.prices.iter())
                .map(|(l, h)| (1.0 - t) * l + t * h)
                .collect(),
        ),
        payoff_lower: PayoffVector::zeros(padded.num_buyers()),
    };
    let eq = solve_lowest_bounded(&padded, &bounds)?;
    Ok(strip_dummies(&eq, Arc::new(market.clone())))
}

/// Restricts an equilibrium of a padded market to the original agents.
pub fn strip_dummies(eq: &Equilibrium, original: Arc<Market>) -> Equilibrium {
    let n = original.num_buyers();
    let m = original.num_goods();
    let matching = Matching((0..n).map(|i| eq.matching.good_of(i).filter(|&j| j < m)).collect());
    Equilibrium::new(
        original,
        PriceVector(eq.prices[..m].to_vec()),
        PayoffVector(eq.payoffs[..n].to_vec()),
        matching,
    )
}
