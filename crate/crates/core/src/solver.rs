//! Lowest and highest competitive equilibria by induction on sub-markets.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::market::{
    induced_payoff, induced_payoffs, induced_prices, is_tight, verify_equilibrium, Equilibrium, Market, Matching,
    PayoffVector, PriceVector, EPS_EQ,
};
use crate::matching::{assignment_from_owners, covering_matching, Uncovered};
use crate::utility::shift_for_bounds;

/// Default cap on `|I| + |J|` for the exact solver.
pub const DEFAULT_MAX_AGENTS: usize = 16;

/// Markets above this size trigger a cost warning.
const WARN_AGENTS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub max_agents: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_agents: DEFAULT_MAX_AGENTS,
        }
    }
}

/// Identifies a sub-market by the bitmasks of its remaining buyers and goods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SubmarketKey {
    pub buyers: u64,
    pub goods: u64,
}

impl SubmarketKey {
    pub fn full(market: &Market) -> Self {
        SubmarketKey {
            buyers: full_mask(market.num_buyers()),
            goods: full_mask(market.num_goods()),
        }
    }

    pub fn without_buyer(self, i: usize) -> Self {
        SubmarketKey {
            buyers: self.buyers & !(1 << i),
            ..self
        }
    }

    pub fn without_good(self, j: usize) -> Self {
        SubmarketKey {
            goods: self.goods & !(1 << j),
            ..self
        }
    }
}

fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn members(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |k| mask & (1 << k) != 0)
}

/// Memoised solver for one market. Both extremes share the memo tables.
pub struct Solver {
    market: Arc<Market>,
    lowest: HashMap<SubmarketKey, Vec<f64>>,
    highest: HashMap<SubmarketKey, Vec<f64>>,
}

impl Solver {
    pub fn new(market: Arc<Market>, config: SolverConfig) -> Result<Self> {
        let size = market.num_buyers() + market.num_goods();
        let limit = config.max_agents.min(63);
        if size > limit {
            return Err(Error::SizeLimit {
                what: "buyers plus goods",
                actual: size,
                limit,
            });
        }
        if size > WARN_AGENTS {
            log::warn!("exact solve on {size} agents visits up to 2^{size} sub-markets");
        }
        Ok(Solver {
            market,
            lowest: HashMap::new(),
            highest: HashMap::new(),
        })
    }

    pub fn market(&self) -> &Arc<Market> {
        &self.market
    }

    /// Number of memoised sub-market results.
    pub fn states(&self) -> usize {
        self.lowest.len() + self.highest.len()
    }

    /// Payoffs of the lowest CE of a sub-market, indexed by full buyer index.
    pub fn lowest_payoffs(&mut self, key: SubmarketKey) -> Result<Vec<f64>> {
        if let Some(v) = self.lowest.get(&key) {
            return Ok(v.clone());
        }
        let mut payoffs = vec![0.0; self.market.num_buyers()];
        if key.goods != 0 {
            for i in members(key.buyers) {
                let prices = self.highest_prices(key.without_buyer(i))?;
                payoffs[i] = members(key.goods)
                    .map(|j| self.market.utility(i, j, prices[j]))
                    .fold(0.0, f64::max);
            }
        }
        self.lowest.insert(key, payoffs.clone());
        Ok(payoffs)
    }

    /// Prices of the highest CE of a sub-market, indexed by full good index.
    pub fn highest_prices(&mut self, key: SubmarketKey) -> Result<Vec<f64>> {
        if let Some(v) = self.highest.get(&key) {
            return Ok(v.clone());
        }
        let mut prices = vec![0.0; self.market.num_goods()];
        if key.buyers != 0 {
            for j in members(key.goods) {
                let payoffs = self.lowest_payoffs(key.without_good(j))?;
                let mut best = 0.0_f64;
                for i in members(key.buyers) {
                    best = best.max(self.market.inverse(i, j, payoffs[i])?);
                }
                prices[j] = best;
            }
        }
        self.highest.insert(key, prices.clone());
        Ok(prices)
    }

    /// Lowest CE: payoffs by induction, prices induced from them.
    pub fn solve_lowest(&mut self) -> Result<Equilibrium> {
        let payoffs = PayoffVector(self.lowest_payoffs(SubmarketKey::full(&self.market))?);
        let prices = induced_prices(&self.market, &payoffs)?;
        let matching = supporting_matching(&self.market, &prices, &payoffs)?;
        Ok(Equilibrium::new(self.market.clone(), prices, payoffs, matching))
    }

    /// Highest CE: prices by induction, payoffs induced from them.
    pub fn solve_highest(&mut self) -> Result<Equilibrium> {
        let prices = PriceVector(self.highest_prices(SubmarketKey::full(&self.market))?);
        let payoffs = induced_payoffs(&self.market, &prices);
        let matching = supporting_matching(&self.market, &prices, &payoffs)?;
        Ok(Equilibrium::new(self.market.clone(), prices, payoffs, matching))
    }
}

/// Lowest competitive equilibrium under the default size cap.
pub fn solve_lowest(market: &Market) -> Result<Equilibrium> {
    Solver::new(Arc::new(market.clone()), SolverConfig::default())?.solve_lowest()
}

/// Highest competitive equilibrium under the default size cap.
pub fn solve_highest(market: &Market) -> Result<Equilibrium> {
    Solver::new(Arc::new(market.clone()), SolverConfig::default())?.solve_highest()
}

/// Both extremes from one shared memo table.
pub fn solve_both(market: &Market, config: SolverConfig) -> Result<(Equilibrium, Equilibrium)> {
    let mut solver = Solver::new(Arc::new(market.clone()), config)?;
    Ok((solver.solve_lowest()?, solver.solve_highest()?))
}

pub(crate) fn tight_adjacency(market: &Market, prices: &[f64], payoffs: &[f64], tol: f64) -> Vec<Vec<usize>> {
    (0..market.num_buyers())
        .map(|i| {
            (0..market.num_goods())
                .filter(|&j| is_tight(market, prices, payoffs, i, j, tol))
                .collect()
        })
        .collect()
}

/// A matching on the tight graph covering every positive-payoff buyer and positive-price good.
pub fn supporting_matching(market: &Market, prices: &PriceVector, payoffs: &PayoffVector) -> Result<Matching> {
    let n = market.num_buyers();
    let m = market.num_goods();
    if prices.len() != m || payoffs.len() != n {
        return Err(Error::InvalidArgument("price/payoff vector length mismatch".into()));
    }
    let adj = tight_adjacency(market, prices, payoffs, EPS_EQ);
    let required_buyers: Vec<bool> = payoffs.iter().map(|&u| u > EPS_EQ).collect();
    let required_goods: Vec<bool> = prices.iter().map(|&p| p > EPS_EQ).collect();
    match covering_matching(&adj, &required_buyers, &required_goods) {
        Ok(owner) => Ok(Matching(assignment_from_owners(&owner, n))),
        Err(Uncovered::Buyer(i)) => Err(Error::MatchingFailure(format!(
            "buyer {} has positive payoff but no tight good is left",
            market.buyers()[i]
        ))),
        Err(Uncovered::Good(j)) => Err(Error::MatchingFailure(format!(
            "good {} has positive price but cannot be matched",
            market.goods()[j]
        ))),
    }
}

/// Node of an alternating path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathNode {
    Good(usize),
    Buyer(usize),
}

/// Critical alternating path from a good in a highest CE: alternates matching and tight
/// non-matching edges and ends at a zero-payoff buyer or an unmatched good.
pub fn critical_alternating_path(eq: &Equilibrium, start_good: usize) -> Result<Vec<PathNode>> {
    let market = &eq.market;
    let m = market.num_goods();
    let n = market.num_buyers();
    if start_good >= m {
        return Err(Error::InvalidArgument(format!("good index {start_good} out of range")));
    }
    let owners = eq.matching.owners(m);
    let Some(first) = owners[start_good] else {
        return Ok(vec![PathNode::Good(start_good)]);
    };
    if eq.payoffs[first] <= EPS_EQ {
        return Ok(vec![PathNode::Good(start_good), PathNode::Buyer(first)]);
    }

    let mut good_parent: Vec<Option<usize>> = vec![None; m];
    let mut in_t = vec![false; m];
    let mut in_s = vec![false; n];
    in_t[start_good] = true;
    in_s[first] = true;
    let mut frontier = vec![first];
    let mut iterations = 0;
    while !frontier.is_empty() {
        iterations += 1;
        let mut next = Vec::new();
        for &i in &frontier {
            for j in 0..m {
                if in_t[j]
                    || eq.matching.good_of(i) == Some(j)
                    || !is_tight(market, &eq.prices, &eq.payoffs, i, j, EPS_EQ)
                {
                    continue;
                }
                in_t[j] = true;
                good_parent[j] = Some(i);
                match owners[j] {
                    None => return Ok(rebuild_from_good(start_good, j, None, &good_parent, &owners)),
                    Some(k) if eq.payoffs[k] <= EPS_EQ => {
                        return Ok(rebuild_from_good(start_good, j, Some(k), &good_parent, &owners))
                    }
                    Some(k) => {
                        if !in_s[k] {
                            in_s[k] = true;
                            next.push(k);
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    log::debug!("alternating search exhausted after {iterations} rounds");
    Err(Error::PathNotFound(format!("good {}", market.goods()[start_good])))
}

fn rebuild_from_good(
    start: usize,
    end_good: usize,
    end_buyer: Option<usize>,
    good_parent: &[Option<usize>],
    owners: &[Option<usize>],
) -> Vec<PathNode> {
    let mut rev = Vec::new();
    if let Some(k) = end_buyer {
        rev.push(PathNode::Buyer(k));
    }
    let mut j = end_good;
    loop {
        rev.push(PathNode::Good(j));
        if j == start {
            break;
        }
        let i = good_parent[j].expect("good on path has a parent");
        rev.push(PathNode::Buyer(i));
        j = owners
            .iter()
            .position(|o| *o == Some(i))
            .expect("interior buyer is matched");
    }
    rev.reverse();
    rev
}

/// Buyer-start form for a lowest CE: ends at an unmatched buyer or a zero-price good.
pub fn critical_alternating_path_from_buyer(eq: &Equilibrium, start_buyer: usize) -> Result<Vec<PathNode>> {
    let market = &eq.market;
    let m = market.num_goods();
    let n = market.num_buyers();
    if start_buyer >= n {
        return Err(Error::InvalidArgument(format!(
            "buyer index {start_buyer} out of range"
        )));
    }
    let owners = eq.matching.owners(m);
    let Some(first) = eq.matching.good_of(start_buyer) else {
        return Ok(vec![PathNode::Buyer(start_buyer)]);
    };
    if eq.prices[first] <= EPS_EQ {
        return Ok(vec![PathNode::Buyer(start_buyer), PathNode::Good(first)]);
    }

    let mut buyer_parent: Vec<Option<usize>> = vec![None; n];
    let mut in_s = vec![false; n];
    let mut in_t = vec![false; m];
    in_s[start_buyer] = true;
    in_t[first] = true;
    let mut frontier = vec![first];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &j in &frontier {
            for i in 0..n {
                if in_s[i] || owners[j] == Some(i) || !is_tight(market, &eq.prices, &eq.payoffs, i, j, EPS_EQ) {
                    continue;
                }
                in_s[i] = true;
                buyer_parent[i] = Some(j);
                let end = match eq.matching.good_of(i) {
                    None => Some(None),
                    Some(g) if eq.prices[g] <= EPS_EQ => Some(Some(g)),
                    Some(g) => {
                        if !in_t[g] {
                            in_t[g] = true;
                            next.push(g);
                        }
                        None
                    }
                };
                if let Some(end_good) = end {
                    let mut rev = Vec::new();
                    if let Some(g) = end_good {
                        rev.push(PathNode::Good(g));
                    }
                    let mut b = i;
                    loop {
                        rev.push(PathNode::Buyer(b));
                        if b == start_buyer {
                            break;
                        }
                        let g = buyer_parent[b].expect("buyer on path has a parent");
                        rev.push(PathNode::Good(g));
                        b = owners[g].expect("interior good is matched");
                    }
                    rev.reverse();
                    return Ok(rev);
                }
            }
        }
        frontier = next;
    }
    Err(Error::PathNotFound(format!("buyer {}", market.buyers()[start_buyer])))
}

/// Re-inserts buyer `buyer` into the highest CE of the market without it, keeping prices.
pub fn insert_buyer(eq_minus_i: &Equilibrium, market: Arc<Market>, buyer: usize) -> Result<Equilibrium> {
    let n = market.num_buyers();
    let m = market.num_goods();
    let sub = &eq_minus_i.market;
    if buyer >= n || sub.num_buyers() + 1 != n || sub.num_goods() != m {
        return Err(Error::MarketMismatch);
    }
    let lift = |k: usize| if k < buyer { k } else { k + 1 };
    let prices = eq_minus_i.prices.clone();
    let mut payoffs = vec![0.0; n];
    let mut matching = vec![None; n];
    for k in 0..sub.num_buyers() {
        payoffs[lift(k)] = eq_minus_i.payoffs[k];
        matching[lift(k)] = eq_minus_i.matching.good_of(k);
    }
    let u = induced_payoff(&market, &prices, buyer);
    payoffs[buyer] = u;

    if u > EPS_EQ {
        let best = (0..m)
            .find(|&j| (market.utility(buyer, j, prices[j]) - u).abs() <= EPS_EQ)
            .expect("induced payoff is attained by some good");
        let path = critical_alternating_path(eq_minus_i, best)?;
        matching[buyer] = Some(best);
        // Path: Good(j0), Buyer(b1), Good(j1), Buyer(b2), ... Each b_k moves to j_k.
        let mut k = 1;
        while k < path.len() {
            let PathNode::Buyer(b) = path[k] else {
                unreachable!("path alternates")
            };
            let b = lift(b);
            matching[b] = match path.get(k + 1) {
                Some(PathNode::Good(g)) => Some(*g),
                _ => None,
            };
            k += 2;
        }
    }
    Ok(Equilibrium::new(
        market,
        prices,
        PayoffVector(payoffs),
        Matching(matching),
    ))
}

/// Lower bounds on prices and payoffs for a bounded CE.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundEnvelope {
    pub price_lower: PriceVector,
    pub payoff_lower: PayoffVector,
}

impl BoundEnvelope {
    pub fn zero(market: &Market) -> Self {
        BoundEnvelope {
            price_lower: PriceVector::zeros(market.num_goods()),
            payoff_lower: PayoffVector::zeros(market.num_buyers()),
        }
    }
}

/// Lowest CE with `p >= price_lower` and `u >= payoff_lower`, or `Infeasible`.
pub fn solve_lowest_bounded(market: &Market, bounds: &BoundEnvelope) -> Result<Equilibrium> {
    let n = market.num_buyers();
    let m = market.num_goods();
    if bounds.price_lower.len() != m || bounds.payoff_lower.len() != n {
        return Err(Error::InvalidArgument("bound vectors do not match the market".into()));
    }
    if bounds
        .price_lower
        .iter()
        .chain(bounds.payoff_lower.iter())
        .any(|x| !(*x >= 0.0))
    {
        return Err(Error::InvalidArgument("bounds must be nonnegative".into()));
    }
    let shifted = market.map_utilities(|i, j, s| shift_for_bounds(s, bounds.price_lower[j], bounds.payoff_lower[i]))?;
    let mut solver = Solver::new(Arc::new(shifted), SolverConfig::default())?;
    let low = solver.lowest_payoffs(SubmarketKey::full(market))?;
    let shifted_prices = induced_prices(solver.market(), &PayoffVector(low.clone()))?;

    let prices = PriceVector(
        shifted_prices
            .iter()
            .zip(bounds.price_lower.iter())
            .map(|(p, b)| p + b)
            .collect(),
    );
    let payoffs = PayoffVector(low.iter().zip(bounds.payoff_lower.iter()).map(|(u, b)| u + b).collect());
    let market = Arc::new(market.clone());
    let matching = supporting_matching(&market, &prices, &payoffs).map_err(|_| Error::Infeasible)?;
    let eq = Equilibrium::new(market, prices, payoffs, matching);
    if verify_equilibrium(&eq, EPS_EQ).passed() {
        Ok(eq)
    } else {
        Err(Error::Infeasible)
    }
}

/// Pads with dummy agents whose curves are `-x`.
pub fn pad_to_square(market: &Market) -> Market {
    market.pad_to_square()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::tight_graph;
    use crate::utility::UtilitySpec;

    fn q(values: &[Vec<f64>]) -> Market {
        Market::quasilinear(values).unwrap()
    }

    fn check(eq: &Equilibrium) {
        let v = verify_equilibrium(eq, EPS_EQ);
        assert!(v.passed(), "{:?}", v.violations);
    }

    #[test]
    fn lowest_examples() {
        let eq = solve_lowest(&q(&[vec![5.0]])).unwrap();
        assert_eq!((eq.prices.0.clone(), eq.payoffs.0.clone()), (vec![0.0], vec![5.0]));

        let eq = solve_lowest(&q(&[vec![5.0], vec![3.0]])).unwrap();
        assert_eq!(eq.prices.0, vec![3.0]);
        assert_eq!(eq.payoffs.0, vec![2.0, 0.0]);
        assert_eq!(eq.matching.0, vec![Some(0), None]);

        let eq = solve_lowest(&q(&[vec![3.0, 1.0], vec![2.0, 2.0]])).unwrap();
        assert_eq!(eq.prices.0, vec![0.0, 0.0]);
        assert_eq!(eq.payoffs.0, vec![3.0, 2.0]);
        assert_eq!(eq.matching.0, vec![Some(0), Some(1)]);
        check(&eq);
    }

    #[test]
    fn highest_examples() {
        let eq = solve_highest(&q(&[vec![5.0]])).unwrap();
        assert_eq!((eq.prices.0.clone(), eq.payoffs.0.clone()), (vec![5.0], vec![0.0]));

        let eq = solve_highest(&q(&[vec![5.0], vec![3.0]])).unwrap();
        assert_eq!(eq.prices.0, vec![5.0]);
        assert_eq!(eq.payoffs.0, vec![0.0, 0.0]);
        check(&eq);

        let eq = solve_highest(&q(&[vec![3.0, 1.0], vec![2.0, 2.0]])).unwrap();
        assert_eq!(eq.prices.0, vec![3.0, 2.0]);
        assert_eq!(eq.payoffs.0, vec![0.0, 0.0]);
        check(&eq);
    }

    #[test]
    fn empty_sides() {
        let eq = solve_lowest(&Market::from_matrix(vec![vec![], vec![]]).unwrap()).unwrap();
        assert_eq!(eq.payoffs.0, vec![0.0, 0.0]);
        let eq = solve_highest(&Market::from_matrix(vec![]).unwrap()).unwrap();
        assert!(eq.prices.is_empty());
    }

    #[test]
    fn supporting_matching_examples() {
        let m = q(&[vec![5.0], vec![3.0]]);
        let mu = supporting_matching(&m, &PriceVector(vec![3.0]), &PayoffVector(vec![2.0, 0.0])).unwrap();
        assert_eq!(mu.0, vec![Some(0), None]);
        let m = q(&[vec![3.0, 1.0], vec![2.0, 2.0]]);
        let mu = supporting_matching(&m, &PriceVector(vec![0.0, 0.0]), &PayoffVector(vec![3.0, 2.0])).unwrap();
        assert_eq!(mu.0, vec![Some(0), Some(1)]);
        let single = q(&[vec![5.0]]);
        let err = supporting_matching(&single, &PriceVector(vec![1.0]), &PayoffVector(vec![0.0]));
        assert!(matches!(err, Err(Error::MatchingFailure(_))));
    }

    #[test]
    fn supporting_matching_releases_zero_price_goods() {
        // Kuhn hands the buyer the free good first; the priced good must then take it over.
        let m = q(&[vec![2.0, 3.0]]);
        let mu = supporting_matching(&m, &PriceVector(vec![0.0, 1.0]), &PayoffVector(vec![2.0])).unwrap();
        assert_eq!(mu.0, vec![Some(1)]);
    }

    #[test]
    fn critical_paths() {
        let eq = solve_highest(&q(&[vec![5.0]])).unwrap();
        assert_eq!(
            critical_alternating_path(&eq, 0).unwrap(),
            vec![PathNode::Good(0), PathNode::Buyer(0)]
        );

        let eq = solve_highest(&q(&[vec![3.0, 1.0], vec![2.0, 2.0]])).unwrap();
        assert_eq!(
            critical_alternating_path(&eq, 0).unwrap(),
            vec![PathNode::Good(0), PathNode::Buyer(0)]
        );

        let eq = solve_lowest(&q(&[vec![5.0], vec![0.0]])).unwrap();
        let unmatched = Equilibrium::new(
            eq.market.clone(),
            PriceVector(vec![0.0]),
            PayoffVector(vec![5.0, 0.0]),
            Matching(vec![None, None]),
        );
        assert_eq!(
            critical_alternating_path(&unmatched, 0).unwrap(),
            vec![PathNode::Good(0)]
        );
    }

    #[test]
    fn critical_path_through_positive_payoff_buyers() {
        // Highest CE of a chain market: buyer 0 tight to goods 0 and 1, buyer 1 tight to 1.
        let m = Arc::new(q(&[vec![4.0, 3.0], vec![0.0, 3.0]]));
        let eq = Equilibrium::new(
            m,
            PriceVector(vec![1.0, 0.0]),
            PayoffVector(vec![3.0, 3.0]),
            Matching(vec![Some(0), Some(1)]),
        );
        check(&eq);
        let path = critical_alternating_path(&eq, 0);
        assert!(matches!(path, Err(Error::PathNotFound(_))));
    }

    #[test]
    fn buyer_start_paths() {
        let eq = solve_lowest(&q(&[vec![5.0], vec![3.0]])).unwrap();
        let path = critical_alternating_path_from_buyer(&eq, 0).unwrap();
        assert_eq!(path, vec![PathNode::Buyer(0), PathNode::Good(0), PathNode::Buyer(1)]);
        assert_eq!(
            critical_alternating_path_from_buyer(&eq, 1).unwrap(),
            vec![PathNode::Buyer(1)]
        );
    }

    #[test]
    fn insert_buyer_examples() {
        let full = Arc::new(q(&[vec![5.0], vec![3.0]]));
        let minus = solve_highest(&full.without_buyer(0)).unwrap();
        assert_eq!(minus.prices.0, vec![3.0]);
        let eq = insert_buyer(&minus, full.clone(), 0).unwrap();
        check(&eq);
        assert!(eq.same_outcome(&solve_lowest(&full).unwrap(), EPS_EQ));
        assert_eq!(eq.matching.0, vec![Some(0), None]);

        let full = Arc::new(q(&[vec![3.0, 1.0], vec![2.0, 2.0]]));
        let minus = solve_highest(&full.without_buyer(0)).unwrap();
        assert_eq!(minus.prices.0, vec![0.0, 0.0]);
        let eq = insert_buyer(&minus, full, 0).unwrap();
        check(&eq);
        assert_eq!(eq.matching.good_of(0), Some(0));

        let full = Arc::new(q(&[vec![0.0], vec![3.0]]));
        let minus = solve_highest(&full.without_buyer(0)).unwrap();
        let eq = insert_buyer(&minus, full, 0).unwrap();
        assert_eq!(eq.matching.0, vec![None, Some(0)]);
    }

    #[test]
    fn bounded_examples() {
        let m = q(&[vec![5.0]]);
        let b = BoundEnvelope {
            price_lower: PriceVector(vec![2.0]),
            payoff_lower: PayoffVector(vec![0.0]),
        };
        let eq = solve_lowest_bounded(&m, &b).unwrap();
        assert!((eq.prices[0] - 2.0).abs() < 1e-12 && (eq.payoffs[0] - 3.0).abs() < 1e-12);

        let m = q(&[vec![3.0, 1.0], vec![2.0, 2.0]]);
        let zero = solve_lowest_bounded(&m, &BoundEnvelope::zero(&m)).unwrap();
        assert!(zero.same_outcome(&solve_lowest(&m).unwrap(), EPS_EQ));

        let high = solve_highest(&m).unwrap();
        let b = BoundEnvelope {
            price_lower: high.prices.clone(),
            payoff_lower: high.payoffs.clone(),
        };
        assert!(solve_lowest_bounded(&m, &b).unwrap().same_outcome(&high, EPS_EQ));

        let m = q(&[vec![5.0]]);
        let b = BoundEnvelope {
            price_lower: PriceVector(vec![6.0]),
            payoff_lower: PayoffVector(vec![0.0]),
        };
        assert_eq!(solve_lowest_bounded(&m, &b).unwrap_err(), Error::Infeasible);
    }

    #[test]
    fn size_cap() {
        let values = vec![vec![1.0; 9]; 9];
        assert!(matches!(solve_lowest(&q(&values)), Err(Error::SizeLimit { .. })));
        let config = SolverConfig { max_agents: 4 };
        assert!(solve_both(&q(&[vec![1.0, 2.0], vec![3.0, 4.0]]), config).is_ok());
    }

    #[test]
    fn mixed_market_is_a_ce() {
        let m = Market::from_matrix(vec![
            vec![UtilitySpec::budgeted(6.0, 2.0), UtilitySpec::quasilinear(4.0)],
            vec![
                UtilitySpec::piecewise(vec![[0.0, 5.0], [2.0, 2.0], [4.0, 0.0]]),
                UtilitySpec::quasilinear(3.0),
            ],
            vec![UtilitySpec::quasilinear(2.0), UtilitySpec::quasilinear(2.5)],
        ])
        .unwrap();
        let (low, high) = solve_both(&m, SolverConfig::default()).unwrap();
        check(&low);
        check(&high);
        assert!(low.prices.le(&high.prices, EPS_EQ));
        assert!(!tight_graph(&low).edges.is_empty());
    }
}
