//! Markets, price/payoff vectors, matchings and the equilibrium conditions.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::utility::UtilitySpec;

/// Tolerance for every equality and tightness comparison on prices and payoffs.
pub const EPS_EQ: f64 = 1e-6;

/// A unit-demand market: buyers, goods and one utility curve per pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Market {
    buyers: Vec<String>,
    goods: Vec<String>,
    utilities: Vec<Vec<UtilitySpec>>,
}

impl Market {
    /// Builds a market; `utilities[i][j]` is buyer `i`'s curve for good `j`.
    pub fn new(buyers: Vec<String>, goods: Vec<String>, utilities: Vec<Vec<UtilitySpec>>) -> Result<Self> {
        if utilities.len() != buyers.len() || utilities.iter().any(|row| row.len() != goods.len()) {
            return Err(Error::InvalidMarket(format!(
                "utility matrix must be {}x{}",
                buyers.len(),
                goods.len()
            )));
        }
        check_unique(&buyers, "buyer")?;
        check_unique(&goods, "good")?;
        for (i, row) in utilities.iter().enumerate() {
            for (j, spec) in row.iter().enumerate() {
                spec.validate().map_err(|source| Error::InvalidSpec {
                    buyer: buyers[i].clone(),
                    good: goods[j].clone(),
                    source,
                })?;
            }
        }
        Ok(Market {
            buyers,
            goods,
            utilities,
        })
    }

    /// Market with generated ids `b1..bn`, `g1..gm`.
    pub fn from_matrix(utilities: Vec<Vec<UtilitySpec>>) -> Result<Self> {
        let n = utilities.len();
        let m = utilities.first().map_or(0, Vec::len);
        Market::new(default_ids("b", n), default_ids("g", m), utilities)
    }

    /// Quasilinear market from a value matrix.
    pub fn quasilinear(values: &[Vec<f64>]) -> Result<Self> {
        Market::from_matrix(
            values
                .iter()
                .map(|row| row.iter().map(|&v| UtilitySpec::quasilinear(v)).collect())
                .collect(),
        )
    }

    pub fn buyers(&self) -> &[String] {
        &self.buyers
    }

    pub fn goods(&self) -> &[String] {
        &self.goods
    }

    pub fn num_buyers(&self) -> usize {
        self.buyers.len()
    }

    pub fn num_goods(&self) -> usize {
        self.goods.len()
    }

    pub fn spec(&self, buyer: usize, good: usize) -> &UtilitySpec {
        &self.utilities[buyer][good]
    }

    pub fn utilities(&self) -> &[Vec<UtilitySpec>] {
        &self.utilities
    }

    /// `u_i^j(price)`.
    pub fn utility(&self, buyer: usize, good: usize, price: f64) -> f64 {
        self.utilities[buyer][good].evaluate(price)
    }

    /// `p_i^j(payoff)`.
    pub fn inverse(&self, buyer: usize, good: usize, payoff: f64) -> Result<f64> {
        self.utilities[buyer][good].invert(payoff)
    }

    pub fn buyer_index(&self, id: &str) -> Option<usize> {
        self.buyers.iter().position(|b| b == id)
    }

    pub fn good_index(&self, id: &str) -> Option<usize> {
        self.goods.iter().position(|g| g == id)
    }

    /// Same market with every curve replaced by `f(buyer, good, curve)`.
    pub fn map_utilities(&self, mut f: impl FnMut(usize, usize, &UtilitySpec) -> UtilitySpec) -> Result<Self> {
        let utilities = self
            .utilities
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(j, s)| f(i, j, s)).collect())
            .collect();
        Market::new(self.buyers.clone(), self.goods.clone(), utilities)
    }

    /// Sub-market keeping only the listed buyers and goods, in the given order.
    pub fn restrict(&self, buyers: &[usize], goods: &[usize]) -> Market {
        Market {
            buyers: buyers.iter().map(|&i| self.buyers[i].clone()).collect(),
            goods: goods.iter().map(|&j| self.goods[j].clone()).collect(),
            utilities: buyers
                .iter()
                .map(|&i| goods.iter().map(|&j| self.utilities[i][j].clone()).collect())
                .collect(),
        }
    }

    /// The market without one buyer.
    pub fn without_buyer(&self, buyer: usize) -> Market {
        let buyers: Vec<usize> = (0..self.num_buyers()).filter(|&i| i != buyer).collect();
        let goods: Vec<usize> = (0..self.num_goods()).collect();
        self.restrict(&buyers, &goods)
    }

    /// The market without one good.
    pub fn without_good(&self, good: usize) -> Market {
        let buyers: Vec<usize> = (0..self.num_buyers()).collect();
        let goods: Vec<usize> = (0..self.num_goods()).filter(|&j| j != good).collect();
        self.restrict(&buyers, &goods)
    }

    /// Adds dummy buyers or goods with `u(x) = -x` until both sides have equal size.
    pub fn pad_to_square(&self) -> Market {
        let n = self.num_buyers();
        let m = self.num_goods();
        let dummy = UtilitySpec::quasilinear(0.0);
        let mut out = self.clone();
        if n < m {
            for k in 0..(m - n) {
                out.buyers.push(fresh_id(&out.buyers, "dummy_buyer", k));
                out.utilities.push(vec![dummy.clone(); m]);
            }
        } else {
            for k in 0..(n - m) {
                out.goods.push(fresh_id(&out.goods, "dummy_good", k));
                for row in &mut out.utilities {
                    row.push(dummy.clone());
                }
            }
        }
        out
    }

    pub fn is_square(&self) -> bool {
        self.num_buyers() == self.num_goods()
    }
}

fn default_ids(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k}")).collect()
}

fn fresh_id(taken: &[String], stem: &str, k: usize) -> String {
    let mut id = format!("{stem}{}", k + 1);
    while taken.contains(&id) {
        id.push('_');
    }
    id
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::InvalidMarket(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

macro_rules! real_vector {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq, Default)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn zeros(n: usize) -> Self {
                $name(vec![0.0; n])
            }

            /// Component-wise `self <= other + tol`.
            pub fn le(&self, other: &Self, tol: f64) -> bool {
                self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| *a <= b + tol)
            }

            /// Largest component-wise absolute difference.
            pub fn max_diff(&self, other: &Self) -> f64 {
                self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            }

            pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
                self.0.len() == other.0.len() && self.max_diff(other) <= tol
            }
        }

        impl Deref for $name {
            type Target = Vec<f64>;
            fn deref(&self) -> &Vec<f64> {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut Vec<f64> {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                $name(v)
            }
        }
    };
}

real_vector!(
    /// Price per good.
    PriceVector
);
real_vector!(
    /// Payoff per buyer.
    PayoffVector
);

/// Assignment of goods to buyers; `None` marks an unmatched buyer.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Matching(pub Vec<Option<usize>>);

impl Matching {
    pub fn empty(num_buyers: usize) -> Self {
        Matching(vec![None; num_buyers])
    }

    pub fn good_of(&self, buyer: usize) -> Option<usize> {
        self.0[buyer]
    }

    /// Owner of `good`, if any.
    pub fn buyer_of(&self, good: usize) -> Option<usize> {
        self.0.iter().position(|g| *g == Some(good))
    }

    /// Inverse map indexed by good.
    pub fn owners(&self, num_goods: usize) -> Vec<Option<usize>> {
        let mut owner = vec![None; num_goods];
        for (i, g) in self.0.iter().enumerate() {
            if let Some(j) = *g {
                if j < num_goods {
                    owner[j] = Some(i);
                }
            }
        }
        owner
    }

    /// True when no good is assigned twice and every good index is in range.
    pub fn is_injective(&self, num_goods: usize) -> bool {
        let mut seen = vec![false; num_goods];
        for j in self.0.iter().flatten() {
            if *j >= num_goods || seen[*j] {
                return false;
            }
            seen[*j] = true;
        }
        true
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().enumerate().filter_map(|(i, g)| g.map(|j| (i, j)))
    }

    pub fn len(&self) -> usize {
        self.0.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Prices, payoffs and a supporting matching for one market.
#[derive(Clone, Debug)]
pub struct Equilibrium {
    pub market: Arc<Market>,
    pub prices: PriceVector,
    pub payoffs: PayoffVector,
    pub matching: Matching,
}

impl Equilibrium {
    pub fn new(market: Arc<Market>, prices: PriceVector, payoffs: PayoffVector, matching: Matching) -> Self {
        Equilibrium {
            market,
            prices,
            payoffs,
            matching,
        }
    }

    /// Equality by prices and payoffs; matchings may differ.
    pub fn same_outcome(&self, other: &Equilibrium, tol: f64) -> bool {
        self.prices.approx_eq(&other.prices, tol) && self.payoffs.approx_eq(&other.payoffs, tol)
    }

    pub fn same_market(&self, other: &Equilibrium) -> bool {
        Arc::ptr_eq(&self.market, &other.market) || *self.market == *other.market
    }
}

/// `u_i(p) = max({u_i^j(p^j)} ∪ {0})`.
pub fn induced_payoffs(market: &Market, prices: &PriceVector) -> PayoffVector {
    (0..market.num_buyers())
        .map(|i| induced_payoff(market, prices, i))
        .collect::<Vec<_>>()
        .into()
}

pub(crate) fn induced_payoff(market: &Market, prices: &[f64], buyer: usize) -> f64 {
    prices
        .iter()
        .enumerate()
        .map(|(j, &p)| market.utility(buyer, j, p))
        .fold(0.0, f64::max)
}

/// `p^j(u) = max({p_i^j(u_i)} ∪ {0})`.
pub fn induced_prices(market: &Market, payoffs: &PayoffVector) -> Result<PriceVector> {
    (0..market.num_goods())
        .map(|j| induced_price(market, payoffs, j))
        .collect::<Result<Vec<_>>>()
        .map(PriceVector)
}

pub(crate) fn induced_price(market: &Market, payoffs: &[f64], good: usize) -> Result<f64> {
    let mut best = 0.0_f64;
    for (i, &u) in payoffs.iter().enumerate() {
        best = best.max(market.inverse(i, good, u)?);
    }
    Ok(best)
}

/// `D_S(p)`: goods that some buyer in `subset` likes best at `prices`.
pub fn demand_set_of_buyers(market: &Market, prices: &PriceVector, subset: &[usize]) -> Result<BTreeSet<usize>> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("buyer subset must be nonempty".into()));
    }
    let mut out = BTreeSet::new();
    for &i in subset {
        let best = induced_payoff(market, prices, i);
        for (j, &p) in prices.iter().enumerate() {
            if (market.utility(i, j, p) - best).abs() <= EPS_EQ {
                out.insert(j);
            }
        }
    }
    Ok(out)
}

/// `D^T(u)`: buyers whose named price for some good in `subset` sets the induced price.
pub fn demand_set_of_goods(market: &Market, payoffs: &PayoffVector, subset: &[usize]) -> Result<BTreeSet<usize>> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("good subset must be nonempty".into()));
    }
    let mut out = BTreeSet::new();
    for &j in subset {
        let price = induced_price(market, payoffs, j)?;
        for (i, &u) in payoffs.iter().enumerate() {
            if (market.inverse(i, j, u)? - price).abs() <= EPS_EQ {
                out.insert(i);
            }
        }
    }
    Ok(out)
}

/// One of the four equilibrium conditions. Ordering follows the report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    /// The matching assigns some good twice or refers to a missing good.
    Matching,
    /// Matched buyer's payoff differs from her realized utility.
    MatchedPayoff,
    /// A buyer strictly prefers some other good at the posted prices.
    Envy,
    /// Unmatched buyer with a positive payoff.
    UnmatchedBuyer,
    /// Unmatched good with a positive price.
    UnmatchedGood,
    /// Negative price or payoff.
    Negative,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::Matching => "matching",
            Condition::MatchedPayoff => "CE1-matched",
            Condition::Envy => "CE1-envy",
            Condition::UnmatchedBuyer => "CE2",
            Condition::UnmatchedGood => "CE3",
            Condition::Negative => "CE4",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    pub buyer: Option<usize>,
    pub good: Option<usize>,
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.condition)?;
        if let Some(i) = self.buyer {
            write!(f, " buyer={i}")?;
        }
        if let Some(j) = self.good {
            write!(f, " good={j}")?;
        }
        write!(f, " by {:.3e}", self.magnitude)
    }
}

/// Outcome of [`verify_equilibrium`].
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the equilibrium conditions at tolerance `tol` and reports every violation.
pub fn verify_equilibrium(eq: &Equilibrium, tol: f64) -> Verdict {
    let market = &eq.market;
    let n = market.num_buyers();
    let m = market.num_goods();
    let mut violations = Vec::new();
    let mut push = |condition, buyer, good, magnitude| {
        violations.push(Violation {
            condition,
            buyer,
            good,
            magnitude,
        })
    };

    if eq.prices.len() != m || eq.payoffs.len() != n || eq.matching.0.len() != n {
        push(Condition::Matching, None, None, f64::INFINITY);
        return Verdict { violations };
    }
    if !eq.matching.is_injective(m) {
        push(Condition::Matching, None, None, 1.0);
        violations.sort_by(order);
        return Verdict { violations };
    }

    let owners = eq.matching.owners(m);
    for i in 0..n {
        let u = eq.payoffs[i];
        for j in 0..m {
            let realized = market.utility(i, j, eq.prices[j]);
            if eq.matching.good_of(i) == Some(j) {
                let gap = (u - realized).abs();
                if !(gap <= tol) {
                    push(Condition::MatchedPayoff, Some(i), Some(j), gap);
                }
            } else if !(u >= realized - tol) {
                push(Condition::Envy, Some(i), Some(j), realized - u);
            }
        }
        if eq.matching.good_of(i).is_none() && !(u.abs() <= tol) {
            push(Condition::UnmatchedBuyer, Some(i), None, u.abs());
        }
        if !(u >= -tol) {
            push(Condition::Negative, Some(i), None, -u);
        }
    }
    for (j, owner) in owners.iter().enumerate() {
        let p = eq.prices[j];
        if owner.is_none() && !(p.abs() <= tol) {
            push(Condition::UnmatchedGood, None, Some(j), p.abs());
        }
        if !(p >= -tol) {
            push(Condition::Negative, None, Some(j), -p);
        }
    }
    violations.sort_by(order);
    Verdict { violations }
}

fn order(a: &Violation, b: &Violation) -> std::cmp::Ordering {
    (a.condition, a.buyer, a.good).cmp(&(b.condition, b.buyer, b.good))
}

/// Tight edges of an equilibrium.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TightGraph {
    /// `(buyer, good, is_matching_edge)`, sorted by buyer then good.
    pub edges: Vec<(usize, usize, bool)>,
}

impl TightGraph {
    pub fn contains(&self, buyer: usize, good: usize) -> bool {
        self.edges.iter().any(|&(i, j, _)| i == buyer && j == good)
    }

    pub fn neighbours_of_buyer(&self, buyer: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == buyer).map(|e| e.1)
    }

    pub fn neighbours_of_good(&self, good: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == good).map(|e| e.0)
    }
}

/// Edges `(i, j)` with `|u_i - u_i^j(p^j)| <= EPS_EQ`, plus every matching edge.
pub fn tight_graph(eq: &Equilibrium) -> TightGraph {
    let market = &eq.market;
    let mut edges = Vec::new();
    for i in 0..market.num_buyers() {
        for j in 0..market.num_goods() {
            let matched = eq.matching.good_of(i) == Some(j);
            if matched || is_tight(market, &eq.prices, &eq.payoffs, i, j, EPS_EQ) {
                edges.push((i, j, matched));
            }
        }
    }
    TightGraph { edges }
}

pub(crate) fn is_tight(market: &Market, prices: &[f64], payoffs: &[f64], buyer: usize, good: usize, tol: f64) -> bool {
    (payoffs[buyer] - market.utility(buyer, good, prices[good])).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_buyer_two_goods() -> Market {
        Market::quasilinear(&[vec![5.0, 3.0]]).unwrap()
    }

    fn two_buyers_one_good() -> Arc<Market> {
        Arc::new(Market::quasilinear(&[vec![5.0], vec![3.0]]).unwrap())
    }

    fn two_by_two() -> Market {
        Market::quasilinear(&[vec![3.0, 1.0], vec![2.0, 2.0]]).unwrap()
    }

    #[test]
    fn induced_payoffs_take_best_option() {
        let m = one_buyer_two_goods();
        assert_eq!(induced_payoffs(&m, &PriceVector(vec![0.0, 0.0])).0, vec![5.0]);
        assert_eq!(induced_payoffs(&m, &PriceVector(vec![6.0, 4.0])).0, vec![0.0]);
    }

    #[test]
    fn induced_payoffs_example_one_buyer_four() {
        use crate::utility::Phase;
        let row = vec![
            UtilitySpec::quasilinear(11.0),
            UtilitySpec::oscillatory(11.0, Phase::Sin),
            UtilitySpec::oscillatory(11.0, Phase::Cos),
        ];
        let m = Market::from_matrix(vec![row]).unwrap();
        let u = induced_payoffs(&m, &PriceVector::zeros(3));
        assert_eq!(u.0, vec![11.0]);
    }

    #[test]
    fn induced_prices_clamp_at_zero() {
        let m = Market::quasilinear(&[vec![5.0]]).unwrap();
        assert_eq!(induced_prices(&m, &PayoffVector(vec![2.0])).unwrap().0, vec![3.0]);
        assert_eq!(induced_prices(&m, &PayoffVector(vec![9.0])).unwrap().0, vec![0.0]);
        let m2 = two_buyers_one_good();
        assert_eq!(induced_prices(&m2, &PayoffVector(vec![2.0, 0.0])).unwrap().0, vec![3.0]);
    }

    #[test]
    fn demand_sets_of_buyers() {
        let m = two_buyers_one_good();
        let all: Vec<usize> = demand_set_of_buyers(&m, &PriceVector(vec![0.0]), &[0, 1])
            .unwrap()
            .into_iter()
            .collect();
        assert_eq!(all, vec![0]);
        let m = two_by_two();
        let p = PriceVector(vec![0.0, 0.0]);
        assert_eq!(
            demand_set_of_buyers(&m, &p, &[1])
                .unwrap()
                .into_iter()
                .collect::<Vec<_>>(),
            vec![0, 1]
        );
        assert_eq!(
            demand_set_of_buyers(&m, &p, &[0])
                .unwrap()
                .into_iter()
                .collect::<Vec<_>>(),
            vec![0]
        );
        assert!(demand_set_of_buyers(&m, &p, &[]).is_err());
    }

    #[test]
    fn demand_sets_of_goods() {
        let m = two_buyers_one_good();
        let d = demand_set_of_goods(&m, &PayoffVector(vec![2.0, 0.0]), &[0]).unwrap();
        assert_eq!(d.into_iter().collect::<Vec<_>>(), vec![0, 1]);
        let d = demand_set_of_goods(&m, &PayoffVector(vec![1.0, 0.0]), &[0]).unwrap();
        assert_eq!(d.into_iter().collect::<Vec<_>>(), vec![0]);
        assert!(demand_set_of_goods(&m, &PayoffVector(vec![1.0, 0.0]), &[]).is_err());
    }

    #[test]
    fn verify_accepts_and_rejects() {
        let single = Arc::new(Market::quasilinear(&[vec![5.0]]).unwrap());
        let ok = Equilibrium::new(
            single.clone(),
            PriceVector(vec![0.0]),
            PayoffVector(vec![5.0]),
            Matching(vec![Some(0)]),
        );
        assert!(verify_equilibrium(&ok, EPS_EQ).passed());

        let bad = Equilibrium::new(
            single,
            PriceVector(vec![1.0]),
            PayoffVector(vec![0.0]),
            Matching(vec![None]),
        );
        let v = verify_equilibrium(&bad, EPS_EQ);
        assert!(!v.passed());
        assert!(v.violations.iter().any(|x| x.condition == Condition::UnmatchedGood));

        let two = Equilibrium::new(
            two_buyers_one_good(),
            PriceVector(vec![3.0]),
            PayoffVector(vec![2.0, 0.0]),
            Matching(vec![Some(0), None]),
        );
        assert!(verify_equilibrium(&two, EPS_EQ).passed());
    }

    #[test]
    fn violations_are_sorted() {
        let m = Arc::new(two_by_two());
        let eq = Equilibrium::new(
            m,
            PriceVector(vec![1.0, 1.0]),
            PayoffVector(vec![0.0, 0.0]),
            Matching::empty(2),
        );
        let v = verify_equilibrium(&eq, EPS_EQ);
        let keys: Vec<_> = v.violations.iter().map(|x| (x.condition, x.buyer, x.good)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(keys.iter().any(|k| k.0 == Condition::Envy));
        assert!(keys.iter().any(|k| k.0 == Condition::UnmatchedGood));
    }

    #[test]
    fn double_assignment_is_reported() {
        let m = Arc::new(two_by_two());
        let eq = Equilibrium::new(
            m,
            PriceVector(vec![0.0, 0.0]),
            PayoffVector(vec![3.0, 2.0]),
            Matching(vec![Some(0), Some(0)]),
        );
        assert_eq!(
            verify_equilibrium(&eq, EPS_EQ).violations[0].condition,
            Condition::Matching
        );
    }

    #[test]
    fn tight_graph_examples() {
        let eq = Equilibrium::new(
            two_buyers_one_good(),
            PriceVector(vec![3.0]),
            PayoffVector(vec![2.0, 0.0]),
            Matching(vec![Some(0), None]),
        );
        assert_eq!(tight_graph(&eq).edges, vec![(0, 0, true), (1, 0, false)]);

        let single = Arc::new(Market::quasilinear(&[vec![5.0]]).unwrap());
        let eq = Equilibrium::new(
            single,
            PriceVector(vec![0.0]),
            PayoffVector(vec![5.0]),
            Matching(vec![Some(0)]),
        );
        assert_eq!(tight_graph(&eq).edges, vec![(0, 0, true)]);

        let eq = Equilibrium::new(
            Arc::new(two_by_two()),
            PriceVector(vec![0.0, 0.0]),
            PayoffVector(vec![3.0, 2.0]),
            Matching(vec![Some(0), Some(1)]),
        );
        assert_eq!(tight_graph(&eq).edges, vec![(0, 0, true), (1, 0, false), (1, 1, true)]);
    }

    #[test]
    fn construction_rejects_bad_input() {
        let dup = Market::new(
            vec!["a".into(), "a".into()],
            vec!["g".into()],
            vec![vec![UtilitySpec::quasilinear(1.0)], vec![UtilitySpec::quasilinear(1.0)]],
        );
        assert!(matches!(dup, Err(Error::InvalidMarket(_))));
        let bad = Market::from_matrix(vec![vec![UtilitySpec::oscillatory(1.0, crate::utility::Phase::Sin)]]);
        assert!(matches!(bad, Err(Error::InvalidSpec { .. })));
    }

    #[test]
    fn padding_adds_dummies() {
        let m = Market::quasilinear(&[vec![5.0], vec![3.0]]).unwrap().pad_to_square();
        assert!(m.is_square());
        assert_eq!(m.goods()[1], "dummy_good1");
        assert_eq!(m.utility(0, 1, 2.0), -2.0);
    }
}
