//! Discrete-step ascending price auction and the non-terminating example market.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::market::{Market, PriceVector, EPS_EQ};
use crate::matching::max_matching;
use crate::utility::{Phase, UtilitySpec};

/// Distance below the oscillatory constant `V` at which the simulator caps prices.
pub const OSCILLATORY_PRICE_MARGIN: f64 = 1e-4;

/// Iterations of the bisection that clips a step at the next indifference point.
const CLIP_BISECTION_STEPS: usize = 60;

#[derive(Clone, Debug, PartialEq)]
pub struct AuctionConfig {
    /// Largest price increment per iteration.
    pub step: f64,
    pub max_steps: usize,
    /// Goods within this much of a buyer's best payoff count as demanded in the fingerprint.
    pub tie_band: f64,
    /// Fingerprints and price samples are taken every this many iterations.
    pub sample_every: usize,
}

impl AuctionConfig {
    pub fn new(step: f64, max_steps: usize) -> Self {
        AuctionConfig {
            step,
            max_steps,
            tie_band: 3.0 * step,
            sample_every: 20,
        }
    }
}

/// Per-buyer demanded goods, sorted.
pub type Fingerprint = Vec<Vec<usize>>;

#[derive(Clone, Debug, PartialEq)]
pub struct AuctionTrace {
    pub samples: Vec<(usize, PriceVector)>,
    pub events: Vec<(usize, Fingerprint)>,
    pub terminated: bool,
    pub demand_change_count: usize,
    /// Iterations actually run.
    pub steps: usize,
}

impl AuctionTrace {
    pub fn final_prices(&self) -> &PriceVector {
        &self.samples.last().expect("trace always holds the final state").1
    }

    pub fn max_price(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|(_, p)| p.iter().copied())
            .fold(0.0, f64::max)
    }

    /// `step,price_good_1,...,price_good_m,changed`, one row per sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let m = self.samples.first().map_or(0, |(_, p)| p.len());
        write!(out, "step")?;
        for j in 1..=m {
            write!(out, ",price_good_{j}")?;
        }
        writeln!(out, ",changed")?;
        for (k, (step, prices)) in self.samples.iter().enumerate() {
            write!(out, "{step}")?;
            for p in prices.iter() {
                write!(out, ",{p:.9}")?;
            }
            let changed = k > 0 && self.events[k].1 != self.events[k - 1].1;
            writeln!(out, ",{}", u8::from(changed))?;
        }
        Ok(())
    }
}

/// Goods a buyer strictly prefers to staying out: those within `band` of its best payoff,
/// or nothing when the best payoff is not positive.
fn demand(market: &Market, prices: &[f64], buyer: usize, band: f64) -> Vec<usize> {
    let values: Vec<f64> = (0..prices.len()).map(|j| market.utility(buyer, j, prices[j])).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(best > EPS_EQ) {
        return Vec::new();
    }
    (0..values.len()).filter(|&j| values[j] >= best - band).collect()
}

fn strict_demands(market: &Market, prices: &[f64]) -> Vec<Vec<usize>> {
    (0..market.num_buyers())
        .map(|i| demand(market, prices, i, EPS_EQ))
        .collect()
}

fn is_over_demanded(demands: &[Vec<usize>], set: &[bool]) -> bool {
    let size = set.iter().filter(|&&x| x).count();
    let inside = demands
        .iter()
        .filter(|d| !d.is_empty() && d.iter().all(|&j| set[j]))
        .count();
    inside > size
}

/// An inclusion-minimal over-demanded set of goods, empty when there is none.
///
/// A buyer left out of a maximum matching on the strict-demand graph witnesses a Hall
/// violation: the goods reachable from it by alternating paths are over-demanded. That set
/// is then shrunk one good at a time while it stays over-demanded.
pub fn over_demanded_set(market: &Market, prices: &PriceVector) -> Vec<usize> {
    let demands = strict_demands(market, prices);
    over_demanded_from(&demands, market.num_goods())
}

fn over_demanded_from(demands: &[Vec<usize>], m: usize) -> Vec<usize> {
    let active: Vec<usize> = (0..demands.len()).filter(|&i| !demands[i].is_empty()).collect();
    let owner = max_matching(demands, m, &active);
    let mut matched = vec![false; demands.len()];
    for i in owner.iter().flatten() {
        matched[*i] = true;
    }
    let Some(&root) = active.iter().find(|&&i| !matched[i]) else {
        return Vec::new();
    };

    let mut set = vec![false; m];
    let mut seen_buyer = vec![false; demands.len()];
    seen_buyer[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(i) = queue.pop_front() {
        for &j in &demands[i] {
            if set[j] {
                continue;
            }
            set[j] = true;
            if let Some(k) = owner[j] {
                if !seen_buyer[k] {
                    seen_buyer[k] = true;
                    queue.push_back(k);
                }
            }
        }
    }

    let mut changed = true;
    while changed {
        changed = false;
        for j in 0..m {
            if set[j] {
                set[j] = false;
                if is_over_demanded(demands, &set) {
                    changed = true;
                } else {
                    set[j] = true;
                }
            }
        }
    }
    (0..m).filter(|&j| set[j]).collect()
}

fn price_cap(market: &Market) -> f64 {
    market
        .utilities()
        .iter()
        .flatten()
        .filter_map(UtilitySpec::oscillatory_limit)
        .fold(f64::INFINITY, f64::min)
        - OSCILLATORY_PRICE_MARGIN
}

/// Runs the auction with the default fingerprint settings.
pub fn run_auction(market: &Market, step: f64, max_steps: usize) -> Result<AuctionTrace> {
    run_auction_with(market, &AuctionConfig::new(step, max_steps))
}

/// Raises the prices of a minimal over-demanded set until none remains or `max_steps` runs out.
/// A step is shortened when a buyer of the demanding group would become indifferent to a
/// good outside the set (or to staying out) before the full increment.
pub fn run_auction_with(market: &Market, config: &AuctionConfig) -> Result<AuctionTrace> {
    if !(config.step > 0.0) || !config.step.is_finite() {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    if config.sample_every == 0 {
        return Err(Error::InvalidArgument("sample interval must be positive".into()));
    }
    let n = market.num_buyers();
    let m = market.num_goods();
    let cap = price_cap(market);
    let mut prices = vec![0.0; m];
    let mut samples = Vec::new();
    let mut events: Vec<(usize, Fingerprint)> = Vec::new();
    let mut terminated = false;
    let mut steps = config.max_steps;

    let fingerprint = |p: &[f64]| -> Fingerprint { (0..n).map(|i| demand(market, p, i, config.tie_band)).collect() };

    for s in 0..config.max_steps {
        if s % config.sample_every == 0 {
            samples.push((s, PriceVector(prices.clone())));
            events.push((s, fingerprint(&prices)));
        }
        let demands = strict_demands(market, &prices);
        let set = over_demanded_from(&demands, m);
        if set.is_empty() {
            terminated = true;
            steps = s;
            break;
        }
        let mut in_set = vec![false; m];
        for &j in &set {
            in_set[j] = true;
        }
        let group: Vec<usize> = (0..n)
            .filter(|&i| !demands[i].is_empty() && demands[i].iter().all(|&j| in_set[j]))
            .collect();

        let raised = |delta: f64| -> Vec<f64> {
            (0..m)
                .map(|j| {
                    if in_set[j] {
                        (prices[j] + delta).min(cap)
                    } else {
                        prices[j]
                    }
                })
                .collect()
        };
        // Largest advantage of an outside option over the set, across the group.
        let gap = |delta: f64| -> f64 {
            let q = raised(delta);
            group
                .iter()
                .map(|&i| {
                    let inside = set
                        .iter()
                        .map(|&j| market.utility(i, j, q[j]))
                        .fold(f64::NEG_INFINITY, f64::max);
                    let outside = (0..m)
                        .filter(|&j| !in_set[j])
                        .map(|j| market.utility(i, j, q[j]))
                        .fold(0.0, f64::max);
                    outside - inside
                })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut delta = config.step;
        if gap(delta) >= -EPS_EQ / 2.0 {
            let (mut lo, mut hi) = (0.0, delta);
            for _ in 0..CLIP_BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if gap(mid) >= -EPS_EQ / 2.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            delta = hi;
        }
        prices = raised(delta);
    }

    let last = if terminated { steps } else { config.max_steps };
    if samples.last().map(|(s, _)| *s) != Some(last) {
        samples.push((last, PriceVector(prices.clone())));
        events.push((last, fingerprint(&prices)));
    }
    let demand_change_count = events.windows(2).filter(|w| w[0].1 != w[1].1).count();
    log::debug!("auction ran {last} steps, terminated={terminated}, {demand_change_count} demand changes");
    Ok(AuctionTrace {
        samples,
        events,
        terminated,
        demand_change_count,
        steps: last,
    })
}

/// The four-buyer, three-good market whose ascending auction never stops.
pub fn example1_market(v: f64) -> Result<Market> {
    if !(v >= 2.0) || !v.is_finite() {
        return Err(Error::DomainError(format!("example market needs V >= 2, got {v}")));
    }
    let high = UtilitySpec::quasilinear(v + 1.0);
    let none = UtilitySpec::quasilinear(0.0);
    let utilities = vec![
        vec![high.clone(), high.clone(), high.clone()],
        vec![none.clone(), high.clone(), none.clone()],
        vec![none.clone(), none.clone(), high],
        vec![
            UtilitySpec::quasilinear(v),
            UtilitySpec::oscillatory(v, Phase::Sin),
            UtilitySpec::oscillatory(v, Phase::Cos),
        ],
    ];
    Market::from_matrix(utilities)
}

/// Number of sign changes of `sin(V ln(V - x))` for `x` in `[0, cap]`.
pub fn oscillation_oracle(v: f64, price_cap: f64) -> Result<u64> {
    if !(v > 0.0) || !(price_cap > 0.0 && price_cap < v) {
        return Err(Error::DomainError(format!(
            "need 0 < cap < V, got V = {v}, cap = {price_cap}"
        )));
    }
    // Zeros sit at V ln(V - x) = k pi; count integers k strictly between the end values.
    let lo = v * (v - price_cap).ln() / PI;
    let hi = v * v.ln() / PI;
    let k_min = lo.floor() as i64 + 1;
    let k_max = hi.ceil() as i64 - 1;
    Ok((k_max - k_min + 1).max(0) as u64)
}
