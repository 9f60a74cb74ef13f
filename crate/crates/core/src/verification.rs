//! Independent checks: tightness witnesses, structural lemmas, VCG and brute-force oracles,
//! and a misreport probe.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market::{induced_payoffs, is_tight, Equilibrium, Market, PriceVector, EPS_EQ};
use crate::matching::{covering_matching, max_weight_assignment};
use crate::solver::solve_lowest;
use crate::utility::UtilitySpec;

/// Largest side the subset enumeration accepts.
pub const MAX_TIGHTNESS_SUBSETS: usize = 20;

/// Slack for calling a difference nonzero when the paired difference is zero.
pub const ENTANGLEMENT_SLACK: f64 = 100.0 * EPS_EQ;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Lowest,
    Highest,
}

/// Result of [`tightness_check`]; `witness` is the first failing subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TightnessVerdict {
    pub witness: Option<Vec<usize>>,
}

impl TightnessVerdict {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Subsets of `items` by increasing size, each size in lexicographic order.
fn for_each_subset(items: &[usize], mut visit: impl FnMut(&[usize]) -> bool) {
    let k_max = items.len();
    for k in 1..=k_max {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let subset: Vec<usize> = idx.iter().map(|&p| items[p]).collect();
            if !visit(&subset) {
                return;
            }
            // Next combination.
            let mut pos = k;
            while pos > 0 && idx[pos - 1] == k_max - k + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for q in pos..k {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
}

/// Lowest side: every set T of positive-price goods is tightly demanded by at least |T|+1
/// buyers. Highest side: every set S of positive-payoff buyers demands at least
/// |S|+1 goods.
pub fn tightness_check(eq: &Equilibrium, side: Side) -> Result<TightnessVerdict> {
    let market = &eq.market;
    let n = market.num_buyers();
    let m = market.num_goods();
    match side {
        Side::Lowest => {
            let goods: Vec<usize> = (0..m).filter(|&j| eq.prices[j] > EPS_EQ).collect();
            if goods.len() > MAX_TIGHTNESS_SUBSETS {
                return Err(Error::SizeLimit {
                    what: "positive-price goods",
                    actual: goods.len(),
                    limit: MAX_TIGHTNESS_SUBSETS,
                });
            }
            // Demanders of good j: buyers indifferent between j at its price and their payoff.
            let induced = induced_payoffs(market, &eq.prices);
            let mut demanders = vec![0u64; m];
            for &j in &goods {
                for i in 0..n {
                    if is_tight(market, &eq.prices, &induced, i, j, EPS_EQ) {
                        demanders[j] |= 1 << i;
                    }
                }
            }
            Ok(first_deficient(&goods, &demanders))
        }
        Side::Highest => {
            let buyers: Vec<usize> = (0..n).filter(|&i| eq.payoffs[i] > EPS_EQ).collect();
            if buyers.len() > MAX_TIGHTNESS_SUBSETS {
                return Err(Error::SizeLimit {
                    what: "positive-payoff buyers",
                    actual: buyers.len(),
                    limit: MAX_TIGHTNESS_SUBSETS,
                });
            }
            let induced = induced_payoffs(market, &eq.prices);
            let mut demanded = vec![0u64; n];
            for &i in &buyers {
                for j in 0..m {
                    if is_tight(market, &eq.prices, &induced, i, j, EPS_EQ) {
                        demanded[i] |= 1 << j;
                    }
                }
            }
            Ok(first_deficient(&buyers, &demanded))
        }
    }
}

fn first_deficient(items: &[usize], neighbours: &[u64]) -> TightnessVerdict {
    let mut witness = None;
    for_each_subset(items, |subset| {
        let union = subset.iter().fold(0u64, |acc, &x| acc | neighbours[x]);
        if (union.count_ones() as usize) < subset.len() + 1 {
            witness = Some(subset.to_vec());
            false
        } else {
            true
        }
    });
    TightnessVerdict { witness }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureRule {
    /// A matched pair whose price and payoff moved the same way (or one moved alone).
    Entanglement,
    /// A buyer with positive payoff, or a good with positive price, unmatched elsewhere.
    Conservation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureViolation {
    pub rule: StructureRule,
    /// Indices into the equilibrium list.
    pub pair: (usize, usize),
    pub buyer: Option<usize>,
    pub good: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct StructureVerdict {
    pub violations: Vec<StructureViolation>,
}

impl StructureVerdict {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn sign(x: f64) -> i8 {
    if x > EPS_EQ {
        1
    } else if x < -EPS_EQ {
        -1
    } else {
        0
    }
}

/// Entanglement and conservation of matching across equilibria of one market.
pub fn structure_checks(eqs: &[Equilibrium]) -> Result<StructureVerdict> {
    let mut violations = Vec::new();
    for a in 0..eqs.len() {
        for b in 0..eqs.len() {
            if a == b {
                continue;
            }
            let (x, y) = (&eqs[a], &eqs[b]);
            if !x.same_market(y) {
                return Err(Error::MarketMismatch);
            }
            // Entanglement over pairs matched in `x`; the (b, a) pass covers pairs matched in `y`.
            for (i, j) in x.matching.pairs() {
                let dp = y.prices[j] - x.prices[j];
                let du = y.payoffs[i] - x.payoffs[i];
                let (sp, su) = (sign(dp), sign(du));
                let broken = match (sp, su) {
                    (0, 0) => false,
                    (0, _) => du.abs() > ENTANGLEMENT_SLACK,
                    (_, 0) => dp.abs() > ENTANGLEMENT_SLACK,
                    _ => sp == su,
                };
                // Pairs matched in both equilibria are reported once.
                let in_both = y.matching.good_of(i) == Some(j);
                if broken && (a < b || !in_both) {
                    violations.push(StructureViolation {
                        rule: StructureRule::Entanglement,
                        pair: (a.min(b), a.max(b)),
                        buyer: Some(i),
                        good: Some(j),
                    });
                }
            }
            for i in 0..x.payoffs.len() {
                if x.payoffs[i] > EPS_EQ && y.matching.good_of(i).is_none() {
                    violations.push(StructureViolation {
                        rule: StructureRule::Conservation,
                        pair: (a, b),
                        buyer: Some(i),
                        good: None,
                    });
                }
            }
            let owners = y.matching.owners(y.prices.len());
            for (j, owner) in owners.iter().enumerate().take(x.prices.len()) {
                if x.prices[j] > EPS_EQ && owner.is_none() {
                    violations.push(StructureViolation {
                        rule: StructureRule::Conservation,
                        pair: (a, b),
                        buyer: None,
                        good: Some(j),
                    });
                }
            }
        }
    }
    Ok(StructureVerdict { violations })
}

/// Efficient assignment and VCG payments for a value matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct VcgOutcome {
    pub assignment: Vec<Option<usize>>,
    /// Payment per buyer; zero for unassigned buyers.
    pub payments: Vec<f64>,
    pub welfare: f64,
}

/// Maximum-weight matching plus externality payments.
pub fn vcg_oracle(values: &[Vec<f64>]) -> VcgOutcome {
    let (assignment, welfare) = max_weight_assignment(values);
    let payments = assignment
        .iter()
        .enumerate()
        .map(|(i, g)| match g {
            None => 0.0,
            Some(j) => {
                let others: Vec<Vec<f64>> = values
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i)
                    .map(|(_, row)| row.clone())
                    .collect();
                let without = max_weight_assignment(&others).1;
                without - (welfare - values[i][*j])
            }
        })
        .collect();
    VcgOutcome {
        assignment,
        payments,
        welfare,
    }
}

/// Largest good count [`brute_force_lowest`] will scan.
pub const MAX_BRUTE_FORCE_GOODS: usize = 3;

/// Halvings applied to a grid cell before it is accepted.
pub const CELL_REFINEMENT_DEPTH: u32 = 12;

/// Component-wise minimum of grid price vectors whose grid cell holds an equilibrium.
///
/// A cell is kept when [`cell_feasible`] passes for it and, recursively, for one of its
/// halves down to [`CELL_REFINEMENT_DEPTH`]. Every equilibrium rounded down to the grid
/// is kept, and a kept cell lies within about `grid_step / 2^depth` of an equilibrium.
pub fn brute_force_lowest(market: &Market, grid_step: f64) -> Result<PriceVector> {
    let m = market.num_goods();
    let n = market.num_buyers();
    if !(grid_step > 0.0) {
        return Err(Error::InvalidArgument("grid step must be positive".into()));
    }
    if m > MAX_BRUTE_FORCE_GOODS {
        return Err(Error::SizeLimit {
            what: "goods",
            actual: m,
            limit: MAX_BRUTE_FORCE_GOODS,
        });
    }
    let mut top = 0.0_f64;
    for i in 0..n {
        for j in 0..m {
            top = top.max(market.spec(i, j).root()?);
        }
    }
    let points = (top / grid_step).ceil() as usize + 1;
    let total = points.pow(m as u32);

    let best = (0..total)
        .into_par_iter()
        .filter_map(|code| {
            let mut rest = code;
            let prices: Vec<f64> = (0..m)
                .map(|_| {
                    let k = rest % points;
                    rest /= points;
                    k as f64 * grid_step
                })
                .collect();
            let prices = PriceVector(prices);
            cell_holds(market, &prices, grid_step, CELL_REFINEMENT_DEPTH).then_some(prices)
        })
        .reduce_with(|a, b| PriceVector(a.iter().zip(b.iter()).map(|(x, y)| x.min(*y)).collect()));
    best.ok_or(Error::Infeasible)
}

fn cell_holds(market: &Market, corner: &PriceVector, step: f64, depth: u32) -> bool {
    if !cell_feasible(market, corner, step) {
        return false;
    }
    if depth == 0 {
        return true;
    }
    let m = corner.len();
    let half = 0.5 * step;
    (0..1usize << m).any(|bits| {
        let sub = PriceVector(
            (0..m)
                .map(|j| corner[j] + if bits >> j & 1 == 1 { half } else { 0.0 })
                .collect(),
        );
        cell_holds(market, &sub, half, depth - 1)
    })
}

/// Whether the cell `[p, p + step]` can hold an equilibrium: some matching gives every
/// matched buyer a good at `p` worth at least everything at `p + step`, covers every buyer
/// with a positive payoff at `p + step`, and every good with a positive price.
fn cell_feasible(market: &Market, prices: &PriceVector, step: f64) -> bool {
    let n = market.num_buyers();
    let m = market.num_goods();
    let upper: Vec<f64> = (0..n)
        .map(|i| (0..m).fold(0.0_f64, |acc, j| acc.max(market.utility(i, j, prices[j] + step))))
        .collect();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..m)
                .filter(|&j| market.utility(i, j, prices[j]) >= upper[i] - EPS_EQ)
                .collect()
        })
        .collect();
    let required_buyers: Vec<bool> = upper.iter().map(|&u| u > EPS_EQ).collect();
    let required_goods: Vec<bool> = prices.iter().map(|&p| p > EPS_EQ).collect();
    covering_matching(&adj, &required_buyers, &required_goods).is_ok()
}

/// Finite set of reported values for the misreport probe.
#[derive(Clone, Debug, PartialEq)]
pub struct MisreportGrid {
    pub values: Vec<f64>,
}

impl MisreportGrid {
    pub fn range(min: f64, max: f64, step: f64) -> Self {
        let count = ((max - min) / step).round() as usize;
        MisreportGrid {
            values: (0..=count).map(|k| min + k as f64 * step).collect(),
        }
    }
}

impl Default for MisreportGrid {
    fn default() -> Self {
        MisreportGrid::range(0.0, 10.0, 0.5)
    }
}

/// Cap on joint misreports per probe.
pub const MAX_PROBE_REPORTS: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeWitness {
    /// Reported quasilinear value rows, one per coalition member.
    pub reports: Vec<Vec<f64>>,
    pub truthful: Vec<f64>,
    pub deviated: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeVerdict {
    pub misreports_tried: usize,
    pub witness: Option<ProbeWitness>,
}

impl ProbeVerdict {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Quasilinear value rows a buyer may report: a single grid value on one good, with the
/// other goods either at their value at price 0 or at 0. Truthful reporting is handled
/// separately by the caller.
fn candidate_rows(market: &Market, buyer: usize, grid: &MisreportGrid) -> Vec<Vec<f64>> {
    let m = market.num_goods();
    let honest: Vec<f64> = (0..m).map(|j| market.utility(buyer, j, 0.0).max(0.0)).collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for j in 0..m {
        for &r in &grid.values {
            for keep_others in [true, false] {
                let row: Vec<f64> = (0..m)
                    .map(|k| {
                        if k == j {
                            r
                        } else if keep_others {
                            honest[k]
                        } else {
                            0.0
                        }
                    })
                    .collect();
                if !rows
                    .iter()
                    .any(|x| x.iter().zip(&row).all(|(a, b)| a.to_bits() == b.to_bits()))
                {
                    rows.push(row);
                }
            }
        }
    }
    rows
}

/// Runs the lowest-CE mechanism under every joint grid misreport of `coalition` and looks
/// for one that makes every member strictly better off by more than `EPS_EQ`.
pub fn strategyproof_probe(market: &Market, coalition: &[usize], grid: &MisreportGrid) -> Result<ProbeVerdict> {
    let n = market.num_buyers();
    if coalition.is_empty() || coalition.iter().any(|&i| i >= n) {
        return Err(Error::InvalidArgument(
            "coalition must be a nonempty set of buyer indices".into(),
        ));
    }
    let truthful_eq = solve_lowest(market)?;
    let truthful: Vec<f64> = coalition.iter().map(|&i| truthful_eq.payoffs[i]).collect();

    // Option index 0 is the truthful row.
    let options: Vec<Vec<Option<Vec<f64>>>> = coalition
        .iter()
        .map(|&i| {
            std::iter::once(None)
                .chain(candidate_rows(market, i, grid).into_iter().map(Some))
                .collect()
        })
        .collect();
    let total = options.iter().try_fold(1usize, |acc, o| acc.checked_mul(o.len()));
    let total = match total {
        Some(t) if t <= MAX_PROBE_REPORTS => t,
        _ => {
            return Err(Error::SizeLimit {
                what: "joint misreports",
                actual: total.unwrap_or(usize::MAX),
                limit: MAX_PROBE_REPORTS,
            })
        }
    };

    let outcome = (1..total)
        .into_par_iter()
        .map(|code| -> Result<Option<ProbeWitness>> {
            let mut rest = code;
            let choice: Vec<&Option<Vec<f64>>> = options
                .iter()
                .map(|o| {
                    let c = &o[rest % o.len()];
                    rest /= o.len();
                    c
                })
                .collect();
            let reported = market.map_utilities(|i, j, spec| {
                match coalition.iter().position(|&c| c == i).and_then(|k| choice[k].as_ref()) {
                    Some(row) => UtilitySpec::quasilinear(row[j]),
                    None => spec.clone(),
                }
            })?;
            let eq = solve_lowest(&reported)?;
            let deviated: Vec<f64> = coalition
                .iter()
                .map(|&i| match eq.matching.good_of(i) {
                    Some(j) => market.utility(i, j, eq.prices[j]),
                    None => 0.0,
                })
                .collect();
            let all_gain = deviated.iter().zip(&truthful).all(|(d, t)| *d > t + EPS_EQ);
            Ok(all_gain.then(|| ProbeWitness {
                reports: choice
                    .iter()
                    .zip(coalition)
                    .map(|(c, &i)| match c {
                        Some(row) => row.clone(),
                        None => (0..market.num_goods()).map(|j| market.utility(i, j, 0.0)).collect(),
                    })
                    .collect(),
                truthful: truthful.clone(),
                deviated,
            }))
        })
        .filter_map(|r| r.transpose())
        .find_first(|_| true);

    let witness = match outcome {
        Some(Ok(w)) => Some(w),
        Some(Err(e)) => return Err(e),
        None => None,
    };
    Ok(ProbeVerdict {
        misreports_tried: total - 1,
        witness,
    })
}
