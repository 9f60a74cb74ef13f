//! Two-sided reduction, personalised price maps and the CPC/CPM ad auction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Equilibrium, Market, PriceVector, EPS_EQ};
use crate::solver::solve_lowest;
use crate::utility::{apply_price_map, PriceMap, UtilitySpec};
use crate::verification::{vcg_oracle, VcgOutcome};

/// A market where both sides have utilities over the transfer between them.
/// `seller_utilities[i][j]` is agent `j`'s payoff curve `q` evaluated at `-x`, where `x` is the
/// amount agent `i` pays agent `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSidedMarket {
    pub buyers: Vec<String>,
    pub sellers: Vec<String>,
    pub buyer_utilities: Vec<Vec<UtilitySpec>>,
    pub seller_utilities: Vec<Vec<UtilitySpec>>,
}

impl TwoSidedMarket {
    pub fn new(
        buyers: Vec<String>,
        sellers: Vec<String>,
        buyer_utilities: Vec<Vec<UtilitySpec>>,
        seller_utilities: Vec<Vec<UtilitySpec>>,
    ) -> Result<Self> {
        // Market::new checks shapes, ids and every curve on both sides.
        Market::new(buyers.clone(), sellers.clone(), buyer_utilities.clone())?;
        Market::new(buyers.clone(), sellers.clone(), seller_utilities.clone())?;
        Ok(TwoSidedMarket {
            buyers,
            sellers,
            buyer_utilities,
            seller_utilities,
        })
    }

    /// Transfer `x` from buyer to seller that gives the seller `seller_payoff`.
    pub fn transfer(&self, buyer: usize, seller: usize, seller_payoff: f64) -> Result<f64> {
        Ok(-self.seller_utilities[buyer][seller].invert(seller_payoff)?)
    }
}

/// One-sided market whose good-`j` "price" is agent `j`'s payoff.
pub fn reduce_two_sided(ts: &TwoSidedMarket) -> Result<Market> {
    let utilities = ts
        .buyer_utilities
        .iter()
        .zip(&ts.seller_utilities)
        .map(|(urow, qrow)| {
            urow.iter()
                .zip(qrow)
                .map(|(u, q)| {
                    apply_price_map(
                        u,
                        &PriceMap::SellerInverse {
                            seller: Box::new(q.clone()),
                        },
                    )
                })
                .collect()
        })
        .collect();
    Market::new(ts.buyers.clone(), ts.sellers.clone(), utilities)
}

/// Market where buyer `i` faces the personalised price `maps[i][j](p^j)` for good `j`.
pub fn discriminated_market(market: &Market, maps: &[Vec<PriceMap>]) -> Result<Market> {
    if maps.len() != market.num_buyers() || maps.iter().any(|row| row.len() != market.num_goods()) {
        return Err(Error::InvalidArgument(
            "price map matrix does not match the market".into(),
        ));
    }
    market.map_utilities(|i, j, spec| match &maps[i][j] {
        PriceMap::Identity => spec.clone(),
        map => apply_price_map(spec, map),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaymentMode {
    /// Pay per click.
    Cpc,
    /// Pay per impression.
    Cpm,
}

/// Value and believed clickthrough rate of one advertiser for one slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardParams {
    pub value: f64,
    pub ctr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdvertiserSpec {
    pub id: String,
    pub mode: PaymentMode,
    /// Per-slot curves; the argument is a per-click price for CPC and a per-impression price for CPM.
    pub utilities: Vec<UtilitySpec>,
    pub standard: Option<Vec<StandardParams>>,
}

impl AdvertiserSpec {
    /// CPC advertiser with `u(x) = c (v - x)` on every slot.
    pub fn standard_cpc(id: impl Into<String>, params: Vec<StandardParams>) -> Self {
        let utilities = params
            .iter()
            .map(|s| UtilitySpec::PriceMapped {
                inner: Box::new(UtilitySpec::quasilinear(s.ctr * s.value)),
                map: PriceMap::Scale { divisor: 1.0 / s.ctr },
            })
            .collect();
        AdvertiserSpec {
            id: id.into(),
            mode: PaymentMode::Cpc,
            utilities,
            standard: Some(params),
        }
    }

    /// CPM advertiser with `u(x) = c v - x` on every slot.
    pub fn standard_cpm(id: impl Into<String>, params: Vec<StandardParams>) -> Self {
        let utilities = params
            .iter()
            .map(|s| UtilitySpec::quasilinear(s.ctr * s.value))
            .collect();
        AdvertiserSpec {
            id: id.into(),
            mode: PaymentMode::Cpm,
            utilities,
            standard: Some(params),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdAuctionConfig {
    pub slots: Vec<String>,
    pub advertisers: Vec<AdvertiserSpec>,
    /// Engine clickthrough estimates, advertiser by slot, each in (0, 1].
    pub engine_ctr: Vec<Vec<f64>>,
}

impl AdAuctionConfig {
    pub fn validate(&self) -> Result<()> {
        let m = self.slots.len();
        if self.engine_ctr.len() != self.advertisers.len() || self.engine_ctr.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidArgument("CTR matrix must be advertisers x slots".into()));
        }
        if self.engine_ctr.iter().flatten().any(|c| !(*c > 0.0 && *c <= 1.0)) {
            return Err(Error::InvalidArgument("engine CTRs must lie in (0, 1]".into()));
        }
        for a in &self.advertisers {
            if a.utilities.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "advertiser {} needs one curve per slot",
                    a.id
                )));
            }
            if let Some(params) = &a.standard {
                if params.len() != m {
                    return Err(Error::InvalidArgument(format!(
                        "advertiser {} needs parameters per slot",
                        a.id
                    )));
                }
                for (j, (s, u)) in params.iter().zip(&a.utilities).enumerate() {
                    if !(s.ctr > 0.0 && s.ctr <= 1.0) || !s.value.is_finite() {
                        return Err(Error::InvalidArgument(format!(
                            "advertiser {} slot {j}: bad parameters",
                            a.id
                        )));
                    }
                    if !standard_form_holds(a.mode, s, u) {
                        return Err(Error::InvalidArgument(format!(
                            "advertiser {} slot {j}: curve does not match its standard parameters",
                            a.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Price maps fixed by payment modes and engine CTRs only.
    pub fn price_maps(&self) -> Vec<Vec<PriceMap>> {
        self.advertisers
            .iter()
            .zip(&self.engine_ctr)
            .map(|(a, row)| {
                row.iter()
                    .map(|&c| match a.mode {
                        PaymentMode::Cpc => PriceMap::Scale { divisor: c },
                        PaymentMode::Cpm => PriceMap::Identity,
                    })
                    .collect()
            })
            .collect()
    }

    /// Market of reported curves against per-impression prices, before personalisation.
    pub fn reported_market(&self) -> Result<Market> {
        Market::new(
            self.advertisers.iter().map(|a| a.id.clone()).collect(),
            self.slots.clone(),
            self.advertisers.iter().map(|a| a.utilities.clone()).collect(),
        )
    }
}

fn standard_form_holds(mode: PaymentMode, s: &StandardParams, u: &UtilitySpec) -> bool {
    [0.0, 0.5 * s.value, s.value, 2.0 * s.value + 1.0].iter().all(|&x| {
        let expected = match mode {
            PaymentMode::Cpc => s.ctr * (s.value - x),
            PaymentMode::Cpm => s.ctr * s.value - x,
        };
        (u.evaluate(x) - expected).abs() <= 1e-9 * (1.0 + expected.abs())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriceUnit {
    PerClick,
    PerImpression,
}

impl fmt::Display for PriceUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriceUnit::PerClick => "per_click",
            PriceUnit::PerImpression => "per_impression",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservedPrice {
    pub amount: f64,
    pub unit: PriceUnit,
}

#[derive(Clone, Debug)]
pub struct AdOutcome {
    /// Lowest CE of the personalised market.
    pub equilibrium: Equilibrium,
    /// Slot per advertiser.
    pub assignment: Vec<Option<usize>>,
    /// Expected engine revenue per impression, per slot.
    pub base_prices: PriceVector,
    /// Price each advertiser sees for its slot.
    pub observed: Vec<Option<ObservedPrice>>,
    pub maps: Vec<Vec<PriceMap>>,
}

/// Lowest CE of the market where CPC advertisers face `p / c_hat` per click.
pub fn run_ad_auction(config: &AdAuctionConfig) -> Result<AdOutcome> {
    config.validate()?;
    let maps = config.price_maps();
    let market = discriminated_market(&config.reported_market()?, &maps)?;
    let equilibrium = solve_lowest(&market)?;
    let assignment = equilibrium.matching.0.clone();
    let observed = assignment
        .iter()
        .enumerate()
        .map(|(i, slot)| {
            slot.map(|j| ObservedPrice {
                amount: maps[i][j].apply(equilibrium.prices[j]),
                unit: match config.advertisers[i].mode {
                    PaymentMode::Cpc => PriceUnit::PerClick,
                    PaymentMode::Cpm => PriceUnit::PerImpression,
                },
            })
        })
        .collect();
    Ok(AdOutcome {
        base_prices: equilibrium.prices.clone(),
        assignment,
        observed,
        maps,
        equilibrium,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct VcgComparison {
    pub oracle: VcgOutcome,
    /// Sum of expected values over the auction's assignment.
    pub assignment_welfare: f64,
    pub welfare_matches: bool,
    /// Base price of each winner's slot equals its VCG payment.
    pub payments_match: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WelfareReport {
    /// Sum of base prices over matched slots.
    pub revenue: f64,
    /// `c v - p` for matched advertisers with standard parameters and agreeing CTRs.
    pub advertiser_utilities: Vec<Option<f64>>,
    /// Revenue plus advertiser utilities, when every advertiser is standard and agreeing.
    pub coalition_welfare: Option<f64>,
    pub vcg: Option<VcgComparison>,
}

fn agreeing(config: &AdAuctionConfig, i: usize) -> Option<&[StandardParams]> {
    let params = config.advertisers[i].standard.as_deref()?;
    let agrees = params
        .iter()
        .zip(&config.engine_ctr[i])
        .all(|(s, c)| (s.ctr - c).abs() <= 1e-12);
    agrees.then_some(params)
}

/// Revenue, advertiser utilities and the comparison with VCG on expected values.
pub fn welfare_report(config: &AdAuctionConfig, outcome: &AdOutcome) -> WelfareReport {
    let revenue: f64 = outcome
        .assignment
        .iter()
        .flatten()
        .map(|&j| outcome.base_prices[j])
        .sum();
    let advertiser_utilities: Vec<Option<f64>> = (0..config.advertisers.len())
        .map(|i| {
            let params = agreeing(config, i)?;
            Some(match outcome.assignment[i] {
                Some(j) => params[j].ctr * params[j].value - outcome.base_prices[j],
                None => 0.0,
            })
        })
        .collect();
    let all_standard = advertiser_utilities.iter().all(Option::is_some);
    let coalition_welfare = all_standard.then(|| revenue + advertiser_utilities.iter().flatten().sum::<f64>());

    let vcg = all_standard.then(|| {
        let values: Vec<Vec<f64>> = (0..config.advertisers.len())
            .map(|i| {
                agreeing(config, i)
                    .expect("checked above")
                    .iter()
                    .map(|s| s.ctr * s.value)
                    .collect()
            })
            .collect();
        let oracle = vcg_oracle(&values);
        let assignment_welfare: f64 = outcome
            .assignment
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|j| values[i][j]))
            .sum();
        let welfare_matches = (assignment_welfare - oracle.welfare).abs() <= EPS_EQ;
        // Payments are compared per slot so that ties between optimal assignments do not matter.
        let payments_match = (0..config.slots.len()).all(|j| {
            let vcg_price = oracle
                .assignment
                .iter()
                .position(|s| *s == Some(j))
                .map_or(0.0, |i| oracle.payments[i]);
            (vcg_price - outcome.base_prices[j]).abs() <= EPS_EQ
        });
        VcgComparison {
            oracle,
            assignment_welfare,
            welfare_matches,
            payments_match,
        }
    });
    WelfareReport {
        revenue,
        advertiser_utilities,
        coalition_welfare,
        vcg,
    }
}

/// Checks that every matched CPC price is the engine's map of the base price and that
/// `c_hat * per_click` recovers the base price to within a few ulps.
pub fn observed_prices_consistent(config: &AdAuctionConfig, outcome: &AdOutcome) -> bool {
    outcome.assignment.iter().enumerate().all(|(i, slot)| {
        let (Some(j), Some(obs)) = (slot, outcome.observed[i]) else {
            return true;
        };
        let base = outcome.base_prices[*j];
        match config.advertisers[i].mode {
            PaymentMode::Cpm => obs.unit == PriceUnit::PerImpression && obs.amount.to_bits() == base.to_bits(),
            PaymentMode::Cpc => {
                let c = config.engine_ctr[i][*j];
                obs.unit == PriceUnit::PerClick
                    && obs.amount.to_bits() == (base / c).to_bits()
                    && (c * obs.amount - base).abs() <= 4.0 * f64::EPSILON * base.abs().max(f64::MIN_POSITIVE)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::verify_equilibrium;

    fn sp(value: f64, ctr: f64) -> StandardParams {
        StandardParams { value, ctr }
    }

    fn worked() -> AdAuctionConfig {
        AdAuctionConfig {
            slots: vec!["top".into()],
            advertisers: vec![
                AdvertiserSpec::standard_cpc("a", vec![sp(10.0, 0.2)]),
                AdvertiserSpec::standard_cpc("b", vec![sp(2.0, 0.5)]),
            ],
            engine_ctr: vec![vec![0.2], vec![0.5]],
        }
    }

    #[test]
    fn worked_instance() {
        let config = worked();
        let out = run_ad_auction(&config).unwrap();
        assert_eq!(out.assignment, vec![Some(0), None]);
        assert!((out.base_prices[0] - 1.0).abs() <= 1e-12);
        let obs = out.observed[0].unwrap();
        assert_eq!(obs.unit, PriceUnit::PerClick);
        assert!((obs.amount - 5.0).abs() <= 1e-12);
        assert!(observed_prices_consistent(&config, &out));
        let report = welfare_report(&config, &out);
        assert!((report.coalition_welfare.unwrap() - 2.0).abs() <= 1e-12);
        let vcg = report.vcg.unwrap();
        assert!(vcg.welfare_matches && vcg.payments_match);
    }

    #[test]
    fn cpc_against_cpm() {
        let config = AdAuctionConfig {
            slots: vec!["top".into()],
            advertisers: vec![
                AdvertiserSpec::standard_cpc("a", vec![sp(10.0, 0.2)]),
                AdvertiserSpec::standard_cpm("b", vec![sp(1.0, 1.0)]),
            ],
            engine_ctr: vec![vec![0.2], vec![1.0]],
        };
        let out = run_ad_auction(&config).unwrap();
        assert!((out.base_prices[0] - 1.0).abs() <= 1e-12);
        assert!((out.observed[0].unwrap().amount - 5.0).abs() <= 1e-12);
    }

    #[test]
    fn single_and_empty() {
        let config = AdAuctionConfig {
            slots: vec!["top".into()],
            advertisers: vec![AdvertiserSpec::standard_cpc("a", vec![sp(10.0, 0.2)])],
            engine_ctr: vec![vec![0.2]],
        };
        let out = run_ad_auction(&config).unwrap();
        assert_eq!(out.base_prices.0, vec![0.0]);
        assert_eq!(out.observed[0].unwrap().amount, 0.0);

        let empty = AdAuctionConfig {
            slots: vec!["top".into()],
            advertisers: vec![],
            engine_ctr: vec![],
        };
        let out = run_ad_auction(&empty).unwrap();
        let report = welfare_report(&empty, &out);
        assert_eq!(report.revenue, 0.0);
        assert_eq!(report.coalition_welfare, Some(0.0));
    }

    #[test]
    fn invalid_configs() {
        let mut c = worked();
        c.engine_ctr[0][0] = 0.0;
        assert!(run_ad_auction(&c).is_err());
        let mut c = worked();
        c.advertisers[0].utilities[0] = UtilitySpec::quasilinear(3.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn maps_ignore_reports() {
        let a = worked();
        let mut b = worked();
        b.advertisers[1].utilities[0] = UtilitySpec::quasilinear(0.7);
        b.advertisers[1].standard = None;
        assert_eq!(a.price_maps(), b.price_maps());
    }

    #[test]
    fn identity_maps_leave_market_alone() {
        let m = Market::quasilinear(&[vec![3.0, 1.0], vec![2.0, 2.0]]).unwrap();
        let maps = vec![vec![PriceMap::Identity; 2]; 2];
        assert_eq!(discriminated_market(&m, &maps).unwrap(), m);
    }

    #[test]
    fn scaled_map_doubles_observed_price() {
        let m = Market::quasilinear(&[vec![3.0, 1.0], vec![2.0, 2.0]]).unwrap();
        let mut maps = vec![vec![PriceMap::Identity; 2]; 2];
        maps[1][0] = PriceMap::Scale { divisor: 0.5 };
        let d = discriminated_market(&m, &maps).unwrap();
        assert_eq!(d.utility(1, 0, 0.75), 2.0 - 1.5);
        assert_eq!(maps[1][0].apply(0.75), 1.5);
        let eq = solve_lowest(&d).unwrap();
        assert!(verify_equilibrium(&eq, EPS_EQ).passed());
    }

    #[test]
    fn two_sided_reduction() {
        let ids = |p: &str, n: usize| (1..=n).map(|k| format!("{p}{k}")).collect::<Vec<_>>();
        let u = vec![vec![UtilitySpec::quasilinear(5.0)], vec![UtilitySpec::quasilinear(3.0)]];
        let plain = vec![vec![UtilitySpec::quasilinear(0.0)]; 2];
        let ts = TwoSidedMarket::new(ids("b", 2), ids("s", 1), u.clone(), plain).unwrap();
        let reduced = reduce_two_sided(&ts).unwrap();
        for x in [0.0, 1.0, 2.5, 4.0] {
            assert_eq!(reduced.utility(0, 0, x), 5.0 - x);
        }
        assert_eq!(ts.transfer(0, 0, 3.0).unwrap(), 3.0);

        // q(t) = -2t: the seller's payoff is twice the money received.
        let double = UtilitySpec::PriceMapped {
            inner: Box::new(UtilitySpec::quasilinear(0.0)),
            map: PriceMap::Scale { divisor: 0.5 },
        };
        assert_eq!(double.evaluate(-1.5), 3.0);
        let ts = TwoSidedMarket::new(ids("b", 2), ids("s", 1), u, vec![vec![double.clone()], vec![double]]).unwrap();
        let reduced = reduce_two_sided(&ts).unwrap();
        for y in [0.0, 0.5, 1.0, 2.0, 3.0] {
            assert!((reduced.utility(0, 0, y) - (5.0 - y / 2.0)).abs() <= 1e-12);
        }
        let eq = solve_lowest(&reduced).unwrap();
        assert!(verify_equilibrium(&eq, EPS_EQ).passed());
        let x = ts.transfer(0, 0, eq.prices[0]).unwrap();
        assert!((x - 3.0).abs() <= 1e-9);
    }

    #[test]
    fn flat_seller_curve_is_rejected() {
        let flat = UtilitySpec::piecewise(vec![[0.0, 1.0], [1.0, 1.0], [2.0, 0.0]]);
        let r = TwoSidedMarket::new(
            vec!["b".into()],
            vec!["s".into()],
            vec![vec![UtilitySpec::quasilinear(5.0)]],
            vec![vec![flat]],
        );
        assert!(r.is_err());
    }
}
