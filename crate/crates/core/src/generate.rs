//! Seeded random markets for tests, acceptance runs and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::market::Market;
use crate::mechanisms::{AdAuctionConfig, AdvertiserSpec, StandardParams};
use crate::utility::{Phase, PriceMap, UtilitySpec};

/// Deterministic RNG used throughout the generators.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer value matrix with entries in `0..=max_value`.
pub fn integer_values(rng: &mut impl Rng, n: usize, m: usize, max_value: u32) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..m).map(|_| rng.gen_range(0..=max_value) as f64).collect())
        .collect()
}

/// Quasilinear market with `1..=max_buyers` buyers, `1..=max_goods` goods and integer values.
pub fn quasilinear_market(rng: &mut impl Rng, max_buyers: usize, max_goods: usize, max_value: u32) -> Market {
    let n = rng.gen_range(1..=max_buyers);
    let m = rng.gen_range(1..=max_goods);
    Market::quasilinear(&integer_values(rng, n, m, max_value)).expect("quasilinear curves are valid")
}

/// Family of utility curves to draw from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Quasilinear,
    PiecewiseLinear,
    Budgeted,
    Oscillatory,
    Shifted,
    PriceMapped,
}

pub const ALL_FAMILIES: [Family; 6] = [
    Family::Quasilinear,
    Family::PiecewiseLinear,
    Family::Budgeted,
    Family::Oscillatory,
    Family::Shifted,
    Family::PriceMapped,
];

/// Random decreasing piecewise-linear curve with slopes in `[min_slope, max_slope]`.
fn piecewise(rng: &mut impl Rng, min_slope: f64, max_slope: f64) -> UtilitySpec {
    let segments = rng.gen_range(1..=3);
    let mut x = 0.0;
    let mut y = rng.gen_range(1.0..10.0_f64).round();
    let mut points = vec![[x, y]];
    for _ in 0..segments {
        let width = rng.gen_range(0.5..3.0_f64);
        let slope = rng.gen_range(min_slope..=max_slope);
        x += width;
        y -= slope * width;
        points.push([x, y]);
    }
    UtilitySpec::piecewise(points)
}

/// One curve from `family`, with values roughly in `[0, 12]`.
pub fn spec_of(rng: &mut impl Rng, family: Family) -> UtilitySpec {
    match family {
        Family::Quasilinear => UtilitySpec::quasilinear(rng.gen_range(0..=10) as f64),
        Family::PiecewiseLinear => piecewise(rng, 0.25, 3.0),
        Family::Budgeted => UtilitySpec::Budgeted {
            v: rng.gen_range(2.0..10.0),
            b: rng.gen_range(0.5..5.0),
            k: rng.gen_range(2.0..20.0),
        },
        Family::Oscillatory => UtilitySpec::oscillatory(
            rng.gen_range(6.0..12.0),
            if rng.gen_bool(0.5) { Phase::Sin } else { Phase::Cos },
        ),
        Family::Shifted => {
            let base = *[Family::Quasilinear, Family::PiecewiseLinear].choose(rng).unwrap();
            UtilitySpec::Shifted {
                inner: Box::new(spec_of(rng, base)),
                price_shift: rng.gen_range(-1.0..2.0),
                payoff_shift: rng.gen_range(-1.0..2.0),
            }
        }
        Family::PriceMapped => {
            let map = if rng.gen_bool(0.5) {
                PriceMap::Scale {
                    divisor: rng.gen_range(0.25..2.0),
                }
            } else {
                let a = rng.gen_range(0.2..1.5);
                let b = rng.gen_range(0.2..1.5);
                PriceMap::PiecewiseLinearIncreasing {
                    points: vec![[0.0, 0.0], [2.0, 2.0 * a], [4.0, 2.0 * a + 2.0 * b]],
                }
            };
            UtilitySpec::PriceMapped {
                inner: Box::new(spec_of(rng, Family::Quasilinear)),
                map,
            }
        }
    }
}

/// Market with curves drawn uniformly from `families` and `|I| + |J| <= max_total`.
pub fn mixed_market(rng: &mut impl Rng, max_total: usize, families: &[Family]) -> Market {
    let n = rng.gen_range(1..max_total);
    let m = rng.gen_range(1..=max_total - n);
    let utilities = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let family = *families.choose(rng).unwrap();
                    spec_of(rng, family)
                })
                .collect()
        })
        .collect();
    Market::from_matrix(utilities).expect("generated curves are valid")
}

/// Curves whose slopes are all at least 1 in magnitude, so grid tolerances in payoff space
/// are never wider than in price space.
pub fn steep_spec(rng: &mut impl Rng) -> UtilitySpec {
    match rng.gen_range(0..4) {
        0 => UtilitySpec::quasilinear(rng.gen_range(0..=8) as f64),
        1 => piecewise(rng, 1.0, 3.0),
        2 => UtilitySpec::Budgeted {
            v: rng.gen_range(2.0..8.0),
            b: rng.gen_range(0.5..4.0),
            k: rng.gen_range(2.0..6.0),
        },
        _ => UtilitySpec::PriceMapped {
            inner: Box::new(UtilitySpec::quasilinear(rng.gen_range(1..=8) as f64)),
            map: PriceMap::Scale {
                divisor: rng.gen_range(0.3..1.0),
            },
        },
    }
}

/// Market for the brute-force oracle: at most `max_goods` goods and steep curves.
pub fn steep_market(rng: &mut impl Rng, max_buyers: usize, max_goods: usize) -> Market {
    let n = rng.gen_range(1..=max_buyers);
    let m = rng.gen_range(1..=max_goods);
    let utilities = (0..n).map(|_| (0..m).map(|_| steep_spec(rng)).collect()).collect();
    Market::from_matrix(utilities).expect("generated curves are valid")
}

/// Ad auction where every advertiser is standard and agrees with the engine's CTRs.
pub fn standard_ad_auction(rng: &mut impl Rng, max_advertisers: usize, max_slots: usize) -> AdAuctionConfig {
    let n = rng.gen_range(1..=max_advertisers);
    let m = rng.gen_range(1..=max_slots);
    let mut advertisers = Vec::with_capacity(n);
    let mut engine_ctr = Vec::with_capacity(n);
    for i in 0..n {
        // CTRs on a quarter grid and integer values keep expected values exact in binary.
        let params: Vec<StandardParams> = (0..m)
            .map(|_| StandardParams {
                value: rng.gen_range(0..=10) as f64,
                ctr: rng.gen_range(1..=4) as f64 * 0.25,
            })
            .collect();
        engine_ctr.push(params.iter().map(|s| s.ctr).collect());
        let id = format!("ad{}", i + 1);
        advertisers.push(if rng.gen_bool(0.5) {
            AdvertiserSpec::standard_cpc(id, params)
        } else {
            AdvertiserSpec::standard_cpm(id, params)
        });
    }
    AdAuctionConfig {
        slots: (1..=m).map(|j| format!("slot{j}")).collect(),
        advertisers,
        engine_ctr,
    }
}
