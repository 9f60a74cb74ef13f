use proptest::prelude::*;

use unitdemand::generate::{self, Family};
use unitdemand::mechanisms::observed_prices_consistent;
use unitdemand::*;

fn small_monotone(seed: u64) -> Market {
    let families = [
        Family::Quasilinear,
        Family::PiecewiseLinear,
        Family::Budgeted,
        Family::PriceMapped,
    ];
    generate::mixed_market(&mut generate::rng(seed), 6, &families)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn auction_prices_never_fall(seed in any::<u64>()) {
        let market = small_monotone(seed);
        let trace = run_auction(&market, 0.05, 4_000).unwrap();
        for w in trace.samples.windows(2) {
            prop_assert!(w[0].0 < w[1].0);
            prop_assert!(w[0].1.le(&w[1].1, 0.0));
        }
        let changes = trace.events.windows(2).filter(|w| w[0].1 != w[1].1).count();
        prop_assert_eq!(changes, trace.demand_change_count);
    }

    #[test]
    fn quasilinear_auction_reaches_lowest_prices(seed in any::<u64>()) {
        let market = generate::quasilinear_market(&mut generate::rng(seed), 4, 4, 10);
        let step = 0.01;
        let trace = run_auction(&market, step, 100_000).unwrap();
        prop_assert!(trace.terminated);
        let low = solve_lowest(&market).unwrap();
        prop_assert!(trace.final_prices().max_diff(&low.prices) <= step + 1e-6);
    }

    #[test]
    fn ad_auction_matches_vcg(seed in any::<u64>()) {
        let config = generate::standard_ad_auction(&mut generate::rng(seed), 4, 4);
        let out = run_ad_auction(&config).unwrap();
        let vcg = welfare_report(&config, &out).vcg.unwrap();
        prop_assert!(vcg.welfare_matches && vcg.payments_match);
        prop_assert!(observed_prices_consistent(&config, &out));
        prop_assert!(verify_equilibrium(&out.equilibrium, EPS_EQ).passed());
    }

    #[test]
    fn maps_ignore_reports(seed in any::<u64>(), who in any::<usize>(), bump in 0.5..5.0f64) {
        let config = generate::standard_ad_auction(&mut generate::rng(seed), 4, 4);
        let mut changed = config.clone();
        let i = who % changed.advertisers.len();
        let adv = &mut changed.advertisers[i];
        adv.utilities = adv.utilities.iter().map(|s| utility::shift_for_bounds(s, 0.0, -bump)).collect();
        adv.standard = None;
        let a = run_ad_auction(&config).unwrap();
        let b = run_ad_auction(&changed).unwrap();
        prop_assert_eq!(a.maps, b.maps);
    }

    #[test]
    fn two_sided_transfers_realise_prices(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = generate::rng(seed);
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=3);
        let buyer = generate::integer_values(&mut rng, n, m, 10);
        let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| -(rng.gen_range(0..=3) as f64)).collect()).collect();
        let q = |c: f64| UtilitySpec::Shifted { inner: Box::new(UtilitySpec::quasilinear(c)), price_shift: 0.0, payoff_shift: 0.0 };
        let ts = TwoSidedMarket::new(
            (1..=n).map(|i| format!("b{i}")).collect(),
            (1..=m).map(|j| format!("s{j}")).collect(),
            buyer.iter().map(|r| r.iter().map(|v| UtilitySpec::quasilinear(*v)).collect()).collect(),
            cost.iter().map(|r| r.iter().map(|c| q(*c)).collect()).collect(),
        )
        .unwrap();
        let reduced = reduce_two_sided(&ts).unwrap();
        let eq = solve_lowest(&reduced).unwrap();
        prop_assert!(verify_equilibrium(&eq, EPS_EQ).passed());
        for (i, j) in eq.matching.pairs() {
            let x = ts.transfer(i, j, eq.prices[j]).unwrap();
            let seller_payoff = ts.seller_utilities[i][j].evaluate(-x);
            prop_assert!((seller_payoff - eq.prices[j]).abs() <= EPS_EQ);
            prop_assert!((ts.buyer_utilities[i][j].evaluate(x) - eq.payoffs[i]).abs() <= EPS_EQ);
            // Quasilinear on both sides: the surplus splits exactly.
            prop_assert!((eq.payoffs[i] + eq.prices[j] - (buyer[i][j] + cost[i][j])).abs() <= EPS_EQ);
        }
    }
}

#[test]
fn example_changes_never_decrease_with_more_steps() {
    let market = example1_market(11.0).unwrap();
    let mut last = 0;
    for max_steps in [2_000, 6_000, 12_000, 20_000] {
        let trace = run_auction(&market, 1e-3, max_steps).unwrap();
        assert!(!trace.terminated);
        assert!(trace.demand_change_count >= last);
        last = trace.demand_change_count;
    }
    assert!(last > 0);
}
