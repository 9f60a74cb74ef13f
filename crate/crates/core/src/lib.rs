//! Competitive equilibria of unit-demand matching markets with general utilities.
//!
//! Buyers want at most one good each and value goods through arbitrary continuous,
//! decreasing payoff-vs-price curves. The crate computes the lowest and highest
//! equilibria exactly by induction over sub-markets, combines equilibria through the
//! lattice operations, simulates the ascending auction and runs the ad-auction mechanism.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auction;
pub mod error;
pub mod generate;
pub mod lattice;
pub mod market;
pub mod matching;
pub mod mechanisms;
pub mod solver;
pub mod utility;
pub mod verification;

pub use auction::{
    example1_market, oscillation_oracle, over_demanded_set, run_auction, run_auction_with, AuctionConfig, AuctionTrace,
};
pub use error::{Error, Result};
pub use lattice::{interpolate_continuum, join, meet};
pub use market::{
    demand_set_of_buyers, demand_set_of_goods, induced_payoffs, induced_prices, tight_graph, verify_equilibrium,
    Condition, Equilibrium, Market, Matching, PayoffVector, PriceVector, TightGraph, Verdict, Violation, EPS_EQ,
};
pub use mechanisms::{
    discriminated_market, reduce_two_sided, run_ad_auction, welfare_report, AdAuctionConfig, AdOutcome, AdvertiserSpec,
    PaymentMode, StandardParams, TwoSidedMarket, WelfareReport,
};
pub use solver::{
    critical_alternating_path, critical_alternating_path_from_buyer, insert_buyer, pad_to_square, solve_both,
    solve_highest, solve_lowest, solve_lowest_bounded, supporting_matching, BoundEnvelope, PathNode, Solver,
    SolverConfig, SubmarketKey,
};
pub use utility::{apply_price_map, shift_for_bounds, Phase, PriceMap, SpecError, UtilitySpec, EPS_INV};
pub use verification::{
    brute_force_lowest, strategyproof_probe, structure_checks, tightness_check, vcg_oracle, MisreportGrid, Side,
    VcgOutcome,
};
