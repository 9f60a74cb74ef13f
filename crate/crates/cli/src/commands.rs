use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use unitdemand::mechanisms::observed_prices_consistent;
use unitdemand::solver::DEFAULT_MAX_AGENTS;
use unitdemand::verification::{tightness_check, Side};
use unitdemand::{
    example1_market, interpolate_continuum, join, meet, oscillation_oracle, reduce_two_sided, run_ad_auction,
    run_auction, solve_both, solve_lowest, strategyproof_probe, structure_checks, vcg_oracle, verify_equilibrium,
    welfare_report, AuctionTrace, Equilibrium, Market, MisreportGrid, SolverConfig, UtilitySpec, EPS_EQ,
};

use crate::document::{load_equilibrium, load_market, EquilibriumDocument, MarketDocument};
use crate::error::{CliError, CliResult};
use crate::output::{to_exact_json, to_fixed_json};

#[derive(Debug, Parser)]
#[command(
    name = "unitdemand",
    version,
    about = "Competitive equilibria of unit-demand markets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolveSide {
    Lowest,
    Highest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LatticeOp {
    Meet,
    Join,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Tightness,
    Structure,
    Vcg,
    Strategyproof,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest or highest competitive equilibrium.
    Solve {
        #[arg(long, value_enum, default_value = "lowest")]
        side: SolveSide,
        /// Largest buyers + goods the solver accepts.
        #[arg(long, default_value_t = DEFAULT_MAX_AGENTS)]
        max_agents: usize,
        file: PathBuf,
    },
    /// Check an equilibrium file against a market.
    Verify { file: PathBuf, equilibrium: PathBuf },
    /// Meet or join of two equilibria of the same market.
    Lattice {
        #[arg(value_enum)]
        op: LatticeOp,
        file: PathBuf,
        a: PathBuf,
        b: PathBuf,
    },
    /// Equilibrium at position t in [0, 1] between the lowest and highest.
    Continuum {
        #[arg(long)]
        t: f64,
        file: PathBuf,
    },
    /// Ascending auction from zero prices.
    Auction {
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        /// CSV file for the price trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        file: PathBuf,
    },
    /// Auction on the market whose demand sets never settle.
    Example1 {
        #[arg(long = "V", default_value_t = 11.0)]
        v: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 200_000)]
        max_steps: usize,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Position auction with per-click and per-impression advertisers.
    Adauction { file: PathBuf },
    /// Solve a two-sided market through its one-sided reduction.
    ReduceTwoSided { file: PathBuf },
    /// Run one of the independent checks.
    Check {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Misreport grid spacing for the strategyproofness suite.
        #[arg(long, default_value_t = 0.5)]
        grid_step: f64,
        /// Largest misreported value for the strategyproofness suite.
        #[arg(long, default_value_t = 10.0)]
        grid_max: f64,
        file: PathBuf,
    },
}

/// Runs one command, writing its report to `out`. Failed checks write the report before
/// returning [`CliError::CheckFailed`].
pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let text = match &cli.command {
        Command::Solve { side, max_agents, file } => solve(file, *side, *max_agents)?,
        Command::Verify { file, equilibrium } => {
            let market = Arc::new(load_market(file)?.market()?);
            let eq = load_equilibrium(equilibrium, market)?;
            let verdict = verify_equilibrium(&eq, EPS_EQ);
            let report = json!({
                "passed": verdict.passed(),
                "violations": verdict.violations.iter().map(|v| json!({
                    "condition": v.condition.to_string(),
                    "buyer": v.buyer.map(|i| eq.market.buyers()[i].clone()),
                    "good": v.good.map(|j| eq.market.goods()[j].clone()),
                    "magnitude": v.magnitude,
                })).collect::<Vec<_>>(),
            });
            return finish(out, &report, verdict.passed(), "equilibrium failed verification");
        }
        Command::Lattice { op, file, a, b } => {
            let market = Arc::new(load_market(file)?.market()?);
            let x = load_equilibrium(a, market.clone())?;
            let y = load_equilibrium(b, market)?;
            let (eq, side) = match op {
                LatticeOp::Meet => (meet(&x, &y)?, "meet"),
                LatticeOp::Join => (join(&x, &y)?, "join"),
            };
            to_fixed_json(&EquilibriumDocument::new(&eq, side))
        }
        Command::Continuum { t, file } => {
            let eq = interpolate_continuum(&load_market(file)?.market()?, *t)?;
            to_fixed_json(&EquilibriumDocument::new(&eq, "continuum"))
        }
        Command::Auction {
            step,
            max_steps,
            trace,
            file,
        } => {
            let market = load_market(file)?.market()?;
            let result = run_auction(&market, *step, *max_steps)?;
            write_trace(trace.as_deref(), &result)?;
            to_fixed_json(&auction_summary(&market, &result))
        }
        Command::Example1 {
            v,
            step,
            max_steps,
            trace,
        } => {
            let market = example1_market(*v)?;
            let result = run_auction(&market, *step, *max_steps)?;
            write_trace(trace.as_deref(), &result)?;
            let mut summary = auction_summary(&market, &result);
            let top = result.max_price();
            summary["oscillation_oracle"] = oscillation_oracle(*v, top).map_or(Value::Null, |c| json!(c));
            to_fixed_json(&summary)
        }
        Command::Adauction { file } => adauction(file)?,
        Command::ReduceTwoSided { file } => {
            let ts = load_market(file)?.two_sided_market()?;
            let reduced = reduce_two_sided(&ts)?;
            let eq = solve_lowest(&reduced)?;
            let transfers = eq
                .matching
                .0
                .iter()
                .enumerate()
                .map(|(i, g)| g.map(|j| ts.transfer(i, j, eq.prices[j])).transpose())
                .collect::<unitdemand::Result<Vec<_>>>()?;
            let market_json: Value = serde_json::from_str(&to_exact_json(&MarketDocument::from_market(&reduced)))
                .expect("document JSON parses");
            to_fixed_json(&json!({
                "market": market_json,
                "equilibrium": EquilibriumDocument::new(&eq, "lowest"),
                "transfers": transfers,
            }))
        }
        Command::Check {
            suite,
            grid_step,
            grid_max,
            file,
        } => {
            let market = load_market(file)?.market()?;
            let (report, passed) = check(&market, *suite, *grid_step, *grid_max)?;
            return finish(out, &report, passed, "check failed");
        }
    };
    write_out(out, &text)
}

fn write_out(out: &mut dyn Write, text: &str) -> CliResult<()> {
    writeln!(out, "{text}").map_err(|e| CliError::io("<stdout>", e))
}

fn finish(out: &mut dyn Write, report: &Value, passed: bool, failure: &str) -> CliResult<()> {
    write_out(out, &to_fixed_json(report))?;
    if passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failure.to_string()))
    }
}

fn solve(file: &Path, side: SolveSide, max_agents: usize) -> CliResult<String> {
    let market = load_market(file)?.market()?;
    let (low, high) = solve_both(&market, SolverConfig { max_agents })?;
    let doc = match side {
        SolveSide::Lowest => EquilibriumDocument::new(&low, "lowest"),
        SolveSide::Highest => EquilibriumDocument::new(&high, "highest"),
    };
    Ok(to_fixed_json(&doc))
}

fn write_trace(path: Option<&Path>, trace: &AuctionTrace) -> CliResult<()> {
    if let Some(path) = path {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = BufWriter::new(file);
        trace.write_csv(&mut w).map_err(|e| CliError::io(path, e))?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn auction_summary(market: &Market, trace: &AuctionTrace) -> Value {
    json!({
        "terminated": trace.terminated,
        "steps": trace.steps,
        "demand_change_count": trace.demand_change_count,
        "goods": market.goods(),
        "final_prices": trace.final_prices().0,
        "max_price": trace.max_price(),
    })
}

fn adauction(file: &Path) -> CliResult<String> {
    let config = load_market(file)?.ad_config()?;
    let outcome = run_ad_auction(&config)?;
    let report = welfare_report(&config, &outcome);
    let slot = |j: usize| config.slots[j].clone();
    let vcg = report.vcg.as_ref().map(|v| {
        json!({
            "oracle_welfare": v.oracle.welfare,
            "assignment_welfare": v.assignment_welfare,
            "welfare_matches": v.welfare_matches,
            "payments_match": v.payments_match,
            "payments": v.oracle.payments,
        })
    });
    Ok(to_fixed_json(&json!({
        "advertisers": config.advertisers.iter().map(|a| a.id.clone()).collect::<Vec<_>>(),
        "assignment": outcome.assignment.iter().map(|s| s.map(slot)).collect::<Vec<_>>(),
        "base_prices": outcome.base_prices.0,
        "observed": outcome.observed.iter().map(|o| o.map(|p| json!({
            "amount": p.amount,
            "unit": p.unit.to_string(),
        }))).collect::<Vec<_>>(),
        "observed_consistent": observed_prices_consistent(&config, &outcome),
        "revenue": report.revenue,
        "advertiser_utilities": report.advertiser_utilities,
        "coalition_welfare": report.coalition_welfare,
        "vcg": vcg,
    })))
}

fn quasilinear_values(market: &Market) -> CliResult<Vec<Vec<f64>>> {
    market
        .utilities()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, spec)| match spec {
                    UtilitySpec::Quasilinear { v } => Ok(*v),
                    _ => Err(CliError::Validation(format!(
                        "the vcg suite needs quasilinear curves; buyer {}, good {} is not",
                        market.buyers()[i],
                        market.goods()[j]
                    ))),
                })
                .collect()
        })
        .collect()
}

fn check(market: &Market, suite: Suite, grid_step: f64, grid_max: f64) -> CliResult<(Value, bool)> {
    let ids = |xs: &[usize], names: &[String]| xs.iter().map(|&k| names[k].clone()).collect::<Vec<_>>();
    match suite {
        Suite::Tightness => {
            let (low, high) = solve_both(market, SolverConfig::default())?;
            let lw = tightness_check(&low, Side::Lowest)?.witness;
            let hw = tightness_check(&high, Side::Highest)?.witness;
            let passed = lw.is_none() && hw.is_none();
            let report = json!({
                "suite": "tightness",
                "passed": passed,
                "lowest_witness": lw.map(|w| ids(&w, market.goods())),
                "highest_witness": hw.map(|w| ids(&w, market.buyers())),
            });
            Ok((report, passed))
        }
        Suite::Structure => {
            let (low, high) = solve_both(market, SolverConfig::default())?;
            let mut family: Vec<Equilibrium> = vec![low, high];
            for t in [0.25, 0.5, 0.75] {
                family.push(interpolate_continuum(market, t)?);
            }
            let verdict = structure_checks(&family)?;
            let report = json!({
                "suite": "structure",
                "passed": verdict.passed(),
                "equilibria": ["lowest", "highest", "t=0.25", "t=0.5", "t=0.75"],
                "violations": verdict.violations.iter().map(|v| json!({
                    "rule": format!("{:?}", v.rule).to_lowercase(),
                    "pair": [v.pair.0, v.pair.1],
                    "buyer": v.buyer.map(|i| market.buyers()[i].clone()),
                    "good": v.good.map(|j| market.goods()[j].clone()),
                })).collect::<Vec<_>>(),
            });
            Ok((report, verdict.passed()))
        }
        Suite::Vcg => {
            let values = quasilinear_values(market)?;
            let low = solve_lowest(market)?;
            let vcg = vcg_oracle(&values);
            let expected: Vec<f64> = (0..market.num_goods())
                .map(|j| {
                    vcg.assignment
                        .iter()
                        .position(|g| *g == Some(j))
                        .map_or(0.0, |i| vcg.payments[i])
                })
                .collect();
            let gap = low
                .prices
                .iter()
                .zip(&expected)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let passed = gap <= EPS_EQ;
            let report = json!({
                "suite": "vcg",
                "passed": passed,
                "lowest_prices": low.prices.0,
                "vcg_prices": expected,
                "max_difference": gap,
            });
            Ok((report, passed))
        }
        Suite::Strategyproof => {
            let grid = MisreportGrid::range(0.0, grid_max, grid_step);
            let n = market.num_buyers();
            let mut coalitions: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
            for a in 0..n {
                for b in a + 1..n {
                    coalitions.push(vec![a, b]);
                }
            }
            let mut tried = 0;
            let mut failures = Vec::new();
            for c in &coalitions {
                let verdict = strategyproof_probe(market, c, &grid)?;
                tried += verdict.misreports_tried;
                if let Some(w) = verdict.witness {
                    failures.push(json!({
                        "coalition": ids(c, market.buyers()),
                        "reports": w.reports,
                        "truthful": w.truthful,
                        "deviated": w.deviated,
                    }));
                }
            }
            let passed = failures.is_empty();
            let report = json!({
                "suite": "strategyproof",
                "passed": passed,
                "coalitions": coalitions.len(),
                "misreports_tried": tried,
                "failures": failures,
            });
            Ok((report, passed))
        }
    }
}
