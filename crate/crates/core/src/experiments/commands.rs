use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{load_config, load_instance, Instance};
use super::runner::run_experiment;
use super::suites::{run_suite, Suite};
use super::ExperimentError;
use crate::auctions::{run_in_list_order, AuctionContext, AuctionOutcome, TentativePolicy};
use crate::demand::{cd_benchmark, utility, OracleKind, PriceVector};
use crate::exec::Execution;
use crate::numeric::{approx_ge, slack};
use crate::price_learning::advised_bidders;
use crate::rng::SeedTree;
use crate::valuations::ItemSet;
use crate::verifier::optimal_welfare;

/// Text for stdout plus whether every assertion the command made held.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CmdOutput {
    pub text: String,
    pub passed: bool,
}

impl CmdOutput {
    fn ok(text: String) -> Self {
        CmdOutput { text, passed: true }
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Accepts `3,4.5,0` or a JSON array.
pub fn parse_prices(text: &str) -> Result<Vec<f64>, ExperimentError> {
    let text = text.trim();
    let bad = |message: String| ExperimentError::Parse {
        what: "--prices".into(),
        message,
    };
    if text.starts_with('[') {
        return serde_json::from_str(text).map_err(|e| bad(e.to_string()));
    }
    text.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("{x:?}: {e}")))
        })
        .collect()
}

fn resolve_prices(
    inst: &Instance,
    given: Option<Vec<f64>>,
) -> Result<PriceVector, ExperimentError> {
    match given {
        Some(p) if p.len() != inst.m => Err(ExperimentError::Invalid(format!(
            "--prices: expected {} entries, found {}",
            inst.m,
            p.len()
        ))),
        Some(p) => {
            PriceVector::new(p).map_err(|e| ExperimentError::Invalid(format!("--prices: {e}")))
        }
        None => inst.prices.clone().ok_or_else(|| {
            ExperimentError::Invalid(
                "no prices: pass --prices or add \"prices\" to the instance".into(),
            )
        }),
    }
}

/// Queries one bidder's oracle and, with `verify`, checks its `(c, d)`
/// guarantee against the enumerated benchmark.
pub fn cmd_demand(
    instance: &Path,
    oracle: OracleKind,
    prices: Option<Vec<f64>>,
    bidder: usize,
    verify: bool,
) -> Result<CmdOutput, ExperimentError> {
    let inst = load_instance(instance)?;
    let p = resolve_prices(&inst, prices)?;
    let v = inst.valuations.get(bidder).ok_or_else(|| {
        ExperimentError::Invalid(format!(
            "--bidder {bidder}: instance has {} bidders",
            inst.valuations.len()
        ))
    })?;
    let res = oracle.query(v, &p, ItemSet::full(inst.m)?)?;
    let mut text = format!("{}, utility {}\n", res.chosen, res.utility);
    let mut passed = true;
    if verify {
        match oracle.guarantee(inst.m) {
            None => writeln!(text, "{oracle} has no (c, d) guarantee to verify").unwrap(),
            Some((c, d)) => {
                let benchmark = cd_benchmark(v, &p, d)?;
                let bound = c * benchmark;
                passed = approx_ge(res.utility, bound);
                let verdict = if passed { "verified" } else { "VIOLATED" };
                writeln!(
                    text,
                    "({c}, {d})-competitive: {verdict} (utility {} vs {c} * max_T v(T) - p(T)/{d} = {bound})",
                    res.utility
                )
                .unwrap();
            }
        }
    }
    Ok(CmdOutput { text, passed })
}

#[derive(Serialize)]
struct AuctionReport<'a> {
    oracle: OracleKind,
    tentative: TentativePolicy,
    outcome: &'a AuctionOutcome,
    utilities: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
}

/// One fixed-price auction with bidders visited in list order.
pub fn cmd_auction(
    instance: &Path,
    oracle: OracleKind,
    prices: Option<Vec<f64>>,
    tentative: TentativePolicy,
    seed: u64,
    verify: bool,
) -> Result<CmdOutput, ExperimentError> {
    let inst = load_instance(instance)?;
    let p = resolve_prices(&inst, prices)?;
    let items = ItemSet::full(inst.m)?;
    let bidders = advised_bidders(&inst.valuations, oracle, tentative);
    let out = run_in_list_order(
        items,
        &bidders,
        &p,
        AuctionContext::new(0, SeedTree::new(seed)),
    )?;
    let utilities = inst
        .valuations
        .iter()
        .zip(&out.allocation)
        .map(|(v, &s)| utility(v, &p, s))
        .collect();
    let mut passed = out.turns.iter().all(|t| t.follows_advice());
    let (opt, ratio) = if verify {
        let opt = optimal_welfare(&inst.valuations, items)?.opt_welfare;
        passed &= out.welfare <= opt + slack(out.welfare, opt);
        let ratio = if opt > 0.0 { out.welfare / opt } else { 1.0 };
        (Some(opt), Some(ratio))
    } else {
        (None, None)
    };
    let report = AuctionReport {
        oracle,
        tentative,
        outcome: &out,
        utilities,
        opt,
        ratio,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("finite numbers");
    text.push('\n');
    Ok(CmdOutput { text, passed })
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, contents).map_err(|e| ExperimentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Runs an experiment config. `seed` and `trials` override the file.
pub fn cmd_mechanism(
    config: &Path,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> Result<CmdOutput, ExperimentError> {
    let (mut cfg, instance) = load_config(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    let report = run_experiment(&cfg, instance.as_ref())?;
    let json = report.to_json();
    if let Some(path) = csv {
        write_file(path, &report.to_csv()?)?;
    }
    let text = match out {
        Some(path) => {
            write_file(path, &(json + "\n"))?;
            let a = &report.aggregates;
            let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |x| format!("{x:.6}"));
            format!(
                "{} trials: mean ratio {}, min ratio {}, {} early stops, {} degenerate, {} violations; report in {}\n",
                a.trials,
                fmt(a.mean_ratio),
                fmt(a.min_ratio),
                a.early_stops,
                a.degenerate_runs,
                a.violation_count,
                path.display()
            )
        }
        None => json + "\n",
    };
    Ok(CmdOutput {
        text,
        passed: report.passed(),
    })
}

/// Runs a named verification suite; one PASS/FAIL line per check.
pub fn cmd_verify(
    suite: &str,
    seed: u64,
    trials: Option<usize>,
    out: Option<&Path>,
    exec: Execution,
) -> Result<CmdOutput, ExperimentError> {
    let suite: Suite = suite.parse()?;
    let report = run_suite(suite, seed, trials, exec)?;
    let mut text = String::new();
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(text, "{tag} {suite}: {} ({})", c.name, c.detail).unwrap();
    }
    if let Some(path) = out {
        let json = serde_json::to_string_pretty(&report).expect("finite numbers");
        write_file(path, &(json + "\n"))?;
    }
    let passed = report.passed();
    Ok(if passed {
        CmdOutput::ok(text)
    } else {
        CmdOutput { text, passed }
    })
}
