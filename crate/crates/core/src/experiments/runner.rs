use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Instance, InstanceSource, MechanismKind};
use super::ExperimentError;
use crate::auctions::{fixed_price_auction, AuctionContext, AuctionOutcome};
use crate::demand::PriceVector;
use crate::exec::{self, Execution};
use crate::numeric::{approx_eq, slack};
use crate::price_learning::{
    advised_bidders, generalized_mechanism, price_learning_mechanism, MechanismParams,
    MechanismTrace, OutcomeSource, PsiRange,
};
use crate::rng::SeedTree;
use crate::valuations::{supporting_prices, ItemSet, Valuation};
use crate::verifier::{optimal_welfare_with, random_instance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub welfare: f64,
    pub opt: f64,
    /// `welfare / opt`, or 1 when the optimum is zero.
    pub ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<OutcomeSource>,
    pub allocation: Vec<Vec<usize>>,
    pub payments: Vec<f64>,
    pub degenerate: bool,
    /// Human-readable descriptions of every invariant this trial broke.
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub trials: usize,
    pub mean_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    pub mean_welfare: Option<f64>,
    pub mean_opt: Option<f64>,
    pub violation_count: usize,
    pub early_stops: usize,
    pub degenerate_runs: usize,
}

impl Aggregates {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let n = records.len();
        let mean = |f: fn(&TrialRecord) -> f64| {
            (n > 0).then(|| records.iter().map(f).sum::<f64>() / n as f64)
        };
        Aggregates {
            trials: n,
            mean_ratio: mean(|r| r.ratio),
            min_ratio: records.iter().map(|r| r.ratio).reduce(f64::min),
            mean_welfare: mean(|r| r.welfare),
            mean_opt: mean(|r| r.opt),
            violation_count: records.iter().map(|r| r.violations.len()).sum(),
            early_stops: records
                .iter()
                .filter(|r| matches!(r.source, Some(OutcomeSource::EarlyStop { .. })))
                .count(),
            degenerate_runs: records.iter().filter(|r| r.degenerate).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub aggregates: Aggregates,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.aggregates.violation_count == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers")
    }

    /// One row per trial.
    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        #[derive(Serialize)]
        struct Row<'a> {
            trial: usize,
            welfare: f64,
            opt: f64,
            ratio: f64,
            source: &'a str,
            degenerate: bool,
            violations: usize,
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            let source = match r.source {
                None => "auction",
                Some(OutcomeSource::GrandBundle) => "grand_bundle",
                Some(OutcomeSource::EarlyStop { .. }) => "early_stop",
                Some(OutcomeSource::Final) => "final",
            };
            w.serialize(Row {
                trial: r.trial,
                welfare: r.welfare,
                opt: r.opt,
                ratio: r.ratio,
                source,
                degenerate: r.degenerate,
                violations: r.violations.len(),
            })
            .map_err(|e| ExperimentError::Invalid(format!("csv: {e}")))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| ExperimentError::Invalid(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Runs `config.trials` independent trials; trial `t` draws all of its
/// randomness from `SeedTree::new(seed).child("trial", t)`, so results do
/// not depend on the execution mode.
pub fn run_experiment(
    config: &ExperimentConfig,
    instance: Option<&Instance>,
) -> Result<Report, ExperimentError> {
    if let (InstanceSource::File(path), None) = (&config.instance, instance) {
        return Err(ExperimentError::Invalid(format!(
            "instance file {} was not loaded",
            path.display()
        )));
    }
    config.validate(instance)?;
    let root = SeedTree::new(config.seed);
    // Parallelism goes to the trial batch; each trial enumerates sequentially.
    let inner = if config.trials > 1 {
        Execution::Sequential
    } else {
        config.execution
    };
    let results = exec::map_indexed(config.trials as u64, config.execution, |t| {
        run_trial(config, instance, t as usize, root.child("trial", t), inner)
    });
    let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Report {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        aggregates: Aggregates::from_records(&records),
        records,
    })
}

fn run_trial(
    config: &ExperimentConfig,
    file: Option<&Instance>,
    trial: usize,
    seeds: SeedTree,
    inner: Execution,
) -> Result<TrialRecord, ExperimentError> {
    let (vals, given_prices) = match (&config.instance, file) {
        (InstanceSource::Generator(g), _) => (
            random_instance(&mut seeds.stream("instance", 0), g.class, g.n, g.m),
            None,
        ),
        (InstanceSource::File(_), Some(inst)) => (inst.valuations.clone(), inst.prices.clone()),
        (InstanceSource::File(_), None) => unreachable!("checked by run_experiment"),
    };
    let m = vals[0].universe_size();
    let items = ItemSet::full(m)?;
    let opt = optimal_welfare_with(&vals, items, inner)?;
    let d = config.discount(m)?;
    let bidders = advised_bidders(&vals, config.oracle, config.tentative);
    let params = MechanismParams::new(
        config.params.alpha,
        config.params.beta,
        config.params.gamma,
        d,
    );
    let mech_seeds = seeds.child("mechanism", 0);

    let mut violations = Vec::new();
    let (allocation, payments, welfare, source, degenerate) = match config.mechanism {
        MechanismKind::FixedPrice => {
            let base = match given_prices {
                Some(p) => p,
                None => supporting_prices(&vals, &opt.allocation)?.q.scaled(0.5),
            };
            let mut order: Vec<usize> = (0..vals.len()).collect();
            order.shuffle(&mut seeds.stream("order", 0));
            let out = fixed_price_auction(
                items,
                &bidders,
                &order,
                &base.scaled(d),
                AuctionContext::new(0, mech_seeds),
            )?;
            check_auction(&vals, &out, &mut violations);
            (out.allocation, out.payments, out.welfare, None, false)
        }
        MechanismKind::PriceLearning => {
            let psi = match config.psi {
                Some(psi) => psi,
                None => {
                    supporting_range(&vals, &opt.allocation).unwrap_or_else(|| config.fallback(m))
                }
            };
            let all: Vec<usize> = (0..vals.len()).collect();
            let (outcome, learning) =
                price_learning_mechanism(&bidders, &all, items, psi, params, mech_seeds)?;
            let trace = MechanismTrace {
                stat: None,
                learning: Some(learning),
                outcome,
            };
            check_trace(&vals, &trace, &mut violations);
            let o = trace.outcome;
            (o.allocation, o.payments, o.welfare, Some(o.source), false)
        }
        MechanismKind::Generalized => {
            let (_, trace) =
                generalized_mechanism(&bidders, items, params, config.fallback(m), mech_seeds)?;
            check_trace(&vals, &trace, &mut violations);
            let degenerate = trace.stat.as_ref().is_some_and(|s| s.degenerate);
            let o = trace.outcome;
            (
                o.allocation,
                o.payments,
                o.welfare,
                Some(o.source),
                degenerate,
            )
        }
    };

    check_allocation(&vals, items, &allocation, welfare, &mut violations);
    if welfare > opt.opt_welfare + slack(welfare, opt.opt_welfare) {
        violations.push(format!("welfare {welfare} exceeds OPT {}", opt.opt_welfare));
    }
    let ratio = if opt.opt_welfare > 0.0 {
        welfare / opt.opt_welfare
    } else {
        1.0
    };
    Ok(TrialRecord {
        trial,
        welfare,
        opt: opt.opt_welfare,
        ratio,
        source,
        allocation: allocation.iter().map(|s| s.iter().collect()).collect(),
        payments,
        degenerate,
        violations,
    })
}

/// Span of the nonzero supporting prices of `alloc`, if the valuations
/// admit them and any is positive.
fn supporting_range(vals: &[Valuation], alloc: &[ItemSet]) -> Option<PsiRange> {
    let q = supporting_prices(vals, alloc).ok()?.q;
    let positive = q.as_slice().iter().copied().filter(|&x| x > 0.0);
    let lo = positive.clone().reduce(f64::min)?;
    let hi = positive.reduce(f64::max)?;
    Some(PsiRange::explicit(lo, hi))
}

fn check_allocation(
    vals: &[Valuation],
    items: ItemSet,
    alloc: &[ItemSet],
    welfare: f64,
    out: &mut Vec<String>,
) {
    if alloc.len() != vals.len() {
        out.push(format!(
            "{} bundles for {} bidders",
            alloc.len(),
            vals.len()
        ));
        return;
    }
    let mut taken = 0u32;
    for (i, s) in alloc.iter().enumerate() {
        if !s.is_subset_of(items) {
            out.push(format!("bidder {i} got {s}, outside the item set"));
        }
        if taken & s.bits() != 0 {
            out.push(format!("bidder {i} got {s}, overlapping an earlier bundle"));
        }
        taken |= s.bits();
    }
    let recomputed: f64 = vals
        .iter()
        .zip(alloc)
        .map(|(v, s)| v.value_of_bits(s.bits()))
        .sum();
    if !approx_eq(recomputed, welfare) {
        out.push(format!(
            "reported welfare {welfare} but bundles are worth {recomputed}"
        ));
    }
}

fn check_auction(vals: &[Valuation], out: &AuctionOutcome, violations: &mut Vec<String>) {
    let prices = PriceVector::new(out.prices.clone()).expect("auction prices are valid");
    for (b, (s, &paid)) in out.allocation.iter().zip(&out.payments).enumerate() {
        let due = prices.price_of(*s);
        if !approx_eq(paid, due) {
            violations.push(format!("bidder {b} paid {paid} for {s} priced {due}"));
        }
    }
    for t in &out.turns {
        if !t.follows_advice() {
            violations.push(format!(
                "bidder {} bought {} with utility {} below the recommendation {:?}",
                t.bidder, t.purchased, t.purchased_utility, t.recommended_utility
            ));
        }
    }
    let welfare: f64 = vals
        .iter()
        .zip(&out.allocation)
        .map(|(v, s)| v.value_of_bits(s.bits()))
        .sum();
    if !approx_eq(welfare, out.welfare) {
        violations.push(format!(
            "auction welfare {} but bundles are worth {welfare}",
            out.welfare
        ));
    }
}

/// Checks every traced auction and that the returned outcome is the one its
/// source names.
fn check_trace(vals: &[Valuation], trace: &MechanismTrace, violations: &mut Vec<String>) {
    for out in trace.auctions() {
        check_auction(vals, out, violations);
    }
    let o = &trace.outcome;
    let matches = |a: &AuctionOutcome| a.allocation == o.allocation && a.payments == o.payments;
    let consistent = match o.source {
        OutcomeSource::GrandBundle => trace.stat.as_ref().and_then(|s| s.spa).is_some_and(|spa| {
            let winner_only = o
                .allocation
                .iter()
                .enumerate()
                .all(|(b, s)| (b == spa.winner) != s.is_empty());
            winner_only
                && o.payments[spa.winner] == spa.price
                && o.payments.iter().sum::<f64>() == spa.price
        }),
        OutcomeSource::EarlyStop { iteration, auction } => trace
            .learning
            .as_ref()
            .and_then(|l| l.iterations.get(iteration - 1))
            .and_then(|it| it.auctions.get(auction - 1))
            .is_some_and(matches),
        OutcomeSource::Final => trace
            .learning
            .as_ref()
            .and_then(|l| l.final_auction.as_ref())
            .is_some_and(matches),
    };
    if !consistent {
        violations.push(format!(
            "returned outcome does not match its source {:?}",
            o.source
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::parse_config;

    fn config(mechanism: &str, extra: &str) -> ExperimentConfig {
        parse_config(&format!(
            r#"{{"mechanism": "{mechanism}", "oracle": "exact", "trials": 20, "seed": 9,
                "instance": {{"generator": {{"class": "xos", "n": 3, "m": 4}}}}{extra}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn every_mechanism_runs_clean() {
        for mech in ["fixed_price", "price_learning", "generalized"] {
            let report = run_experiment(&config(mech, ""), None).unwrap();
            assert_eq!(report.records.len(), 20);
            assert!(
                report.passed(),
                "{mech}: {:?}",
                report.records.iter().find(|r| !r.violations.is_empty())
            );
            assert_eq!(report.aggregates, Aggregates::from_records(&report.records));
            assert!(report.aggregates.min_ratio.unwrap() >= 0.0);
        }
    }

    #[test]
    fn execution_mode_does_not_change_results() {
        let seq = run_experiment(
            &config("generalized", r#", "execution": "sequential""#),
            None,
        )
        .unwrap();
        let par =
            run_experiment(&config("generalized", r#", "execution": "parallel""#), None).unwrap();
        assert_eq!(seq.records, par.records);
    }

    #[test]
    fn report_round_trips() {
        let report = run_experiment(&config("price_learning", ""), None).unwrap();
        let back: Report = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
        let csv = report.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 21);
        assert!(csv.starts_with("trial,welfare,opt,ratio,source,degenerate,violations"));
    }

    #[test]
    fn fixed_price_on_subadditive_needs_prices() {
        let mut c = config("fixed_price", "");
        c.instance = InstanceSource::Generator(crate::experiments::GeneratorSpec {
            class: crate::verifier::InstanceClass::Subadditive,
            n: 2,
            m: 7,
        });
        c.oracle = crate::demand::OracleKind::SingleOrBundle;
        assert!(run_experiment(&c, None).is_err());
    }
}
