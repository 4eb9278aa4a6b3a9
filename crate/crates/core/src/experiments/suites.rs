use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::auctions::TentativePolicy;
use crate::demand::{demand_via_welfare, exact_demand, OracleKind, PriceVector};
use crate::exec::{self, Execution};
use crate::price_learning::{
    advised_bidders, build_price_tree, generalized_mechanism, next_prices, MechanismParams, Parity,
    PsiRange, TreeParams, NODE_PRICE_TOLERANCE,
};
use crate::rng::SeedTree;
use crate::valuations::{supporting_prices, ItemSet};
use crate::verifier::{
    check_fpa_lemma, check_oracle_guarantee, mim_counterexample, optimal_welfare_among,
    optimal_welfare_with, random_instance, random_prices, random_valuation, InstanceClass,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Oracles,
    FpaLemma,
    Tree,
    PsiRange,
    DemandWelfareEquiv,
    Counterexamples,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Oracles,
        Suite::FpaLemma,
        Suite::Tree,
        Suite::PsiRange,
        Suite::DemandWelfareEquiv,
        Suite::Counterexamples,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracles => "oracles",
            Suite::FpaLemma => "fpa_lemma",
            Suite::Tree => "tree",
            Suite::PsiRange => "psi_range",
            Suite::DemandWelfareEquiv => "demand_welfare_equiv",
            Suite::Counterexamples => "counterexamples",
        }
    }

    /// Trial count used when the caller does not pick one.
    pub fn default_trials(self) -> usize {
        match self {
            Suite::Oracles => 10_000,
            Suite::Tree | Suite::Counterexamples => 0,
            _ => 1_000,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| ExperimentError::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run_suite(
    suite: Suite,
    seed: u64,
    trials: Option<usize>,
    exec: Execution,
) -> Result<SuiteReport, ExperimentError> {
    let trials = trials.unwrap_or(suite.default_trials());
    let checks = match suite {
        Suite::Oracles => oracle_checks(seed, trials, exec)?,
        Suite::FpaLemma => fpa_checks(seed, trials, exec)?,
        Suite::Tree => tree_checks()?,
        Suite::PsiRange => psi_checks(seed, trials, exec)?,
        Suite::DemandWelfareEquiv => vec![equivalence_check(seed, trials, exec)?],
        Suite::Counterexamples => vec![counterexample_check()?],
    };
    Ok(SuiteReport {
        suite,
        seed,
        trials,
        checks,
    })
}

fn oracle_checks(
    seed: u64,
    trials: usize,
    exec: Execution,
) -> Result<Vec<CheckResult>, ExperimentError> {
    let small: Vec<usize> = (2..=8).collect();
    let cases = [
        (
            OracleKind::SimpleGreedy,
            InstanceClass::Submodular,
            small.clone(),
        ),
        (
            OracleKind::SingleOrBundle,
            InstanceClass::Subadditive,
            vec![4, 9, 16],
        ),
        (OracleKind::MeetInMiddle, InstanceClass::Submodular, small),
    ];
    cases
        .into_iter()
        .map(|(oracle, class, sizes)| {
            let r = check_oracle_guarantee(oracle, class, trials, &sizes, seed, exec)?;
            let detail = format!(
                "{} trials at m in {:?}: {} violations, worst utility/bound {}",
                r.trials,
                r.sizes,
                r.violations.len(),
                r.worst_ratio.map_or("n/a".into(), |w| format!("{w:.6}")),
            );
            Ok(CheckResult::new(
                format!("{oracle} on {class:?}"),
                r.passed(),
                detail,
            ))
        })
        .collect()
}

/// Exact demand and the welfare reduction agree on every sampled instance.
fn equivalence_check(
    seed: u64,
    trials: usize,
    exec: Execution,
) -> Result<CheckResult, ExperimentError> {
    const CLASSES: [InstanceClass; 6] = [
        InstanceClass::Additive,
        InstanceClass::UnitDemand,
        InstanceClass::BudgetAdditive,
        InstanceClass::Submodular,
        InstanceClass::Xos,
        InstanceClass::Subadditive,
    ];
    let root = SeedTree::new(seed);
    let gaps = exec::map_indexed(trials as u64, exec, |t| {
        let mut rng = root.stream("trial", t);
        let m = rng.gen_range(1..=8);
        let v = random_valuation(&mut rng, CLASSES[t as usize % CLASSES.len()], m);
        let p = random_prices(&mut rng, &v);
        let a = exact_demand(&v, &p)?;
        let b = demand_via_welfare(&v, &p)?;
        Ok::<_, ExperimentError>((a.utility - b.utility).abs())
    });
    let mut worst = 0.0f64;
    let mut bad = 0;
    for g in gaps {
        let g = g?;
        worst = worst.max(g);
        bad += usize::from(g > 1e-12);
    }
    Ok(CheckResult::new(
        "exact demand equals demand via welfare",
        bad == 0,
        format!("{trials} trials, {bad} disagreements, largest gap {worst:e}"),
    ))
}

fn fpa_checks(
    seed: u64,
    trials: usize,
    exec: Execution,
) -> Result<Vec<CheckResult>, ExperimentError> {
    const POLICIES: [TentativePolicy; 3] = [
        TentativePolicy::Empty,
        TentativePolicy::Random,
        TentativePolicy::AdversarialWorst,
    ];
    let root = SeedTree::new(seed);
    // Each trial yields (motivation exact, motivation greedy, delta 1/4, delta 1/2).
    let results = exec::map_indexed(trials as u64, exec, |t| {
        let seeds = root.child("trial", t);
        let mut rng = seeds.stream("instance", 0);
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=8);
        let policy = POLICIES[t as usize % POLICIES.len()];
        let xos = random_instance(&mut rng, InstanceClass::Xos, n, m);
        let submod = random_instance(&mut rng, InstanceClass::Submodular, n, m);
        let exact = check_fpa_lemma(
            &xos,
            OracleKind::Exact,
            (1.0, 1.0),
            0.5,
            None,
            policy,
            seeds.child("exact", 0),
        )?;
        let greedy = check_fpa_lemma(
            &submod,
            OracleKind::SimpleGreedy,
            (0.5, 0.5),
            0.5,
            None,
            policy,
            seeds.child("greedy", 0),
        )?;
        let q = &exact.q;
        // Base prices scattered around the window [delta q, q/2].
        let base: Vec<f64> = q.iter().map(|&x| x * rng.gen_range(0.0..0.6)).collect();
        let base = PriceVector::new(base)?;
        let mut general = Vec::with_capacity(2);
        for (k, delta) in [0.25, 0.5].into_iter().enumerate() {
            general.push(check_fpa_lemma(
                &xos,
                OracleKind::Exact,
                (1.0, 1.0),
                delta,
                Some(&base),
                policy,
                seeds.child("general", k as u64),
            )?);
        }
        Ok::<_, ExperimentError>([exact, greedy, general.remove(0), general.remove(0)])
    });
    let names = [
        "exact oracle on XOS at q/2: welfare >= OPT/2",
        "simple_greedy on submodular at q/4: welfare >= OPT/4",
        "delta = 1/4: both branches and last-bidder bound",
        "delta = 1/2: both branches and last-bidder bound",
    ];
    let mut failed = [0usize; 4];
    let mut worst = [f64::INFINITY; 4];
    let mut probes = 0;
    for r in results {
        for (k, report) in r?.into_iter().enumerate() {
            failed[k] += usize::from(!report.holds);
            probes += report.probes.len();
            let bound = report
                .bound_motivation
                .unwrap_or(report.bound_unsold.max(report.bound_mixed));
            worst[k] = worst[k].min(report.welfare - bound);
        }
    }
    Ok(names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            CheckResult::new(
                *name,
                failed[k] == 0,
                format!(
                    "{trials} instances, {} failures, smallest welfare - bound {:.3e}",
                    failed[k], worst[k]
                ),
            )
        })
        .chain(std::iter::once(CheckResult::new(
            "probe bidders ran",
            trials == 0 || probes > 0,
            format!("{probes} last-bidder probes"),
        )))
        .collect())
}

fn tree_checks() -> Result<Vec<CheckResult>, ExperimentError> {
    let rel = |a: f64, b: f64| (a - b).abs() <= NODE_PRICE_TOLERANCE * a.abs().max(b.abs());
    let mut checks = Vec::new();

    let params = TreeParams::new(2, 3, None, 1.0, 1.0, Parity::Even)?;
    let tree = build_price_tree(params)?;
    let g = params.gamma;
    let leaves_ok = tree.level_prices(4).is_some_and(|l| {
        l.len() == 8
            && l.iter()
                .enumerate()
                .all(|(k, &p)| rel(p, g.powi(2 * k as i32)))
    });
    let children_ok = tree
        .level_prices(2)
        .is_some_and(|l| l.len() == 2 && rel(l[0], 1.0) && rel(l[1], g.powi(8)));
    checks.push(CheckResult::new(
        "alpha=2 beta=3 tree: leaves 1, g^2, .., g^14; root children 1 and g^8",
        leaves_ok && children_ok && rel(tree.root_price(), 1.0) && tree.node_count() == 15,
        format!("gamma = {g}, {} nodes", tree.node_count()),
    ));

    let mut nodes = 0;
    let mut mismatches = Vec::new();
    let mut ratio_failures = Vec::new();
    for alpha in 2..=3 {
        for beta in 1..=3 {
            for parity in [Parity::Even, Parity::Odd] {
                let params = TreeParams::new(alpha, beta, None, 1.0, 1.0, parity)?;
                let tree = build_price_tree(params)?;
                for level in 1..=beta + 1 {
                    let prices = tree.level_prices(level).expect("level exists");
                    let step = params
                        .gamma
                        .powi(2 * alpha.pow((beta + 1 - level) as u32) as i32);
                    if prices.windows(2).any(|w| !rel(w[1] / w[0], step)) {
                        ratio_failures.push(format!(
                            "alpha={alpha} beta={beta} {parity:?} level {level}"
                        ));
                    }
                    if level > beta {
                        continue;
                    }
                    for (pos, &price) in prices.iter().enumerate() {
                        let p = PriceVector::uniform(2, price)?;
                        for j in 1..=alpha {
                            nodes += 1;
                            let child = tree.child(level, pos, j).expect("child exists");
                            let want = tree.node_price(level + 1, child).expect("child exists");
                            let got = next_prices(&tree, level, j, &p)?;
                            if !got.as_slice().iter().all(|&x| rel(x, want)) {
                                mismatches.push(format!(
                                    "alpha={alpha} beta={beta} {parity:?} ({level},{pos}) j={j}"
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    checks.push(CheckResult::new(
        "adjacent prices on a level differ by gamma^(2 alpha^(beta+1-level))",
        ratio_failures.is_empty(),
        if ratio_failures.is_empty() {
            "alpha, beta <= 3, both parities".to_string()
        } else {
            ratio_failures.join("; ")
        },
    ));
    checks.push(CheckResult::new(
        "next_prices agrees with child lookup",
        mismatches.is_empty(),
        format!(
            "{nodes} (node, branch) pairs, {} mismatches{}",
            mismatches.len(),
            if mismatches.is_empty() {
                String::new()
            } else {
                format!(": {}", mismatches.join("; "))
            }
        ),
    ));
    Ok(checks)
}

fn psi_checks(
    seed: u64,
    trials: usize,
    exec: Execution,
) -> Result<Vec<CheckResult>, ExperimentError> {
    let example = PsiRange::from_spa(8.0, 2);
    let mut checks = vec![CheckResult::new(
        "SPA = 8, m = 2 gives [0.5, 64]",
        example.psi_min == 0.5 && example.psi_max == 64.0,
        format!("[{}, {}]", example.psi_min, example.psi_max),
    )];

    #[derive(Default)]
    struct Tally {
        runs: usize,
        formula: usize,
        ratio: usize,
        eligible: usize,
        correct: usize,
        mass: usize,
    }
    let root = SeedTree::new(seed);
    let results = exec::map_indexed(trials as u64, exec, |t| {
        let seeds = root.child("trial", t);
        let mut rng = seeds.stream("instance", 0);
        let n = rng.gen_range(2..=4);
        let m = rng.gen_range(1..=8);
        let vals = random_instance(&mut rng, InstanceClass::Xos, n, m);
        let items = ItemSet::full(m)?;
        let bidders = advised_bidders(&vals, OracleKind::Exact, TentativePolicy::Empty);
        let params = MechanismParams::new(2, 2, None, 1.0);
        let fallback = PsiRange::explicit(1.0, 16.0 * (m as f64).powi(3));
        let (_, trace) = generalized_mechanism(
            &bidders,
            items,
            params,
            fallback,
            seeds.child("mechanism", 0),
        )?;
        let stat = trace
            .stat
            .expect("generalized runs record the statistics phase");
        let mut tally = Tally::default();
        let Some(spa) = stat.spa.filter(|_| !stat.degenerate) else {
            return Ok::<_, ExperimentError>(tally);
        };
        tally.runs = 1;
        let mf = m as f64;
        let psi = stat.psi;
        tally.formula = usize::from(
            psi.psi_min == spa.welfare / (4.0 * mf * mf) && psi.psi_max == 4.0 * mf * spa.welfare,
        );
        let target = 16.0 * mf.powi(3);
        tally.ratio = usize::from((psi.psi_max / psi.psi_min - target).abs() <= 1e-12 * target);

        let opt = optimal_welfare_with(&vals, items, Execution::Sequential)?.opt_welfare;
        let opt_stat = optimal_welfare_among(&vals, &stat.n_stat, items)?.opt_welfare;
        let mech = optimal_welfare_among(&vals, &stat.n_mech, items)?;
        if opt_stat >= opt / 4.0 && mech.opt_welfare >= opt / 4.0 {
            tally.eligible = 1;
            let om = mech.opt_welfare;
            tally.correct = usize::from(psi.psi_min <= om / (mf * mf) && psi.psi_max >= om);
            let q = supporting_prices(&vals, &mech.allocation)?.q;
            let mass: f64 = q
                .as_slice()
                .iter()
                .filter(|&&x| psi.psi_min <= x && x <= psi.psi_max)
                .sum();
            let need = (1.0 - 1.0 / mf) * om;
            tally.mass = usize::from(mass >= need - 1e-9 * om.max(1.0));
        }
        Ok(tally)
    });
    let mut total = Tally::default();
    for r in results {
        let r = r?;
        total.runs += r.runs;
        total.formula += r.formula;
        total.ratio += r.ratio;
        total.eligible += r.eligible;
        total.correct += r.correct;
        total.mass += r.mass;
    }
    checks.push(CheckResult::new(
        "psi_min = SPA/(4m^2), psi_max = 4m SPA exactly",
        total.formula == total.runs,
        format!("{} of {} non-degenerate runs", total.formula, total.runs),
    ));
    checks.push(CheckResult::new(
        "psi_max / psi_min = 16 m^3",
        total.ratio == total.runs,
        format!("{} of {} runs", total.ratio, total.runs),
    ));
    checks.push(CheckResult::new(
        "range is correct for the mechanism group",
        total.correct == total.eligible && (trials == 0 || total.eligible > 0),
        format!(
            "{} of {} runs meeting both quarter-OPT conditions",
            total.correct, total.eligible
        ),
    ));
    checks.push(CheckResult::new(
        "in-range supporting prices carry (1 - 1/m) OPT",
        total.mass == total.eligible,
        format!("{} of {} eligible runs", total.mass, total.eligible),
    ));
    Ok(checks)
}

fn counterexample_check() -> Result<CheckResult, ExperimentError> {
    let r = mim_counterexample(0.25)?;
    let last = r.items - 1;
    let passed = r.k == 16.0
        && r.items == 62
        && r.chosen == [last]
        && r.utility == 0.25
        && r.submodular
        && r.violated;
    Ok(CheckResult::new(
        "meet_in_middle at undiscounted prices, eps = 1/4",
        passed,
        format!(
            "K = {}, N = {}, returns {:?} with utility {}, discounted utility {} < target {}",
            r.k, r.items, r.chosen, r.utility, r.discounted_utility, r.target
        ),
    ))
}
