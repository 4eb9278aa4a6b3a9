use serde::Serialize;

use super::generators::{random_prices, random_valuation, InstanceClass};
use super::{optimal_welfare, VerifierError};
use crate::auctions::{fixed_price_auction, AuctionContext, Bidder, TentativePolicy};
use crate::demand::{cd_benchmark_within, OracleKind, PriceVector};
use crate::exec::{self, Execution};
use crate::numeric::slack;
use crate::rng::SeedTree;
use crate::valuations::{
    check_class, supporting_prices, Family, ItemSet, Valuation, ValuationClass,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleViolation {
    pub trial: usize,
    pub m: usize,
    pub valuation: Family,
    pub prices: Vec<f64>,
    pub chosen: ItemSet,
    pub utility: f64,
    /// `c * max_T (v(T) - p(T) / d)`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub oracle: OracleKind,
    pub class: InstanceClass,
    pub trials: usize,
    pub sizes: Vec<usize>,
    /// Smallest `utility - bound` over all trials; `None` with no trials.
    pub worst_margin: Option<f64>,
    /// Smallest `utility / bound` over trials with a positive bound.
    pub worst_ratio: Option<f64>,
    pub violations: Vec<OracleViolation>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples `trials` instances of `class` (trial `t` uses `sizes[t % len]`
/// items and the substream `("trial", t)`) and checks the oracle's `(c, d)`
/// guarantee on each against the enumerated benchmark.
pub fn check_oracle_guarantee(
    oracle: OracleKind,
    class: InstanceClass,
    trials: usize,
    sizes: &[usize],
    seed: u64,
    exec: Execution,
) -> Result<OracleReport, VerifierError> {
    if sizes.is_empty() && trials > 0 {
        return Err(VerifierError::NoGuarantee(format!(
            "{oracle} with no instance sizes"
        )));
    }
    let root = SeedTree::new(seed);
    let results = exec::map_indexed(trials as u64, exec, |t| {
        let t = t as usize;
        let m = sizes[t % sizes.len()];
        let mut rng = root.stream("trial", t as u64);
        let v = random_valuation(&mut rng, class, m);
        let p = random_prices(&mut rng, &v);
        let (c, d) = oracle
            .guarantee(m)
            .ok_or_else(|| VerifierError::NoGuarantee(oracle.to_string()))?;
        let all = ItemSet::full(m)?;
        let res = oracle.query(&v, &p, all)?;
        let bound = c * cd_benchmark_within(&v, &p, d, all, Execution::Sequential)?;
        let margin = res.utility - bound;
        let violation = (margin < -slack(res.utility, bound)).then(|| OracleViolation {
            trial: t,
            m,
            valuation: v.family().clone(),
            prices: p.as_slice().to_vec(),
            chosen: res.chosen,
            utility: res.utility,
            bound,
        });
        let ratio = (bound > 0.0).then(|| res.utility / bound);
        Ok::<_, VerifierError>((margin, ratio, violation))
    });

    let mut report = OracleReport {
        oracle,
        class,
        trials,
        sizes: sizes.to_vec(),
        worst_margin: None,
        worst_ratio: None,
        violations: Vec::new(),
    };
    for r in results {
        let (margin, ratio, violation) = r?;
        report.worst_margin = Some(report.worst_margin.map_or(margin, |w: f64| w.min(margin)));
        if let Some(ratio) = ratio {
            report.worst_ratio = Some(report.worst_ratio.map_or(ratio, |w: f64| w.min(ratio)));
        }
        report.violations.extend(violation);
    }
    Ok(report)
}

/// The last-bidder bound for one bidder placed at the end of the order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub bidder: usize,
    /// `v_k(T_k)`.
    pub value: f64,
    /// `(c/2) * q(S_k \ Sold_{<k})`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpaReport {
    pub opt: f64,
    pub optimal_allocation: Vec<ItemSet>,
    pub q: Vec<f64>,
    pub c: f64,
    pub d: f64,
    pub delta: f64,
    /// The undiscounted price vector `p`; the auction posts `d * p`.
    pub base_prices: Vec<f64>,
    pub welfare: f64,
    pub sold: ItemSet,
    /// Items of the optimal allocation priced within `[delta q, q / 2]`.
    pub s: ItemSet,
    /// `(c/2) * q(S \ Sold)`.
    pub bound_unsold: f64,
    /// `min(c/2, delta d) * q(S)`.
    pub bound_mixed: f64,
    /// `min(c, d)/2 * OPT`, present when `p = q/2`.
    pub bound_motivation: Option<f64>,
    pub probes: Vec<ProbeRecord>,
    /// Every purchase was at least as good as the oracle's recommendation.
    pub follows_advice: bool,
    pub slack: f64,
    pub holds: bool,
}

/// Runs the fixed-price auction at `d * p` with advice-following bidders and
/// checks the welfare bounds against supporting prices `q` of the
/// brute-force optimum.
///
/// With `base = None`, `p = q/2` and the `min(c, d)/2 * OPT` bound is also
/// checked. The last-bidder bound is checked for every bidder by rerunning
/// the auction with that bidder moved to the end.
#[allow(clippy::too_many_arguments)]
pub fn check_fpa_lemma(
    vals: &[Valuation],
    oracle: OracleKind,
    cd: (f64, f64),
    delta: f64,
    base: Option<&PriceVector>,
    policy: TentativePolicy,
    seeds: SeedTree,
) -> Result<FpaReport, VerifierError> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(VerifierError::BadDelta(delta));
    }
    for (i, v) in vals.iter().enumerate() {
        if !check_class(v, ValuationClass::Xos)?.is_yes() {
            return Err(VerifierError::NotXos(i));
        }
    }
    let (c, d) = cd;
    let n = vals.len();
    let m = vals
        .first()
        .ok_or(VerifierError::NoBidders)?
        .universe_size();
    let all = ItemSet::full(m)?;
    let opt = optimal_welfare(vals, all)?;
    let q = supporting_prices(vals, &opt.allocation)?.q;
    let p = match base {
        Some(p) => p.clone(),
        None => q.scaled(0.5),
    };
    let posted = p.scaled(d);
    let bidders: Vec<Bidder> = vals
        .iter()
        .map(|v| Bidder::advised(v.clone(), oracle, policy))
        .collect();

    let order: Vec<usize> = (0..n).collect();
    let out = fixed_price_auction(
        all,
        &bidders,
        &order,
        &posted,
        AuctionContext::new(0, seeds),
    )?;
    let mut follows_advice = out.turns.iter().all(|t| t.follows_advice());

    let in_window = |j: usize| delta * q[j] <= p[j] && p[j] <= q[j] / 2.0;
    let s_of = |i: usize| {
        let bits = opt.allocation[i]
            .iter()
            .filter(|&j| in_window(j))
            .fold(0u32, |acc, j| acc | 1 << j);
        ItemSet::from_bits(m, bits).expect("items are in range")
    };
    let s = (0..n).fold(ItemSet::empty(m)?, |acc, i| acc.union(s_of(i)));
    let bound_unsold = c / 2.0 * q.price_of(s.difference(out.sold));
    let bound_mixed = (c / 2.0).min(delta * d) * q.price_of(s);
    let bound_motivation = base.is_none().then(|| c.min(d) / 2.0 * opt.opt_welfare);
    let tol = 1e-9 * opt.opt_welfare.abs().max(1.0);

    let mut probes = Vec::with_capacity(n);
    for (k, v) in vals.iter().enumerate() {
        let mut order: Vec<usize> = (0..n).filter(|&i| i != k).collect();
        order.push(k);
        let run = fixed_price_auction(
            all,
            &bidders,
            &order,
            &posted,
            AuctionContext::new(1 + k as u64, seeds),
        )?;
        follows_advice &= run.turns.iter().all(|t| t.follows_advice());
        let before = run.sold.difference(run.allocation[k]);
        let value = v.value_of_bits(run.allocation[k].bits());
        let bound = c / 2.0 * q.price_of(s_of(k).difference(before));
        probes.push(ProbeRecord {
            bidder: k,
            value,
            bound,
            holds: value >= bound - tol,
        });
    }

    let holds = out.welfare >= bound_unsold - tol
        && out.welfare >= bound_mixed - tol
        && bound_motivation.is_none_or(|b| out.welfare >= b - tol)
        && out.welfare <= opt.opt_welfare + tol
        && probes.iter().all(|p| p.holds)
        && follows_advice;
    Ok(FpaReport {
        opt: opt.opt_welfare,
        optimal_allocation: opt.allocation,
        q: q.as_slice().to_vec(),
        c,
        d,
        delta,
        base_prices: p.into_vec(),
        welfare: out.welfare,
        sold: out.sold,
        s,
        bound_unsold,
        bound_mixed,
        bound_motivation,
        probes,
        follows_advice,
        slack: tol,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_oracle_at_half_supporting_prices() {
        let vals = vec![
            Valuation::xos(vec![vec![2.0, 1.0, 0.0], vec![0.0, 1.0, 3.0]]).unwrap(),
            Valuation::additive(vec![1.0, 2.0, 1.0]).unwrap(),
        ];
        let r = check_fpa_lemma(
            &vals,
            OracleKind::Exact,
            (1.0, 1.0),
            0.5,
            None,
            TentativePolicy::Empty,
            SeedTree::new(1),
        )
        .unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.welfare >= r.opt / 2.0);
        assert_eq!(r.probes.len(), 2);
    }

    #[test]
    fn non_xos_is_rejected() {
        // Subadditive but not XOS: 1 on singletons and pairs, 2 on all three.
        let mut values = vec![1.0; 8];
        values[0] = 0.0;
        values[7] = 2.0;
        let v = Valuation::table(3, values).unwrap();
        let err = check_fpa_lemma(
            &[v],
            OracleKind::Exact,
            (1.0, 1.0),
            0.5,
            None,
            TentativePolicy::Empty,
            SeedTree::new(1),
        )
        .unwrap_err();
        assert_eq!(err, VerifierError::NotXos(0));
    }

    #[test]
    fn greedy_guarantee_sample_passes() {
        let r = check_oracle_guarantee(
            OracleKind::SimpleGreedy,
            InstanceClass::Submodular,
            200,
            &[2, 5, 8],
            9,
            Execution::Auto,
        )
        .unwrap();
        assert!(r.passed(), "{:?}", r.violations.first());
        assert_eq!(r.trials, 200);
    }

    #[test]
    fn reports_are_deterministic() {
        let run = |exec| {
            check_oracle_guarantee(
                OracleKind::SingleOrBundle,
                InstanceClass::Subadditive,
                60,
                &[4, 9],
                5,
                exec,
            )
            .unwrap()
        };
        assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
    }
}
