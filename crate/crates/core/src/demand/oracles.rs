use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DemandError, PriceVector};
use crate::exec::{self, Execution};
use crate::numeric::approx_ge;
use crate::valuations::{ItemSet, Valuation};
use crate::verifier::optimal_welfare;

/// Enumeration cap for exact demand and the `(c, d)` benchmark.
pub const EXACT_MAX_ITEMS: usize = 20;
/// Enumeration cap for the two-bidder welfare reduction.
pub const VIA_WELFARE_MAX_ITEMS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Exact,
    SimpleGreedy,
    SingleOrBundle,
    MeetInMiddle,
    #[serde(rename = "demand_via_welfare")]
    ViaWelfare,
    /// Always recommends the empty set.
    Null,
}

impl OracleKind {
    pub const ALL: [OracleKind; 6] = [
        OracleKind::Exact,
        OracleKind::SimpleGreedy,
        OracleKind::SingleOrBundle,
        OracleKind::MeetInMiddle,
        OracleKind::ViaWelfare,
        OracleKind::Null,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Exact => "exact",
            OracleKind::SimpleGreedy => "simple_greedy",
            OracleKind::SingleOrBundle => "single_or_bundle",
            OracleKind::MeetInMiddle => "meet_in_middle",
            OracleKind::ViaWelfare => "demand_via_welfare",
            OracleKind::Null => "null",
        }
    }

    /// Proven `(c, d)` for queries over `m` available items, valid on the
    /// class the algorithm targets (submodular for the greedy and
    /// meet-in-the-middle oracles, subadditive for single-or-bundle).
    pub fn guarantee(self, m: usize) -> Option<(f64, f64)> {
        match self {
            OracleKind::Exact | OracleKind::ViaWelfare => Some((1.0, 1.0)),
            OracleKind::SimpleGreedy | OracleKind::MeetInMiddle => Some((0.5, 0.5)),
            OracleKind::SingleOrBundle => {
                let root = (m.max(1) as f64).sqrt();
                Some((1.0 / root, 1.0 / (1.0 + root)))
            }
            OracleKind::Null => None,
        }
    }

    /// Runs the oracle on the items in `available`.
    pub fn query(
        self,
        v: &Valuation,
        p: &PriceVector,
        available: ItemSet,
    ) -> Result<DemandResult, DemandError> {
        match self {
            OracleKind::Exact => exact_demand_within(v, p, available),
            OracleKind::SimpleGreedy => simple_greedy_within(v, p, available),
            OracleKind::SingleOrBundle => single_or_bundle_within(v, p, available),
            OracleKind::MeetInMiddle => meet_in_middle_within(v, p, available),
            OracleKind::ViaWelfare => via_welfare_within(v, p, available),
            OracleKind::Null => {
                check_inputs(v, p, available)?;
                let nothing = ItemSet::from_bits_unchecked(v.universe_size(), 0);
                Ok(DemandResult::new(v, p, nothing, self))
            }
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleKind {
    type Err = DemandError;

    fn from_str(s: &str) -> Result<Self, DemandError> {
        OracleKind::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| DemandError::UnknownOracle(s.to_string()))
    }
}

/// A recommended bundle together with its utility `v(S) - p(S)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemandResult {
    pub chosen: ItemSet,
    pub utility: f64,
    pub oracle: OracleKind,
}

impl DemandResult {
    fn new(v: &Valuation, p: &PriceVector, chosen: ItemSet, oracle: OracleKind) -> Self {
        DemandResult {
            chosen,
            utility: utility(v, p, chosen),
            oracle,
        }
    }
}

/// `v(S) - p(S)`; inputs must share a universe.
#[inline]
pub fn utility(v: &Valuation, p: &PriceVector, set: ItemSet) -> f64 {
    v.value_of_bits(set.bits()) - p.price_of_bits(set.bits())
}

fn check_inputs(v: &Valuation, p: &PriceVector, available: ItemSet) -> Result<(), DemandError> {
    v.check_set(available)?;
    if p.universe_size() != v.universe_size() {
        return Err(DemandError::PriceUniverse {
            expected: v.universe_size(),
            found: p.universe_size(),
        });
    }
    Ok(())
}

fn check_cap(available: ItemSet, max: usize) -> Result<(), DemandError> {
    if available.len() > max {
        return Err(DemandError::TooManyItems {
            items: available.len(),
            max,
        });
    }
    Ok(())
}

fn full(v: &Valuation) -> ItemSet {
    ItemSet::full(v.universe_size()).expect("valuation universe is valid")
}

/// A utility-maximizing bundle by enumeration. Ties go to fewer items,
/// then to the numerically smallest bitmask.
pub fn exact_demand(v: &Valuation, p: &PriceVector) -> Result<DemandResult, DemandError> {
    exact_demand_within(v, p, full(v))
}

pub fn exact_demand_within(
    v: &Valuation,
    p: &PriceVector,
    available: ItemSet,
) -> Result<DemandResult, DemandError> {
    exact_demand_with(v, p, available, Execution::Auto)
}

pub fn exact_demand_with(
    v: &Valuation,
    p: &PriceVector,
    available: ItemSet,
    exec: Execution,
) -> Result<DemandResult, DemandError> {
    check_inputs(v, p, available)?;
    check_cap(available, EXACT_MAX_ITEMS)?;
    let (bits, _) = exec::argmax_over_submasks(available.bits(), exec, |b| {
        v.value_of_bits(b) - p.price_of_bits(b)
    });
    let chosen = ItemSet::from_bits_unchecked(v.universe_size(), bits);
    Ok(DemandResult::new(v, p, chosen, OracleKind::Exact))
}

/// `max_T { v(T) - p(T) / d }` over every subset.
pub fn cd_benchmark(v: &Valuation, p: &PriceVector, d: f64) -> Result<f64, DemandError> {
    cd_benchmark_within(v, p, d, full(v), Execution::Auto)
}

pub fn cd_benchmark_within(
    v: &Valuation,
    p: &PriceVector,
    d: f64,
    available: ItemSet,
    exec: Execution,
) -> Result<f64, DemandError> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(DemandError::BadDiscount(d));
    }
    check_inputs(v, p, available)?;
    check_cap(available, EXACT_MAX_ITEMS)?;
    Ok(exec::max_over_submasks(available.bits(), exec, |b| {
        v.value_of_bits(b) - p.price_of_bits(b) / d
    }))
}

/// Whether `set` is `(c, d)`-competitive for `v` at prices `p`.
pub fn is_cd_competitive(
    set: ItemSet,
    v: &Valuation,
    p: &PriceVector,
    c: f64,
    d: f64,
) -> Result<bool, DemandError> {
    let benchmark = cd_benchmark(v, p, d)?;
    v.check_set(set)?;
    Ok(approx_ge(utility(v, p, set), c * benchmark))
}

/// Single pass in ascending item order, keeping an item when its marginal
/// value is at least twice its price.
pub fn simple_greedy(v: &Valuation, p: &PriceVector) -> Result<DemandResult, DemandError> {
    simple_greedy_within(v, p, full(v))
}

pub fn simple_greedy_within(
    v: &Valuation,
    p: &PriceVector,
    available: ItemSet,
) -> Result<DemandResult, DemandError> {
    check_inputs(v, p, available)?;
    let mut chosen = 0u32;
    let mut current = 0.0;
    for j in available.iter() {
        let next = v.value_of_bits(chosen | 1 << j);
        if next - current >= 2.0 * p[j] {
            chosen |= 1 << j;
            current = next;
        }
    }
    let chosen = ItemSet::from_bits_unchecked(v.universe_size(), chosen);
    Ok(DemandResult::new(v, p, chosen, OracleKind::SimpleGreedy))
}

/// Best single item versus the bundle of items whose standalone value
/// beats `(1 + sqrt m)` times their price. Returns the empty set when even
/// the best single item has negative utility.
pub fn single_or_bundle(v: &Valuation, p: &PriceVector) -> Result<DemandResult, DemandError> {
    single_or_bundle_within(v, p, full(v))
}

pub fn single_or_bundle_within(
    v: &Valuation,
    p: &PriceVector,
    available: ItemSet,
) -> Result<DemandResult, DemandError> {
    check_inputs(v, p, available)?;
    let m = v.universe_size();
    let inflation = 1.0 + (available.len() as f64).sqrt();
    let mut best_single: Option<(usize, f64)> = None;
    let mut bundle = 0u32;
    for j in available.iter() {
        let value = v.value_of_bits(1 << j);
        let u = value - p[j];
        if best_single.is_none_or(|(_, bu)| u > bu) {
            best_single = Some((j, u));
        }
        if value - inflation * p[j] > 0.0 {
            bundle |= 1 << j;
        }
    }
    let chosen = match best_single {
        None => 0,
        Some((j, single_utility)) => {
            let bundle_utility = v.value_of_bits(bundle) - p.price_of_bits(bundle);
            if bundle_utility > single_utility {
                bundle
            } else if single_utility < 0.0 {
                0
            } else {
                1 << j
            }
        }
    };
    let chosen = ItemSet::from_bits_unchecked(m, chosen);
    Ok(DemandResult::new(v, p, chosen, OracleKind::SingleOrBundle))
}

/// Deterministic double greedy on `v - p`: grow `X` from the empty set and
/// shrink `Y` from the available items until they meet. An item joins `X`
/// when the gain of adding it is at least the gain of discarding it.
pub fn meet_in_middle(v: &Valuation, p: &PriceVector) -> Result<DemandResult, DemandError> {
    meet_in_middle_within(v, p, full(v))
}

pub fn meet_in_middle_within(
    v: &Valuation,
    p: &PriceVector,
    available: ItemSet,
) -> Result<DemandResult, DemandError> {
    check_inputs(v, p, available)?;
    let bits = meet_in_middle_core(
        available.iter(),
        available.bits() as u64,
        |b| v.value_of_bits(b as u32),
        |j| p[j],
    );
    let chosen = ItemSet::from_bits_unchecked(v.universe_size(), bits as u32);
    Ok(DemandResult::new(v, p, chosen, OracleKind::MeetInMiddle))
}

/// The double-greedy pass over `order`, starting from `Y = start`, with sets
/// as 64-bit masks so that instances beyond the `ItemSet` cap can be run.
pub(crate) fn meet_in_middle_core<I, V, P>(order: I, start: u64, value: V, price: P) -> u64
where
    I: IntoIterator<Item = usize>,
    V: Fn(u64) -> f64,
    P: Fn(usize) -> f64,
{
    let mut x = 0u64;
    let mut y = start;
    let mut vx = value(x);
    let mut vy = value(y);
    for j in order {
        let vx_plus = value(x | 1 << j);
        let vy_minus = value(y & !(1 << j));
        let add_gain = vx_plus - vx - price(j);
        let drop_gain = vy_minus - vy + price(j);
        if add_gain >= drop_gain {
            x |= 1 << j;
            vx = vx_plus;
        } else {
            y &= !(1 << j);
            vy = vy_minus;
        }
    }
    debug_assert_eq!(x, y);
    x
}

/// Demand query answered as welfare maximization between the bidder and a
/// second, additive bidder whose values are the prices.
pub fn demand_via_welfare(v: &Valuation, p: &PriceVector) -> Result<DemandResult, DemandError> {
    via_welfare_within(v, p, full(v))
}

fn via_welfare_within(
    v: &Valuation,
    p: &PriceVector,
    available: ItemSet,
) -> Result<DemandResult, DemandError> {
    check_inputs(v, p, available)?;
    check_cap(available, VIA_WELFARE_MAX_ITEMS)?;
    let price_bidder = Valuation::additive(p.as_slice().to_vec())?;
    let bidders = [v.clone(), price_bidder];
    let opt = optimal_welfare(&bidders, available).map_err(|_| DemandError::TooManyItems {
        items: available.len(),
        max: VIA_WELFARE_MAX_ITEMS,
    })?;
    Ok(DemandResult::new(
        v,
        p,
        opt.allocation[0],
        OracleKind::ViaWelfare,
    ))
}
