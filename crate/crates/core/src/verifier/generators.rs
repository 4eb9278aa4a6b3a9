//! Random instances for the property checks.
//!
//! There is no canonical distribution, so each class mixes a few families
//! that are members of the class by construction:
//!
//! * submodular: weighted coverage, square root of an additive weight,
//!   budget-additive, additive and unit-demand;
//! * XOS: maxima of one to four sparse nonnegative clauses;
//! * subadditive: XOS, rounded-up additive `c * ceil(w(S))`, square roots of
//!   XOS, sums and maxima of these, and a fixed entry fee plus additive
//!   values. On five items or fewer, random monotone tables are also drawn
//!   and kept only if they pass the exhaustive subadditivity check.
//!
//! Table-backed families need at most [`TABLE_MAX_ITEMS`] items; above that
//! the generators fall back to their closed-form families.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::demand::PriceVector;
use crate::valuations::{check_class, ItemSet, Valuation, ValuationClass};

/// Rejection-sampling attempts for a random subadditive table before the
/// generator falls back to a constructive family.
pub const SUBADDITIVE_RETRY_CAP: usize = 1000;

const TABLE_MAX_ITEMS: usize = 16;
const REJECTION_MAX_ITEMS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceClass {
    Additive,
    UnitDemand,
    BudgetAdditive,
    Submodular,
    Xos,
    Subadditive,
}

impl InstanceClass {
    /// The weakest valuation class every generated instance belongs to.
    pub fn valuation_class(self) -> ValuationClass {
        match self {
            InstanceClass::Additive
            | InstanceClass::UnitDemand
            | InstanceClass::BudgetAdditive
            | InstanceClass::Submodular => ValuationClass::Submodular,
            InstanceClass::Xos => ValuationClass::Xos,
            InstanceClass::Subadditive => ValuationClass::Subadditive,
        }
    }
}

pub fn random_valuation<R: Rng + ?Sized>(rng: &mut R, class: InstanceClass, m: usize) -> Valuation {
    match class {
        InstanceClass::Additive => Valuation::additive(uniform_vec(rng, m, 0.0, 1.0)).unwrap(),
        InstanceClass::UnitDemand => Valuation::unit_demand(uniform_vec(rng, m, 0.0, 1.0)).unwrap(),
        InstanceClass::BudgetAdditive => budget_additive(rng, m),
        InstanceClass::Submodular => random_submodular(rng, m),
        InstanceClass::Xos => random_xos(rng, m),
        InstanceClass::Subadditive => random_subadditive(rng, m),
    }
}

pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    class: InstanceClass,
    n: usize,
    m: usize,
) -> Vec<Valuation> {
    (0..n).map(|_| random_valuation(rng, class, m)).collect()
}

pub fn random_submodular<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Valuation {
    let tables = m <= TABLE_MAX_ITEMS;
    match rng.gen_range(0..5) {
        0 if tables => coverage(rng, m),
        1 if tables => {
            let w = uniform_vec(rng, m, 0.0, 1.0);
            let scale = rng.gen_range(0.5..2.0);
            table_from(m, additive_table(&w).into_iter().map(|x| scale * x.sqrt()))
        }
        2 => Valuation::additive(uniform_vec(rng, m, 0.0, 1.0)).unwrap(),
        3 => Valuation::unit_demand(uniform_vec(rng, m, 0.0, 1.0)).unwrap(),
        _ => budget_additive(rng, m),
    }
}

pub fn random_xos<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Valuation {
    let k = rng.gen_range(1..=4);
    Valuation::xos((0..k).map(|_| sparse_clause(rng, m)).collect()).unwrap()
}

pub fn random_subadditive<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Valuation {
    if m > TABLE_MAX_ITEMS {
        return random_xos(rng, m);
    }
    let pick = if m <= REJECTION_MAX_ITEMS {
        rng.gen_range(0..7)
    } else {
        rng.gen_range(0..6)
    };
    match pick {
        0 => random_xos(rng, m),
        1 => table_from(m, rounded_up_additive(rng, m)),
        2 => table_from(m, xos_table(rng, m).into_iter().map(f64::sqrt)),
        3 => {
            let a = rounded_up_additive(rng, m);
            let b = xos_table(rng, m);
            table_from(m, a.into_iter().zip(b).map(|(x, y)| x + y))
        }
        4 => {
            let a = rounded_up_additive(rng, m);
            let b = xos_table(rng, m);
            table_from(m, a.into_iter().zip(b).map(|(x, y)| x.max(y)))
        }
        5 => {
            let fee = rng.gen_range(0.5..2.0);
            let w = uniform_vec(rng, m, 0.0, 0.5);
            let values =
                additive_table(&w)
                    .into_iter()
                    .enumerate()
                    .map(|(s, x)| if s == 0 { 0.0 } else { fee + x });
            table_from(m, values)
        }
        _ => {
            rejection_sampled(rng, m).unwrap_or_else(|| table_from(m, rounded_up_additive(rng, m)))
        }
    }
}

/// Per-item prices on the scale of the valuation: each item is priced
/// uniformly in `[0, 1.5 s]`, where `s` is either its own singleton value or
/// the average singleton value, and one item in ten is free.
pub fn random_prices<R: Rng + ?Sized>(rng: &mut R, v: &Valuation) -> PriceVector {
    let m = v.universe_size();
    let singles: Vec<f64> = (0..m).map(|j| v.value_of_bits(1 << j)).collect();
    let mean = singles.iter().sum::<f64>() / m as f64;
    let prices = singles
        .iter()
        .map(|&s| {
            if rng.gen_bool(0.1) {
                return 0.0;
            }
            let base = if rng.gen_bool(0.5) { s } else { mean };
            rng.gen_range(0.0..=1.5) * base
        })
        .collect();
    PriceVector::new(prices).unwrap()
}

fn uniform_vec<R: Rng + ?Sized>(rng: &mut R, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(lo..hi)).collect()
}

fn sparse_clause<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m)
        .map(|_| {
            if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.0..1.0)
            }
        })
        .collect()
}

fn budget_additive<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Valuation {
    let values = uniform_vec(rng, m, 0.0, 1.0);
    let budget = rng.gen_range(0.3..1.0) * values.iter().sum::<f64>();
    Valuation::budget_additive(values, budget).unwrap()
}

/// Value of the ground elements covered: each item covers each of up to 64
/// weighted elements independently.
fn coverage<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Valuation {
    let ground = rng.gen_range(m..=(2 * m + 2).min(64));
    let weights = uniform_vec(rng, ground, 0.1, 1.0);
    let covers: Vec<u64> = (0..m)
        .map(|_| {
            (0..ground)
                .filter(|_| rng.gen_bool(0.35))
                .fold(0u64, |acc, e| acc | 1 << e)
        })
        .collect();
    let mut covered = vec![0u64; 1 << m];
    for s in 1..covered.len() {
        let low = s.trailing_zeros() as usize;
        covered[s] = covered[s & (s - 1)] | covers[low];
    }
    table_from(
        m,
        covered.into_iter().map(|c| {
            (0..ground)
                .filter(|&e| c >> e & 1 == 1)
                .map(|e| weights[e])
                .sum::<f64>()
        }),
    )
}

/// `w(S)` for every `S`, by adding the lowest item to a smaller set's sum.
fn additive_table(w: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0; 1 << w.len()];
    for s in 1..sums.len() {
        sums[s] = sums[s & (s - 1)] + w[s.trailing_zeros() as usize];
    }
    sums
}

fn xos_table<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    let k = rng.gen_range(1..=3);
    let mut best = vec![0.0f64; 1 << m];
    for _ in 0..k {
        let clause = sparse_clause(rng, m);
        for (b, x) in best.iter_mut().zip(additive_table(&clause)) {
            *b = b.max(x);
        }
    }
    best
}

/// `c * ceil(w(S))`, subadditive because rounding up is.
fn rounded_up_additive<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    let w = uniform_vec(rng, m, 0.1, 1.2);
    let c = rng.gen_range(0.5..1.5);
    // Round before ceil so that float noise in the sums cannot push an
    // exact integer up a step.
    additive_table(&w)
        .into_iter()
        .map(|x| c * ((x * 1e9).round() / 1e9).ceil())
        .collect()
}

/// A random monotone table (monotone closure of noise), kept only if it is
/// subadditive.
fn rejection_sampled<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Option<Valuation> {
    for _ in 0..SUBADDITIVE_RETRY_CAP {
        let mut values = vec![0.0f64; 1 << m];
        for s in 1..values.len() {
            let raw = rng.gen_range(0.0..(s as u32).count_ones() as f64);
            let below = ItemSet::from_bits_unchecked(m, s as u32)
                .iter()
                .map(|j| values[s & !(1 << j)])
                .fold(0.0, f64::max);
            values[s] = raw.max(below);
        }
        let v = Valuation::table(m, values).expect("closure is monotone");
        if check_class(&v, ValuationClass::Subadditive)
            .expect("small table")
            .is_yes()
        {
            return Some(v);
        }
    }
    None
}

fn table_from<I: IntoIterator<Item = f64>>(m: usize, values: I) -> Valuation {
    Valuation::table(m, values.into_iter().collect())
        .expect("generated tables are monotone and normalized")
}
