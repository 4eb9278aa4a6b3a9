//! Items, valuation functions and XOS supporting prices.

mod class;
mod itemset;
mod lp;
mod supporting;

pub use class::{check_class, ValuationClass, Verdict, XOS_CERTIFICATE_MAX_ITEMS};
pub use itemset::{check_universe, ItemSet, Members, Subsets, MAX_ITEMS};
pub use supporting::{
    supporting_clause, supporting_prices, verify_supporting, SupportCheck, SupportingPrices,
    ViolationKind,
};

pub(crate) use itemset::full_mask;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest universe accepted by the exhaustive class and support checkers.
pub const EXHAUSTIVE_MAX_ITEMS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValuationError {
    #[error("universe size {m} outside 1..={max}")]
    UniverseSize { m: usize, max: usize },
    #[error("item {item} outside universe of size {m}")]
    ItemOutOfRange { item: usize, m: usize },
    #[error("universe mismatch: valuation has {expected} items, argument has {found}")]
    UniverseMismatch { expected: usize, found: usize },
    #[error("{field}: expected {expected} entries, found {found}")]
    Length {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{field}[{index}] = {value} is not a finite nonnegative number")]
    BadNumber {
        field: &'static str,
        index: usize,
        value: f64,
    },
    #[error("xos valuation needs at least one clause")]
    NoClauses,
    #[error("table value of the empty set is {0}, expected 0")]
    NotNormalized(f64),
    #[error("table is not monotone: v({smaller}) = {lo} > v({larger}) = {hi}")]
    NotMonotone {
        smaller: ItemSet,
        larger: ItemSet,
        lo: f64,
        hi: f64,
    },
    #[error("item {item} is already in {set}")]
    ItemAlreadyPresent { item: usize, set: ItemSet },
    #[error("universe of {m} items is too large for exhaustive checks (max {max})")]
    TooLargeForExhaustive { m: usize, max: usize },
    #[error("bidder {bidder}: valuation is not XOS at {set}")]
    NotXos { bidder: usize, set: ItemSet },
    #[error("bidder {bidder}: no XOS certificate available for this valuation")]
    XosUnknown { bidder: usize },
    #[error("allocation bundles {first} and {second} overlap")]
    OverlappingAllocation { first: usize, second: usize },
    #[error("{valuations} valuations but {bundles} bundles")]
    AllocationLength { valuations: usize, bundles: usize },
}

/// Concrete valuation families.
///
/// Serialized with a `family` tag; this is the bidder descriptor used in
/// instance files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `v(S) = sum of values over S`.
    Additive { values: Vec<f64> },
    /// `v(S) = min(budget, sum of values over S)`.
    BudgetAdditive { values: Vec<f64>, budget: f64 },
    /// `v(S) = max of values over S`.
    UnitDemand { values: Vec<f64> },
    /// `v(S) = max over clauses of the clause's additive sum over S`.
    Xos { clauses: Vec<Vec<f64>> },
    /// Explicit values indexed by the set's bitmask; `2^m` entries.
    Table { values: Vec<f64> },
}

/// A monotone, normalized set function over `m` items.
#[derive(Debug, Clone, PartialEq)]
pub struct Valuation {
    m: usize,
    family: Family,
}

impl Valuation {
    pub fn new(m: usize, family: Family) -> Result<Self, ValuationError> {
        itemset::check_universe(m)?;
        match &family {
            Family::Additive { values } | Family::UnitDemand { values } => {
                check_vector("values", values, m)?;
            }
            Family::BudgetAdditive { values, budget } => {
                check_vector("values", values, m)?;
                check_number("budget", 0, *budget)?;
            }
            Family::Xos { clauses } => {
                if clauses.is_empty() {
                    return Err(ValuationError::NoClauses);
                }
                for clause in clauses {
                    check_vector("clauses", clause, m)?;
                }
            }
            Family::Table { values } => {
                check_vector("values", values, 1 << m)?;
                if values[0] != 0.0 {
                    return Err(ValuationError::NotNormalized(values[0]));
                }
                check_table_monotone(m, values)?;
            }
        }
        Ok(Valuation { m, family })
    }

    pub fn additive(values: Vec<f64>) -> Result<Self, ValuationError> {
        Self::new(values.len(), Family::Additive { values })
    }

    pub fn budget_additive(values: Vec<f64>, budget: f64) -> Result<Self, ValuationError> {
        Self::new(values.len(), Family::BudgetAdditive { values, budget })
    }

    pub fn unit_demand(values: Vec<f64>) -> Result<Self, ValuationError> {
        Self::new(values.len(), Family::UnitDemand { values })
    }

    pub fn xos(clauses: Vec<Vec<f64>>) -> Result<Self, ValuationError> {
        let m = clauses.first().map_or(0, Vec::len);
        Self::new(m, Family::Xos { clauses })
    }

    pub fn table(m: usize, values: Vec<f64>) -> Result<Self, ValuationError> {
        Self::new(m, Family::Table { values })
    }

    /// Tabulates any valuation into the explicit table family.
    pub fn to_table(&self) -> Valuation {
        let values = (0..1u32 << self.m)
            .map(|bits| self.value_of_bits(bits))
            .collect();
        Valuation {
            m: self.m,
            family: Family::Table { values },
        }
    }

    #[inline]
    pub fn universe_size(&self) -> usize {
        self.m
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn value(&self, set: ItemSet) -> Result<f64, ValuationError> {
        self.check_set(set)?;
        Ok(self.value_of_bits(set.bits()))
    }

    /// `v(S ∪ {j}) - v(S)`.
    pub fn marginal(&self, set: ItemSet, item: usize) -> Result<f64, ValuationError> {
        self.check_set(set)?;
        if item >= self.m {
            return Err(ValuationError::ItemOutOfRange { item, m: self.m });
        }
        if set.contains(item) {
            return Err(ValuationError::ItemAlreadyPresent { item, set });
        }
        Ok(self.value_of_bits(set.bits() | (1 << item)) - self.value_of_bits(set.bits()))
    }

    pub fn check_set(&self, set: ItemSet) -> Result<(), ValuationError> {
        if set.universe_size() != self.m {
            return Err(ValuationError::UniverseMismatch {
                expected: self.m,
                found: set.universe_size(),
            });
        }
        Ok(())
    }

    /// Evaluates the set whose members are the one bits of `bits`.
    ///
    /// Bits at or above the universe size must be zero; this is the
    /// unchecked hot path behind [`Valuation::value`].
    #[inline]
    pub fn value_of_bits(&self, bits: u32) -> f64 {
        match &self.family {
            Family::Additive { values } => sum_over(values, bits),
            Family::BudgetAdditive { values, budget } => sum_over(values, bits).min(*budget),
            Family::UnitDemand { values } => max_over(values, bits),
            Family::Xos { clauses } => clauses
                .iter()
                .map(|c| sum_over(c, bits))
                .fold(0.0, f64::max),
            Family::Table { values } => values[bits as usize],
        }
    }
}

#[inline]
fn sum_over(values: &[f64], mut bits: u32) -> f64 {
    let mut total = 0.0;
    while bits != 0 {
        total += values[bits.trailing_zeros() as usize];
        bits &= bits - 1;
    }
    total
}

#[inline]
fn max_over(values: &[f64], mut bits: u32) -> f64 {
    let mut best = 0.0f64;
    while bits != 0 {
        best = best.max(values[bits.trailing_zeros() as usize]);
        bits &= bits - 1;
    }
    best
}

fn check_number(field: &'static str, index: usize, value: f64) -> Result<(), ValuationError> {
    if !value.is_finite() || value < 0.0 {
        return Err(ValuationError::BadNumber {
            field,
            index,
            value,
        });
    }
    Ok(())
}

fn check_vector(
    field: &'static str,
    values: &[f64],
    expected: usize,
) -> Result<(), ValuationError> {
    if values.len() != expected {
        return Err(ValuationError::Length {
            field,
            expected,
            found: values.len(),
        });
    }
    values
        .iter()
        .enumerate()
        .try_for_each(|(i, &v)| check_number(field, i, v))
}

fn check_table_monotone(m: usize, values: &[f64]) -> Result<(), ValuationError> {
    for bits in 0..values.len() as u32 {
        let mut missing = !bits & full_mask(m);
        while missing != 0 {
            let item = missing.trailing_zeros();
            missing &= missing - 1;
            let larger = bits | (1 << item);
            if values[bits as usize] > values[larger as usize] {
                return Err(ValuationError::NotMonotone {
                    smaller: ItemSet::from_bits_unchecked(m, bits),
                    larger: ItemSet::from_bits_unchecked(m, larger),
                    lo: values[bits as usize],
                    hi: values[larger as usize],
                });
            }
        }
    }
    Ok(())
}
