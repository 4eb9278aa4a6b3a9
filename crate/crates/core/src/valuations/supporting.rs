use serde::Serialize;

use super::class::{is_submodular_table, table_clause, XOS_CERTIFICATE_MAX_ITEMS};
use super::{full_mask, Family, ItemSet, Valuation, ValuationError, EXHAUSTIVE_MAX_ITEMS};
use crate::demand::PriceVector;
use crate::numeric::{approx_eq, approx_ge};

/// Item prices `q` supporting an allocation: `v_i(T) >= q(S_i ∩ T)` for all
/// `T`, with equality `v_i(S_i) = q(S_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportingPrices {
    pub q: PriceVector,
    pub allocation: Vec<ItemSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `v_i(T) < q(S_i ∩ T)` for the witness `T`.
    Dominated,
    /// `v_i(S_i) != q(S_i)`.
    NotTight,
    /// An unallocated item (the witness singleton) has a positive price.
    UnallocatedPriced,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SupportCheck {
    Valid,
    Violated {
        bidder: Option<usize>,
        witness: ItemSet,
        kind: ViolationKind,
        lhs: f64,
        rhs: f64,
    },
}

impl SupportCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, SupportCheck::Valid)
    }
}

/// The additive clause of `v` that attains `v(set)`, zero outside `set`
/// for table and budget-additive valuations.
///
/// XOS ties go to the lowest clause index. Budget-additive valuations use
/// the proportional clause `values * min(1, budget / values(set))`.
pub fn supporting_clause(
    v: &Valuation,
    set: ItemSet,
    bidder: usize,
) -> Result<Vec<f64>, ValuationError> {
    v.check_set(set)?;
    let m = v.universe_size();
    Ok(match v.family() {
        Family::Additive { values } => values.clone(),
        Family::UnitDemand { values } => {
            let mut clause = vec![0.0; m];
            let mut best: Option<usize> = None;
            for j in set.iter() {
                if best.is_none_or(|b| values[j] > values[b]) {
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                clause[j] = values[j];
            }
            clause
        }
        Family::Xos { clauses } => {
            let mut best = 0;
            let mut best_value = f64::NEG_INFINITY;
            for (k, clause) in clauses.iter().enumerate() {
                let value: f64 = set.iter().map(|j| clause[j]).sum();
                if value > best_value {
                    best = k;
                    best_value = value;
                }
            }
            clauses[best].clone()
        }
        Family::BudgetAdditive { values, budget } => {
            let total: f64 = set.iter().map(|j| values[j]).sum();
            let scale = if total > *budget { budget / total } else { 1.0 };
            let mut clause = vec![0.0; m];
            for j in set.iter() {
                clause[j] = values[j] * scale;
            }
            clause
        }
        Family::Table { .. } if m <= XOS_CERTIFICATE_MAX_ITEMS => {
            table_clause(v, set).ok_or(ValuationError::NotXos { bidder, set })?
        }
        Family::Table { .. } => {
            if !is_submodular_table(v) {
                return Err(ValuationError::XosUnknown { bidder });
            }
            marginal_clause(v, set)
        }
    })
}

/// Marginal gains of the members of `set` added in increasing order. For a
/// submodular `v` this clause sums to `v(set)` and never exceeds `v(T)` on
/// any `T ⊆ set`.
fn marginal_clause(v: &Valuation, set: ItemSet) -> Vec<f64> {
    let mut clause = vec![0.0; v.universe_size()];
    let mut prefix = 0u32;
    let mut before = 0.0;
    for j in set.iter() {
        prefix |= 1 << j;
        let after = v.value_of_bits(prefix);
        clause[j] = (after - before).max(0.0);
        before = after;
    }
    clause
}

/// Supporting prices for `alloc` built from each bidder's maximizing clause.
pub fn supporting_prices(
    vals: &[Valuation],
    alloc: &[ItemSet],
) -> Result<SupportingPrices, ValuationError> {
    let m = check_allocation(vals, alloc)?;
    let mut q = vec![0.0; m];
    for (i, (v, &bundle)) in vals.iter().zip(alloc).enumerate() {
        let clause = supporting_clause(v, bundle, i)?;
        for j in bundle.iter() {
            q[j] = clause[j];
        }
    }
    Ok(SupportingPrices {
        q: PriceVector::new(q).expect("clauses are finite and nonnegative"),
        allocation: alloc.to_vec(),
    })
}

/// Exhaustively checks both supporting-price conditions and that
/// unallocated items carry price zero.
pub fn verify_supporting(
    q: &PriceVector,
    vals: &[Valuation],
    alloc: &[ItemSet],
) -> Result<SupportCheck, ValuationError> {
    let m = check_allocation(vals, alloc)?;
    if m > EXHAUSTIVE_MAX_ITEMS {
        return Err(ValuationError::TooLargeForExhaustive {
            m,
            max: EXHAUSTIVE_MAX_ITEMS,
        });
    }
    if q.universe_size() != m {
        return Err(ValuationError::UniverseMismatch {
            expected: m,
            found: q.universe_size(),
        });
    }
    let allocated = alloc.iter().fold(0u32, |acc, s| acc | s.bits());
    for j in 0..m {
        if allocated & (1 << j) == 0 && q[j] != 0.0 {
            return Ok(SupportCheck::Violated {
                bidder: None,
                witness: ItemSet::from_bits_unchecked(m, 1 << j),
                kind: ViolationKind::UnallocatedPriced,
                lhs: q[j],
                rhs: 0.0,
            });
        }
    }
    for (i, (v, &bundle)) in vals.iter().zip(alloc).enumerate() {
        let value = v.value_of_bits(bundle.bits());
        let price = q.price_of(bundle);
        if !approx_eq(value, price) {
            return Ok(SupportCheck::Violated {
                bidder: Some(i),
                witness: bundle,
                kind: ViolationKind::NotTight,
                lhs: value,
                rhs: price,
            });
        }
        for t in 0..=full_mask(m) {
            let lhs = v.value_of_bits(t);
            let rhs = q.price_of_bits(t & bundle.bits());
            if !approx_ge(lhs, rhs) {
                return Ok(SupportCheck::Violated {
                    bidder: Some(i),
                    witness: ItemSet::from_bits_unchecked(m, t),
                    kind: ViolationKind::Dominated,
                    lhs,
                    rhs,
                });
            }
        }
    }
    Ok(SupportCheck::Valid)
}

fn check_allocation(vals: &[Valuation], alloc: &[ItemSet]) -> Result<usize, ValuationError> {
    if vals.len() != alloc.len() || vals.is_empty() {
        return Err(ValuationError::AllocationLength {
            valuations: vals.len(),
            bundles: alloc.len(),
        });
    }
    let m = vals[0].universe_size();
    for (v, &s) in vals.iter().zip(alloc) {
        if v.universe_size() != m {
            return Err(ValuationError::UniverseMismatch {
                expected: m,
                found: v.universe_size(),
            });
        }
        v.check_set(s)?;
    }
    for first in 0..alloc.len() {
        for second in first + 1..alloc.len() {
            if !alloc[first].is_disjoint(alloc[second]) {
                return Err(ValuationError::OverlappingAllocation { first, second });
            }
        }
    }
    Ok(m)
}
