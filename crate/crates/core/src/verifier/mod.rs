//! Brute-force ground truth: optimal welfare, random instance generators and
//! checks of the guarantees the mechanisms rely on.

mod checks;
mod counterexample;
mod generators;

pub use checks::{
    check_fpa_lemma, check_oracle_guarantee, FpaReport, OracleReport, OracleViolation, ProbeRecord,
};
pub use counterexample::{mim_counterexample, CounterexampleReport};
pub use generators::{
    random_instance, random_prices, random_subadditive, random_submodular, random_valuation,
    random_xos, InstanceClass, SUBADDITIVE_RETRY_CAP,
};

use serde::Serialize;
use thiserror::Error;

use crate::auctions::AuctionError;
use crate::demand::DemandError;
use crate::exec::{self, Execution};
use crate::valuations::{ItemSet, Valuation, ValuationError};

/// Largest number of assignment vectors `n^k` that [`optimal_welfare`]
/// will enumerate.
pub const OPT_MAX_ASSIGNMENTS: u64 = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifierError {
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error("welfare enumeration needs at least one bidder")]
    NoBidders,
    #[error("{bidders} bidders over {items} items is {bidders}^{items} assignments, over the cap of {max}")]
    TooLarge {
        bidders: usize,
        items: usize,
        max: u64,
    },
    #[error("bidder {0} does not have an XOS valuation")]
    NotXos(usize),
    #[error("no (c, d) guarantee is known for oracle {0}")]
    NoGuarantee(String),
    #[error("delta = {0} outside (0, 1/2]")]
    BadDelta(f64),
    #[error("eps = {0} does not give integral instance sizes of at most 64 items")]
    BadEpsilon(f64),
    #[error("bidder index {0} out of range")]
    UnknownBidder(usize),
}

/// An optimal allocation and its welfare.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    /// One bundle per bidder, in input order.
    pub allocation: Vec<ItemSet>,
    pub opt_welfare: f64,
}

/// Maximum welfare over every assignment of `items` to bidders.
///
/// Assignment vectors (bidder of each item, in ascending item order) are
/// visited in lexicographic order and the first maximizer wins, so the
/// result does not depend on the execution mode.
pub fn optimal_welfare(vals: &[Valuation], items: ItemSet) -> Result<OptResult, VerifierError> {
    optimal_welfare_with(vals, items, Execution::Auto)
}

pub fn optimal_welfare_with(
    vals: &[Valuation],
    items: ItemSet,
    exec: Execution,
) -> Result<OptResult, VerifierError> {
    let n = vals.len();
    if n == 0 {
        return Err(VerifierError::NoBidders);
    }
    for v in vals {
        v.check_set(items)?;
    }
    let m = items.universe_size();
    let list: Vec<usize> = items.iter().collect();
    let k = list.len();
    let total = (n as u64)
        .checked_pow(k as u32)
        .filter(|&t| t <= OPT_MAX_ASSIGNMENTS)
        .ok_or(VerifierError::TooLarge {
            bidders: n,
            items: k,
            max: OPT_MAX_ASSIGNMENTS,
        })?;

    // Split on the first `h` digits; each chunk walks the rest with an odometer.
    let mut h = 0;
    while h < k && (n as u64).pow(h as u32) < 256 {
        h += 1;
    }
    let chunks = (n as u64).pow(h as u32);
    let exec = match exec {
        Execution::Auto if total < 1 << 14 => Execution::Sequential,
        e => e,
    };
    let best_per_chunk = exec::map_indexed(chunks, exec, |prefix| {
        best_in_chunk(vals, &list, n, h, prefix)
    });
    let (welfare, assignment) = best_per_chunk
        .into_iter()
        .reduce(|best, cand| if cand.0 > best.0 { cand } else { best })
        .expect("at least one chunk");

    let mut allocation = vec![0u32; n];
    for (pos, &item) in list.iter().enumerate() {
        allocation[assignment[pos]] |= 1 << item;
    }
    Ok(OptResult {
        allocation: allocation
            .into_iter()
            .map(|b| ItemSet::from_bits_unchecked(m, b))
            .collect(),
        opt_welfare: welfare,
    })
}

fn best_in_chunk(
    vals: &[Valuation],
    list: &[usize],
    n: usize,
    h: usize,
    prefix: u64,
) -> (f64, Vec<usize>) {
    let k = list.len();
    let mut digits = vec![0usize; k];
    let mut rest = prefix;
    for pos in (0..h).rev() {
        digits[pos] = (rest % n as u64) as usize;
        rest /= n as u64;
    }
    let mut masks = vec![0u32; n];
    for (pos, &item) in list.iter().enumerate() {
        masks[digits[pos]] |= 1 << item;
    }
    let welfare = |masks: &[u32]| -> f64 {
        vals.iter()
            .zip(masks)
            .map(|(v, &b)| v.value_of_bits(b))
            .sum()
    };

    let mut best = (welfare(&masks), digits.clone());
    loop {
        // Increment the suffix digits h..k as a base-n counter.
        let mut pos = k;
        loop {
            if pos == h {
                return best;
            }
            pos -= 1;
            let item = 1u32 << list[pos];
            masks[digits[pos]] &= !item;
            digits[pos] += 1;
            if digits[pos] < n {
                masks[digits[pos]] |= item;
                break;
            }
            digits[pos] = 0;
            masks[0] |= item;
        }
        let w = welfare(&masks);
        if w > best.0 {
            best = (w, digits.clone());
        }
    }
}

/// [`optimal_welfare`] restricted to the bidders in `subset`; the
/// allocation is indexed like `vals`, with empty bundles for everyone else.
pub fn optimal_welfare_among(
    vals: &[Valuation],
    subset: &[usize],
    items: ItemSet,
) -> Result<OptResult, VerifierError> {
    let m = items.universe_size();
    if subset.is_empty() {
        return Ok(OptResult {
            allocation: vec![ItemSet::from_bits_unchecked(m, 0); vals.len()],
            opt_welfare: 0.0,
        });
    }
    let chosen: Vec<Valuation> = subset
        .iter()
        .map(|&i| vals.get(i).cloned().ok_or(VerifierError::UnknownBidder(i)))
        .collect::<Result<_, _>>()?;
    let opt = optimal_welfare(&chosen, items)?;
    let mut allocation = vec![ItemSet::from_bits_unchecked(m, 0); vals.len()];
    for (&i, bundle) in subset.iter().zip(opt.allocation) {
        allocation[i] = bundle;
    }
    Ok(OptResult {
        allocation,
        opt_welfare: opt.opt_welfare,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(m: usize, items: &[usize]) -> ItemSet {
        ItemSet::from_items(m, items.iter().copied()).unwrap()
    }

    #[test]
    fn one_bidder_takes_everything() {
        let v = Valuation::xos(vec![vec![1.0, 0.0, 2.0], vec![0.5, 0.5, 0.5]]).unwrap();
        let all = ItemSet::full(3).unwrap();
        let opt = optimal_welfare(std::slice::from_ref(&v), all).unwrap();
        assert_eq!(opt.allocation, vec![all]);
        assert_eq!(opt.opt_welfare, v.value(all).unwrap());
    }

    #[test]
    fn additive_bidders_split_by_item() {
        let a = Valuation::additive(vec![3.0, 1.0, 2.0]).unwrap();
        let b = Valuation::additive(vec![1.0, 4.0, 2.0]).unwrap();
        let opt = optimal_welfare(&[a, b], ItemSet::full(3).unwrap()).unwrap();
        // Item 2 ties; the lexicographically first assignment gives it to bidder 0.
        assert_eq!(opt.allocation, vec![set(3, &[0, 2]), set(3, &[1])]);
        assert_eq!(opt.opt_welfare, 9.0);
    }

    #[test]
    fn restricted_items_and_bidders() {
        let a = Valuation::unit_demand(vec![3.0, 1.0, 2.0]).unwrap();
        let b = Valuation::unit_demand(vec![4.0, 4.0, 4.0]).unwrap();
        let c = Valuation::additive(vec![9.0, 9.0, 9.0]).unwrap();
        let vals = [a, b, c];
        let opt = optimal_welfare_among(&vals, &[0, 1], set(3, &[0, 1])).unwrap();
        assert_eq!(opt.opt_welfare, 7.0);
        assert_eq!(opt.allocation[2], set(3, &[]));
        assert!(opt.allocation[0].is_disjoint(opt.allocation[1]));
    }

    #[test]
    fn cap_and_empty_inputs() {
        let v = Valuation::additive(vec![1.0; 12]).unwrap();
        let all = ItemSet::full(12).unwrap();
        assert_eq!(optimal_welfare(&[], all), Err(VerifierError::NoBidders));
        let many = vec![v; 5];
        assert!(matches!(
            optimal_welfare(&many, all),
            Err(VerifierError::TooLarge { .. })
        ));
    }

    #[test]
    fn parallel_matches_sequential() {
        let vals = vec![
            Valuation::xos(vec![vec![1.0, 2.0, 0.0, 1.0, 3.0, 0.5, 1.0, 2.0]; 1]).unwrap(),
            Valuation::budget_additive(vec![2.0, 1.0, 2.0, 0.0, 1.0, 3.0, 1.0, 1.0], 4.0).unwrap(),
            Valuation::unit_demand(vec![5.0, 1.0, 0.0, 2.0, 1.0, 1.0, 4.0, 0.0]).unwrap(),
        ];
        let all = ItemSet::full(8).unwrap();
        let seq = optimal_welfare_with(&vals, all, Execution::Sequential).unwrap();
        let par = optimal_welfare_with(&vals, all, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
    }
}
