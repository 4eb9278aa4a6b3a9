//! A submodular family on which the double-greedy oracle, fed undiscounted
//! prices, is not `(eps, eps)`-competitive at prices `eps * p`.
//!
//! With `K = 4/eps` and `N = 2 + (K - 1)/eps` items, item 0 costs `K/2 + 1`
//! and every other item `1 - eps`. The value is `K` for any set containing
//! item 0, and `1 + (|S| - 1) eps` for other nonempty sets. For `eps < 1/3`
//! the greedy pass discards everything except the last item; at `eps = 1/3`
//! and `1/2` the add and drop gains tie and the outcome changes.
//!
//! The value depends only on whether item 0 is present and on `|S|`, and
//! the other items all cost the same, so every exhaustive question about
//! the instance reduces to a loop over those `2N` classes.

use serde::Serialize;

use super::VerifierError;
use crate::demand::meet_in_middle_core;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub eps: f64,
    pub k: f64,
    pub items: usize,
    pub chosen: Vec<usize>,
    /// `v(T) - p(T)` of the returned set.
    pub utility: f64,
    /// `v(T) - eps * p(T)`.
    pub discounted_utility: f64,
    /// `max_S v(S) - p(S)`.
    pub best_utility: f64,
    /// Whether some set attains `best_utility` while containing item 0.
    pub best_contains_first: bool,
    /// `eps * best_utility`, the competitiveness target at prices `eps * p`.
    pub target: f64,
    pub submodular: bool,
    /// `discounted_utility < target`.
    pub violated: bool,
}

struct Family {
    eps: f64,
    k: f64,
    n: usize,
}

impl Family {
    fn value(&self, has_first: bool, size: usize) -> f64 {
        if has_first {
            self.k
        } else if size == 0 {
            0.0
        } else {
            1.0 + (size - 1) as f64 * self.eps
        }
    }

    fn price(&self, item: usize) -> f64 {
        if item == 0 {
            self.k / 2.0 + 1.0
        } else {
            1.0 - self.eps
        }
    }

    /// `(has item 0, |S|)` for every realizable class.
    fn classes(&self) -> impl Iterator<Item = (bool, usize)> + '_ {
        let others = self.n - 1;
        (0..=others)
            .map(|s| (false, s))
            .chain((0..=others).map(|s| (true, s + 1)))
    }
}

/// Builds the instance for `eps` (requires `4/eps` and `(4/eps - 1)/eps`
/// to be integers, at most 64 items) and runs the double-greedy oracle on
/// it at undiscounted prices.
pub fn mim_counterexample(eps: f64) -> Result<CounterexampleReport, VerifierError> {
    let k = 4.0 / eps;
    let n_real = 2.0 + (k - 1.0) / eps;
    let integral = |x: f64| x.is_finite() && (x - x.round()).abs() < 1e-9;
    if !(eps > 0.0 && eps < 1.0) || !integral(k) || !integral(n_real) || n_real > 64.0 {
        return Err(VerifierError::BadEpsilon(eps));
    }
    let fam = Family {
        eps,
        k: k.round(),
        n: n_real.round() as usize,
    };
    let full = if fam.n == 64 {
        u64::MAX
    } else {
        (1u64 << fam.n) - 1
    };
    let value = |bits: u64| fam.value(bits & 1 == 1, bits.count_ones() as usize);
    let chosen_bits = meet_in_middle_core(0..fam.n, full, value, |j| fam.price(j));
    let chosen: Vec<usize> = (0..fam.n).filter(|&j| chosen_bits >> j & 1 == 1).collect();
    let price: f64 = chosen.iter().map(|&j| fam.price(j)).sum();
    let v = value(chosen_bits);

    let class_utility = |(first, size): (bool, usize)| {
        let others = if first { size - 1 } else { size };
        let p = others as f64 * fam.price(1) + if first { fam.price(0) } else { 0.0 };
        fam.value(first, size) - p
    };
    let (best, best_contains_first) = fam.classes().map(|c| (class_utility(c), c.0)).fold(
        (f64::NEG_INFINITY, false),
        |acc, (u, first)| {
            if u > acc.0 || (u == acc.0 && first) {
                (u, first)
            } else {
                acc
            }
        },
    );
    let discounted = v - eps * price;
    let target = eps * best;
    Ok(CounterexampleReport {
        eps,
        k: fam.k,
        items: fam.n,
        chosen,
        utility: v - price,
        discounted_utility: discounted,
        best_utility: best,
        best_contains_first,
        target,
        submodular: family_is_submodular(&fam),
        violated: discounted < target,
    })
}

/// Diminishing returns for every class `S` and distinct items `j, k`
/// outside it: `v(S + j) - v(S) >= v(S + k + j) - v(S + k)`.
fn family_is_submodular(fam: &Family) -> bool {
    let others = fam.n - 1;
    fam.classes().all(|(first, size)| {
        let rest = if first { size - 1 } else { size };
        let free_others = others - rest;
        // Item kinds: true for item 0, false for any other item.
        let kinds = [true, false];
        kinds.iter().all(|&j_first| {
            kinds.iter().all(|&k_first| {
                let need_others = usize::from(!j_first) + usize::from(!k_first);
                let available = !(first && (j_first || k_first))
                    && !(j_first && k_first)
                    && need_others <= free_others;
                if !available {
                    return true;
                }
                let add = |f: bool, s: usize, item_first: bool| (f || item_first, s + 1);
                let (f1, s1) = add(first, size, j_first);
                let gain = fam.value(f1, s1) - fam.value(first, size);
                let (fk, sk) = add(first, size, k_first);
                let (fkj, skj) = add(fk, sk, j_first);
                let later = fam.value(fkj, skj) - fam.value(fk, sk);
                gain >= later - 1e-12
            })
        })
    })
}
