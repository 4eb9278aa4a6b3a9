use serde::{Deserialize, Serialize};

use super::{full_mask, lp, Family, ItemSet, Valuation, ValuationError, EXHAUSTIVE_MAX_ITEMS};
use crate::numeric::{approx_ge, slack};

/// Explicit tables are certified XOS by linear programming only up to this
/// many items; larger ones only when they are submodular.
pub const XOS_CERTIFICATE_MAX_ITEMS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValuationClass {
    Submodular,
    Xos,
    Subadditive,
    Monotone,
}

/// Outcome of a class-membership check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    /// No certificate search was run (XOS check on a large table).
    Unknown,
}

impl Verdict {
    pub fn is_yes(self) -> bool {
        self == Verdict::Yes
    }
}

impl From<bool> for Verdict {
    fn from(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }
}

pub fn check_class(v: &Valuation, class: ValuationClass) -> Result<Verdict, ValuationError> {
    if class == ValuationClass::Xos {
        return Ok(match v.family() {
            Family::Table { .. } if v.universe_size() <= XOS_CERTIFICATE_MAX_ITEMS => {
                Verdict::from(table_is_xos(v))
            }
            // Submodular functions are XOS; the marginal-gain clauses certify it.
            Family::Table { .. } if is_submodular_table(v) => Verdict::Yes,
            Family::Table { .. } => Verdict::Unknown,
            // Every other family is a maximum of additive clauses by construction.
            _ => Verdict::Yes,
        });
    }
    let m = v.universe_size();
    if m > EXHAUSTIVE_MAX_ITEMS {
        return Err(ValuationError::TooLargeForExhaustive {
            m,
            max: EXHAUSTIVE_MAX_ITEMS,
        });
    }
    Ok(Verdict::from(match class {
        ValuationClass::Monotone => is_monotone(v),
        ValuationClass::Submodular => is_submodular(v),
        ValuationClass::Subadditive => is_subadditive(v),
        ValuationClass::Xos => unreachable!(),
    }))
}

fn is_monotone(v: &Valuation) -> bool {
    let full = full_mask(v.universe_size());
    (0..=full).all(|s| {
        let vs = v.value_of_bits(s);
        bits_of(!s & full).all(|j| approx_ge(v.value_of_bits(s | 1 << j), vs))
    })
}

/// Local form of diminishing returns: `v(S+j) - v(S) >= v(S+j+k) - v(S+k)`.
/// Equivalent to the global `S ⊆ T` condition by telescoping.
fn is_submodular(v: &Valuation) -> bool {
    let full = full_mask(v.universe_size());
    (0..=full).all(|s| {
        let vs = v.value_of_bits(s);
        let free = !s & full;
        bits_of(free).all(|j| {
            let gain = v.value_of_bits(s | 1 << j) - vs;
            bits_of(free & !(1 << j)).all(|k| {
                let sk = s | 1 << k;
                let later = v.value_of_bits(sk | 1 << j) - v.value_of_bits(sk);
                approx_ge(gain, later)
            })
        })
    })
}

/// Exhaustive submodularity test for tables small enough to enumerate.
pub(crate) fn is_submodular_table(v: &Valuation) -> bool {
    v.universe_size() <= EXHAUSTIVE_MAX_ITEMS && is_submodular(v)
}

fn is_subadditive(v: &Valuation) -> bool {
    let full = full_mask(v.universe_size());
    (0..=full).all(|s| {
        let vs = v.value_of_bits(s);
        let outer = !s & full;
        // T ranges over nonempty submasks of the complement.
        let mut t = outer;
        while t != 0 {
            if !approx_ge(vs + v.value_of_bits(t), v.value_of_bits(s | t)) {
                return false;
            }
            t = (t - 1) & outer;
        }
        true
    })
}

fn table_is_xos(v: &Valuation) -> bool {
    let full = full_mask(v.universe_size());
    (1..=full).all(|s| {
        let set = ItemSet::from_bits_unchecked(v.universe_size(), s);
        table_clause(v, set).is_some()
    })
}

/// Finds an additive clause `a >= 0` supported on `set` with `a(set) = v(set)`
/// and `a(T) <= v(T)` for every `T ⊆ set`, by maximizing `a(set)` under
/// those constraints.
pub(crate) fn table_clause(v: &Valuation, set: ItemSet) -> Option<Vec<f64>> {
    let members: Vec<usize> = set.iter().collect();
    let k = members.len();
    let target = v.value_of_bits(set.bits());
    if k == 0 {
        return Some(vec![0.0; v.universe_size()]);
    }
    let mut rows = Vec::with_capacity((1 << k) - 1);
    let mut rhs = Vec::with_capacity((1 << k) - 1);
    for local in 1u32..(1 << k) {
        let mut global = 0u32;
        let row: Vec<f64> = (0..k)
            .map(|i| {
                if local & (1 << i) != 0 {
                    global |= 1 << members[i];
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        rows.push(row);
        rhs.push(v.value_of_bits(global));
    }
    let sol = lp::maximize(&vec![1.0; k], &rows, &rhs)?;
    if sol.value < target - slack(sol.value, target) {
        return None;
    }
    let mut clause = vec![0.0; v.universe_size()];
    for (i, &item) in members.iter().enumerate() {
        clause[item] = sol.x[i];
    }
    Some(clause)
}

#[inline]
fn bits_of(mut mask: u32) -> impl Iterator<Item = u32> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let j = mask.trailing_zeros();
            mask &= mask - 1;
            Some(j)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn additive_is_submodular() {
        let v = Valuation::additive(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            check_class(&v, ValuationClass::Submodular).unwrap(),
            Verdict::Yes
        );
        assert_eq!(
            check_class(&v, ValuationClass::Subadditive).unwrap(),
            Verdict::Yes
        );
        assert_eq!(
            check_class(&v, ValuationClass::Monotone).unwrap(),
            Verdict::Yes
        );
    }

    #[test]
    fn complementary_pair_is_not_subadditive() {
        let v = Valuation::table(2, vec![0.0, 1.0, 1.0, 3.0]).unwrap();
        assert_eq!(
            check_class(&v, ValuationClass::Subadditive).unwrap(),
            Verdict::No
        );
        assert_eq!(
            check_class(&v, ValuationClass::Submodular).unwrap(),
            Verdict::No
        );
        assert_eq!(check_class(&v, ValuationClass::Xos).unwrap(), Verdict::No);
    }

    #[test]
    fn random_budget_additive_is_submodular() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let values: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..10.0)).collect();
            let budget = rng.gen_range(0.0..30.0);
            let v = Valuation::budget_additive(values, budget).unwrap();
            assert!(check_class(&v, ValuationClass::Submodular)
                .unwrap()
                .is_yes());
            // Tabulated copy goes through the LP certificate instead.
            assert!(check_class(&v.to_table(), ValuationClass::Xos)
                .unwrap()
                .is_yes());
        }
    }

    #[test]
    fn subadditive_but_not_xos_table() {
        // v = 1 on singletons and pairs, v(M) = 2. The three pairs with
        // weight 1/2 each cover M at cost 3/2 < 2, so M has no supporting clause.
        let values = vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0];
        let v = Valuation::table(3, values).unwrap();
        assert!(check_class(&v, ValuationClass::Subadditive)
            .unwrap()
            .is_yes());
        assert_eq!(check_class(&v, ValuationClass::Xos).unwrap(), Verdict::No);
    }

    #[test]
    fn xos_family_is_subadditive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let clauses = (0..3)
                .map(|_| (0..6).map(|_| rng.gen_range(0.0..5.0)).collect())
                .collect();
            let v = Valuation::xos(clauses).unwrap();
            assert!(check_class(&v, ValuationClass::Subadditive)
                .unwrap()
                .is_yes());
            assert!(check_class(&v, ValuationClass::Xos).unwrap().is_yes());
        }
    }

    #[test]
    fn large_universes() {
        let v = Valuation::additive(vec![1.0; 17]).unwrap();
        assert!(matches!(
            check_class(&v, ValuationClass::Submodular),
            Err(ValuationError::TooLargeForExhaustive { .. })
        ));
        let table = Valuation::additive(vec![1.0; 7]).unwrap().to_table();
        assert_eq!(
            check_class(&table, ValuationClass::Xos).unwrap(),
            Verdict::Yes
        );
        // XOS but not submodular: item 1 is worth more once items 0 and 2 are held.
        let mut a = vec![0.0; 7];
        let mut b = vec![0.0; 7];
        a[0] = 1.0;
        a[1] = 1.0;
        b[2] = 1.5;
        let table = Valuation::xos(vec![a, b]).unwrap().to_table();
        assert_eq!(
            check_class(&table, ValuationClass::Xos).unwrap(),
            Verdict::Unknown
        );
    }
}
