use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AuctionError;
use crate::demand::{utility, DemandResult, OracleKind, PriceVector};
use crate::rng::SeedTree;
use crate::valuations::{ItemSet, Valuation};

/// Where an advice-following bidder's tentative purchase comes from
/// before the advice is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TentativePolicy {
    #[default]
    Empty,
    /// Each available item independently with probability 1/2.
    Random,
    /// The advised outcome of lowest utility over every possible tentative
    /// set; the least favourable behaviour that still follows advice.
    AdversarialWorst,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Buys an exact demand set.
    Exact,
    /// Forms a tentative set, then keeps whichever of it and the oracle's
    /// recommendation has higher utility, preferring the tentative set on ties.
    AdviceFollowing {
        oracle: OracleKind,
        tentative: TentativePolicy,
    },
    /// Buys `sets[context id]` (empty past the end of the script).
    Scripted(Vec<ItemSet>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bidder {
    pub valuation: Valuation,
    pub strategy: Strategy,
}

impl Bidder {
    pub fn new(valuation: Valuation, strategy: Strategy) -> Self {
        Bidder {
            valuation,
            strategy,
        }
    }

    pub fn advised(valuation: Valuation, oracle: OracleKind, tentative: TentativePolicy) -> Self {
        Bidder {
            valuation,
            strategy: Strategy::AdviceFollowing { oracle, tentative },
        }
    }
}

/// What a bidder decided at its turn.
pub(crate) struct Decision {
    pub tentative: Option<ItemSet>,
    pub recommendation: Option<DemandResult>,
    pub purchase: ItemSet,
}

/// Runs the oracle on `available` and returns `tentative` unless the
/// recommendation has strictly higher utility.
pub fn advise(
    oracle: OracleKind,
    v: &Valuation,
    p: &PriceVector,
    available: ItemSet,
    tentative: ItemSet,
) -> Result<ItemSet, AuctionError> {
    check_tentative(available, tentative)?;
    let rec = oracle.query(v, p, available)?;
    Ok(apply_advice(v, p, &rec, tentative))
}

fn apply_advice(v: &Valuation, p: &PriceVector, rec: &DemandResult, tentative: ItemSet) -> ItemSet {
    if utility(v, p, tentative) >= rec.utility {
        tentative
    } else {
        rec.chosen
    }
}

fn check_tentative(available: ItemSet, tentative: ItemSet) -> Result<(), AuctionError> {
    if tentative.universe_size() != available.universe_size() || !tentative.is_subset_of(available)
    {
        return Err(AuctionError::TentativeUnavailable {
            tentative,
            available,
        });
    }
    Ok(())
}

impl Strategy {
    pub(crate) fn decide(
        &self,
        bidder: usize,
        v: &Valuation,
        p: &PriceVector,
        available: ItemSet,
        context_id: u64,
        seeds: SeedTree,
    ) -> Result<Decision, AuctionError> {
        match self {
            Strategy::Exact => {
                let rec = OracleKind::Exact.query(v, p, available)?;
                Ok(Decision {
                    tentative: None,
                    recommendation: Some(rec),
                    purchase: rec.chosen,
                })
            }
            Strategy::AdviceFollowing { oracle, tentative } => {
                let rec = oracle.query(v, p, available)?;
                let (tentative, purchase) = match tentative {
                    TentativePolicy::Empty => {
                        let t = ItemSet::from_bits_unchecked(available.universe_size(), 0);
                        (t, apply_advice(v, p, &rec, t))
                    }
                    TentativePolicy::Random => {
                        let mut rng = seeds.stream("tentative", bidder as u64);
                        let bits = available
                            .iter()
                            .filter(|_| rng.gen_bool(0.5))
                            .fold(0u32, |acc, j| acc | 1 << j);
                        let t = ItemSet::from_bits_unchecked(available.universe_size(), bits);
                        (t, apply_advice(v, p, &rec, t))
                    }
                    TentativePolicy::AdversarialWorst => {
                        let mut worst: Option<(ItemSet, ItemSet, f64)> = None;
                        for t in available.subsets() {
                            let advised = apply_advice(v, p, &rec, t);
                            let u = utility(v, p, advised);
                            if worst.is_none_or(|(_, _, wu)| u < wu) {
                                worst = Some((t, advised, u));
                            }
                        }
                        let (t, advised, _) = worst.expect("the empty set is always a candidate");
                        (t, advised)
                    }
                };
                Ok(Decision {
                    tentative: Some(tentative),
                    recommendation: Some(rec),
                    purchase,
                })
            }
            Strategy::Scripted(sets) => {
                let wanted = sets
                    .get(context_id as usize)
                    .copied()
                    .unwrap_or_else(|| ItemSet::from_bits_unchecked(available.universe_size(), 0));
                if wanted.universe_size() != available.universe_size()
                    || !wanted.is_subset_of(available)
                {
                    return Err(AuctionError::Unavailable {
                        bidder,
                        wanted,
                        available,
                    });
                }
                Ok(Decision {
                    tentative: None,
                    recommendation: None,
                    purchase: wanted,
                })
            }
        }
    }
}
