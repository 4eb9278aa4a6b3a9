use serde::Serialize;

use super::{AuctionError, Bidder};
use crate::demand::{utility, DemandError, PriceVector};
use crate::rng::SeedTree;
use crate::valuations::ItemSet;

/// Identifies one auction run: `id` selects scripted purchases and `seeds`
/// feeds randomized tentative sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuctionContext {
    pub id: u64,
    pub seeds: SeedTree,
}

impl AuctionContext {
    pub fn new(id: u64, seeds: SeedTree) -> Self {
        AuctionContext { id, seeds }
    }
}

/// One bidder's visit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Turn {
    pub bidder: usize,
    pub available: ItemSet,
    pub tentative: Option<ItemSet>,
    /// Oracle recommendation and its utility; absent for scripted bidders.
    pub recommended: Option<ItemSet>,
    pub recommended_utility: Option<f64>,
    pub purchased: ItemSet,
    pub purchased_utility: f64,
}

impl Turn {
    /// Whether the purchase is at least as good as the recommendation.
    /// Scripted bidders have none and count as following it.
    pub fn follows_advice(&self) -> bool {
        self.recommended_utility
            .is_none_or(|r| self.purchased_utility >= r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuctionOutcome {
    pub prices: Vec<f64>,
    /// Indexed by bidder; bidders outside the visit order get nothing.
    #[serde(rename = "purchases")]
    pub allocation: Vec<ItemSet>,
    pub payments: Vec<f64>,
    pub welfare: f64,
    pub sold: ItemSet,
    pub visit_order: Vec<usize>,
    #[serde(skip)]
    pub turns: Vec<Turn>,
}

/// Offers `items` at fixed `prices` to the bidders named in `order`, one at a
/// time. Each buys a subset of whatever is still unsold and pays its price.
pub fn fixed_price_auction(
    items: ItemSet,
    bidders: &[Bidder],
    order: &[usize],
    prices: &PriceVector,
    ctx: AuctionContext,
) -> Result<AuctionOutcome, AuctionError> {
    let m = items.universe_size();
    if prices.universe_size() != m {
        return Err(DemandError::PriceUniverse {
            expected: m,
            found: prices.universe_size(),
        }
        .into());
    }
    let mut seen = vec![false; bidders.len()];
    for &b in order {
        let slot = seen.get_mut(b).ok_or(AuctionError::UnknownBidder(b))?;
        if *slot {
            return Err(AuctionError::RepeatedBidder(b));
        }
        *slot = true;
        bidders[b].valuation.check_set(items)?;
    }

    let nothing = ItemSet::from_bits_unchecked(m, 0);
    let mut allocation = vec![nothing; bidders.len()];
    let mut payments = vec![0.0; bidders.len()];
    let mut turns = Vec::with_capacity(order.len());
    let mut remaining = items;
    for &b in order {
        let bidder = &bidders[b];
        let v = &bidder.valuation;
        let decision = bidder
            .strategy
            .decide(b, v, prices, remaining, ctx.id, ctx.seeds)?;
        let bought = decision.purchase;
        debug_assert!(bought.is_subset_of(remaining));
        turns.push(Turn {
            bidder: b,
            available: remaining,
            tentative: decision.tentative,
            recommended: decision.recommendation.map(|r| r.chosen),
            recommended_utility: decision.recommendation.map(|r| r.utility),
            purchased: bought,
            purchased_utility: utility(v, prices, bought),
        });
        allocation[b] = bought;
        payments[b] = prices.price_of(bought);
        remaining = remaining.difference(bought);
    }
    let welfare = order
        .iter()
        .map(|&b| bidders[b].valuation.value_of_bits(allocation[b].bits()))
        .sum();
    Ok(AuctionOutcome {
        prices: prices.as_slice().to_vec(),
        allocation,
        payments,
        welfare,
        sold: items.difference(remaining),
        visit_order: order.to_vec(),
        turns,
    })
}

/// [`fixed_price_auction`] over all bidders in index order.
pub fn run_in_list_order(
    items: ItemSet,
    bidders: &[Bidder],
    prices: &PriceVector,
    ctx: AuctionContext,
) -> Result<AuctionOutcome, AuctionError> {
    let order: Vec<usize> = (0..bidders.len()).collect();
    fixed_price_auction(items, bidders, &order, prices, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auctions::{Strategy, TentativePolicy};
    use crate::demand::OracleKind;
    use crate::valuations::Valuation;

    fn set(m: usize, items: &[usize]) -> ItemSet {
        ItemSet::from_items(m, items.iter().copied()).unwrap()
    }

    fn ctx() -> AuctionContext {
        AuctionContext::new(0, SeedTree::new(7))
    }

    #[test]
    fn first_bidder_takes_what_it_wants() {
        let bidders = vec![
            Bidder::new(
                Valuation::additive(vec![3.0, 0.5]).unwrap(),
                Strategy::Exact,
            ),
            Bidder::new(
                Valuation::additive(vec![3.0, 3.0]).unwrap(),
                Strategy::Exact,
            ),
        ];
        let p = PriceVector::new(vec![1.0, 1.0]).unwrap();
        let out = run_in_list_order(ItemSet::full(2).unwrap(), &bidders, &p, ctx()).unwrap();
        assert_eq!(out.allocation, vec![set(2, &[0]), set(2, &[1])]);
        assert_eq!(out.payments, vec![1.0, 1.0]);
        assert_eq!(out.welfare, 6.0);
        assert_eq!(out.sold, ItemSet::full(2).unwrap());
        assert!(out.turns.iter().all(Turn::follows_advice));
    }

    #[test]
    fn order_matters() {
        let bidders = vec![
            Bidder::new(
                Valuation::additive(vec![3.0, 0.5]).unwrap(),
                Strategy::Exact,
            ),
            Bidder::new(
                Valuation::additive(vec![3.0, 3.0]).unwrap(),
                Strategy::Exact,
            ),
        ];
        let p = PriceVector::new(vec![1.0, 1.0]).unwrap();
        let out =
            fixed_price_auction(ItemSet::full(2).unwrap(), &bidders, &[1, 0], &p, ctx()).unwrap();
        assert_eq!(out.allocation, vec![set(2, &[]), set(2, &[0, 1])]);
        assert_eq!(out.visit_order, vec![1, 0]);
    }

    #[test]
    fn scripted_bidder_cannot_buy_sold_items() {
        let v = Valuation::additive(vec![1.0, 1.0]).unwrap();
        let bidders = vec![
            Bidder::new(v.clone(), Strategy::Scripted(vec![set(2, &[0])])),
            Bidder::new(v, Strategy::Scripted(vec![set(2, &[0, 1])])),
        ];
        let p = PriceVector::zeros(2).unwrap();
        let err = run_in_list_order(ItemSet::full(2).unwrap(), &bidders, &p, ctx()).unwrap_err();
        assert!(matches!(err, AuctionError::Unavailable { bidder: 1, .. }));
    }

    #[test]
    fn bad_orders_are_rejected() {
        let v = Valuation::additive(vec![1.0]).unwrap();
        let bidders = vec![Bidder::new(v, Strategy::Exact)];
        let p = PriceVector::zeros(1).unwrap();
        let all = ItemSet::full(1).unwrap();
        assert_eq!(
            fixed_price_auction(all, &bidders, &[0, 0], &p, ctx()),
            Err(AuctionError::RepeatedBidder(0))
        );
        assert_eq!(
            fixed_price_auction(all, &bidders, &[3], &p, ctx()),
            Err(AuctionError::UnknownBidder(3))
        );
    }

    #[test]
    fn random_tentative_is_reproducible() {
        let v = Valuation::additive(vec![2.0, 1.0, 3.0, 1.0]).unwrap();
        let bidders = vec![Bidder::advised(
            v,
            OracleKind::Null,
            TentativePolicy::Random,
        )];
        let p = PriceVector::new(vec![1.0, 2.0, 1.0, 0.5]).unwrap();
        let all = ItemSet::full(4).unwrap();
        let a = run_in_list_order(all, &bidders, &p, ctx()).unwrap();
        let b = run_in_list_order(all, &bidders, &p, ctx()).unwrap();
        assert_eq!(a, b);
        assert!(a.turns[0].follows_advice());
    }
}
