//! Fixed-price auctions, advice-following bidders and the second-price
//! auction on the grand bundle.

mod fixed_price;
mod strategy;

pub use fixed_price::{
    fixed_price_auction, run_in_list_order, AuctionContext, AuctionOutcome, Turn,
};
pub use strategy::{advise, Bidder, Strategy, TentativePolicy};

use serde::Serialize;
use thiserror::Error;

use crate::demand::DemandError;
use crate::valuations::{ItemSet, Valuation, ValuationError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuctionError {
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error("bidder {bidder} tried to buy {wanted}, but only {available} is available")]
    Unavailable {
        bidder: usize,
        wanted: ItemSet,
        available: ItemSet,
    },
    #[error("tentative set {tentative} is not within the available items {available}")]
    TentativeUnavailable {
        tentative: ItemSet,
        available: ItemSet,
    },
    #[error("auction needs at least one bidder")]
    NoBidders,
    #[error("visit order names bidder {0}, which does not exist")]
    UnknownBidder(usize),
    #[error("bidder {0} appears twice in the visit order")]
    RepeatedBidder(usize),
}

/// Result of a sealed-bid second-price auction for one bundle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaOutcome {
    /// Index into the bidder list passed in.
    pub winner: usize,
    /// Second-highest bid, zero with a single bidder.
    pub price: f64,
    /// Winner's value for the bundle.
    pub welfare: f64,
}

/// Sells `bundle` as a whole to the highest truthful bidder at the
/// second-highest bid. Ties go to the lowest index.
pub fn second_price_grand_bundle(
    bidders: &[&Valuation],
    bundle: ItemSet,
) -> Result<SpaOutcome, AuctionError> {
    if bidders.is_empty() {
        return Err(AuctionError::NoBidders);
    }
    let mut bids = Vec::with_capacity(bidders.len());
    for v in bidders {
        bids.push(v.value(bundle)?);
    }
    let mut winner = 0;
    for (i, &b) in bids.iter().enumerate() {
        if b > bids[winner] {
            winner = i;
        }
    }
    let price = bids
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != winner)
        .map(|(_, &b)| b)
        .fold(0.0, f64::max);
    Ok(SpaOutcome {
        winner,
        price,
        welfare: bids[winner],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spa_examples() {
        let a = Valuation::additive(vec![4.0, 6.0]).unwrap();
        let b = Valuation::additive(vec![3.0, 3.0]).unwrap();
        let m = ItemSet::full(2).unwrap();
        let out = second_price_grand_bundle(&[&a, &b], m).unwrap();
        assert_eq!(
            out,
            SpaOutcome {
                winner: 0,
                price: 6.0,
                welfare: 10.0
            }
        );

        let single = Valuation::additive(vec![7.0]).unwrap();
        let out = second_price_grand_bundle(&[&single], ItemSet::full(1).unwrap()).unwrap();
        assert_eq!(
            out,
            SpaOutcome {
                winner: 0,
                price: 0.0,
                welfare: 7.0
            }
        );

        assert_eq!(
            second_price_grand_bundle(&[], m),
            Err(AuctionError::NoBidders)
        );
    }

    #[test]
    fn spa_ties_go_to_lowest_index() {
        let a = Valuation::additive(vec![5.0]).unwrap();
        let out = second_price_grand_bundle(&[&a, &a, &a], ItemSet::full(1).unwrap()).unwrap();
        assert_eq!(out.winner, 0);
        assert_eq!(out.price, 5.0);
    }
}
