//! The price tree, price learning through repeated fixed-price auctions,
//! and the wrapper that first estimates the price range from a
//! grand-bundle auction.

mod mechanism;
mod tree;

pub use mechanism::{
    advised_bidders, generalized_mechanism, partition, price_learning_mechanism, price_update,
    IterationTrace, LearningTrace, MechanismOutcome, MechanismParams, MechanismTrace,
    OutcomeSource, PsiRange, StatTrace,
};
pub use tree::{
    build_price_tree, next_prices, Parity, PriceTree, TreeParams, MAX_LEAVES, NODE_PRICE_TOLERANCE,
};

use thiserror::Error;

use crate::auctions::AuctionError;
use crate::demand::DemandError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriceLearningError {
    #[error("alpha = {0}: the tree needs alpha >= 2")]
    AlphaTooSmall(usize),
    #[error("beta = {0}: the tree needs beta >= 1")]
    BetaTooSmall(usize),
    #[error("alpha^beta = {alpha}^{beta} leaves exceeds the cap")]
    TreeTooLarge { alpha: usize, beta: usize },
    #[error("gamma = {0}: the tree needs gamma > 1")]
    GammaNotAboveOne(f64),
    #[error("gamma = {gamma} violates gamma >= 10 beta (beta = {beta})")]
    GammaBelowTenBeta { gamma: f64, beta: usize },
    #[error(
        "leaf coverage violated: psi_min * gamma^(2 alpha^beta) = {reach} < psi_max = {psi_max}"
    )]
    RangeNotCovered { reach: f64, psi_max: f64 },
    #[error("tree prices overflow: psi_min * gamma^(2 alpha^beta) is not finite")]
    PricesOverflow,
    #[error("price range [{psi_min}, {psi_max}] must be finite with 0 < psi_min <= psi_max")]
    BadPsi { psi_min: f64, psi_max: f64 },
    #[error("d = {0} outside (0, 1]")]
    BadDiscount(f64),
    #[error("level {level} outside 1..={beta}")]
    BadLevel { level: usize, beta: usize },
    #[error("branch {j} outside 1..={alpha}")]
    BadBranch { j: usize, alpha: usize },
    #[error("price {price} of item {item} is not a level-{level} node price")]
    NotLevelVector {
        item: usize,
        price: f64,
        level: usize,
    },
    #[error("price update needs one price vector per auction, and at least one")]
    NoAuctions,
    #[error("mechanism needs at least one bidder")]
    NoBidders,
    #[error("bidder {0} does not exist")]
    UnknownBidder(usize),
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error(transparent)]
    Demand(#[from] DemandError),
}
