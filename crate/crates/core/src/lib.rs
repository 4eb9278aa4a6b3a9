//! Posted-price combinatorial auctions with approximate demand oracles.
//!
//! Bidders hold valuations over a small universe of items (at most 24).
//! Demand oracles, exact or approximate, advise them what to buy at posted
//! prices; fixed-price auctions and a price-learning mechanism build on
//! that; a brute-force verifier checks the welfare guarantees.

pub mod auctions;
pub mod demand;
pub mod exec;
pub mod experiments;
pub mod numeric;
pub mod price_learning;
pub mod rng;
pub mod valuations;
pub mod verifier;
