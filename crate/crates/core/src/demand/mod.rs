//! Exact and bicriterion-approximate demand queries.
//!
//! A `(c, d)`-approximate demand oracle returns `S` with
//! `v(S) - p(S) >= c * max_T (v(T) - p(T) / d)`: a `c` fraction of the best
//! utility available if every price were inflated by `1/d`.

mod oracles;
mod prices;

pub use oracles::{
    cd_benchmark, cd_benchmark_within, demand_via_welfare, exact_demand, exact_demand_with,
    exact_demand_within, is_cd_competitive, meet_in_middle, meet_in_middle_within, simple_greedy,
    simple_greedy_within, single_or_bundle, single_or_bundle_within, utility, DemandResult,
    OracleKind, EXACT_MAX_ITEMS, VIA_WELFARE_MAX_ITEMS,
};
pub use prices::PriceVector;

pub(crate) use oracles::meet_in_middle_core;

use thiserror::Error;

use crate::valuations::ValuationError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DemandError {
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error("price[{index}] = {value} is not a finite nonnegative number")]
    BadPrice { index: usize, value: f64 },
    #[error("price vector has {found} items, valuation has {expected}")]
    PriceUniverse { expected: usize, found: usize },
    #[error("enumeration over {items} items exceeds the cap of {max}")]
    TooManyItems { items: usize, max: usize },
    #[error("price inflation parameter d = {0} outside (0, 1]")]
    BadDiscount(f64),
    #[error("unknown oracle {0:?}; expected one of exact, simple_greedy, single_or_bundle, meet_in_middle, demand_via_welfare, null")]
    UnknownOracle(String),
}
