//! Instance and experiment files, the Monte Carlo runner, verification
//! suites and the command implementations behind the CLI.

mod commands;
mod config;
mod runner;
mod suites;

pub use commands::{cmd_auction, cmd_demand, cmd_mechanism, cmd_verify, parse_prices, CmdOutput};
pub use config::{
    load_config, load_instance, parse_config, parse_instance, ExperimentConfig, GeneratorSpec,
    Instance, InstanceFile, InstanceSource, MechanismKind, ParamsConfig, MAX_TRIALS,
};
pub use runner::{run_experiment, Aggregates, Report, TrialRecord};
pub use suites::{run_suite, CheckResult, Suite, SuiteReport};

use thiserror::Error;

use crate::auctions::AuctionError;
use crate::demand::DemandError;
use crate::price_learning::PriceLearningError;
use crate::valuations::ValuationError;
use crate::verifier::VerifierError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{what}: {message}")]
    Parse { what: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("bidders[{bidder}]: {source}")]
    Bidder {
        bidder: usize,
        source: ValuationError,
    },
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error(transparent)]
    PriceLearning(#[from] PriceLearningError),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error("unknown suite {0:?}; expected one of oracles, fpa_lemma, tree, psi_range, demand_welfare_equiv, counterexamples")]
    UnknownSuite(String),
}
