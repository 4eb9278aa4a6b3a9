use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use auctionlab::auctions::TentativePolicy;
use auctionlab::demand::OracleKind;
use auctionlab::exec::Execution;
use auctionlab::experiments::{
    cmd_auction, cmd_demand, cmd_mechanism, cmd_verify, parse_prices, CmdOutput, ExperimentError,
};

#[derive(Parser)]
#[command(
    name = "auctionlab",
    version,
    about = "Demand oracles, fixed-price auctions and price-learning mechanisms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Query one bidder's demand oracle.
    Demand {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "exact")]
        oracle: OracleKind,
        /// Comma-separated or JSON list; defaults to the instance's prices.
        #[arg(long)]
        prices: Option<String>,
        #[arg(long, default_value_t = 0)]
        bidder: usize,
        /// Check the oracle's (c, d) guarantee by enumeration.
        #[arg(long)]
        verify: bool,
    },
    /// Run one fixed-price auction, bidders in list order.
    Auction {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "exact")]
        oracle: OracleKind,
        #[arg(long)]
        prices: Option<String>,
        #[arg(long, value_enum, default_value_t = Policy::Empty)]
        tentative: Policy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also compute OPT and the welfare ratio.
        #[arg(long)]
        verify: bool,
    },
    /// Run an experiment config and emit its report.
    Mechanism {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// JSON report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-trial CSV rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a verification suite: oracles, fpa_lemma, tree, psi_range,
    /// demand_welfare_equiv or counterexamples.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Exec::Auto)]
        execution: Exec,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Empty,
    Random,
    AdversarialWorst,
}

impl From<Policy> for TentativePolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Empty => TentativePolicy::Empty,
            Policy::Random => TentativePolicy::Random,
            Policy::AdversarialWorst => TentativePolicy::AdversarialWorst,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Exec {
    Sequential,
    Parallel,
    Auto,
}

impl From<Exec> for Execution {
    fn from(e: Exec) -> Self {
        match e {
            Exec::Sequential => Execution::Sequential,
            Exec::Parallel => Execution::Parallel,
            Exec::Auto => Execution::Auto,
        }
    }
}

fn prices(arg: Option<String>) -> Result<Option<Vec<f64>>, ExperimentError> {
    arg.as_deref().map(parse_prices).transpose()
}

fn run(cli: Cli) -> Result<CmdOutput, ExperimentError> {
    match cli.command {
        Command::Demand {
            instance,
            oracle,
            prices: p,
            bidder,
            verify,
        } => cmd_demand(&instance, oracle, prices(p)?, bidder, verify),
        Command::Auction {
            instance,
            oracle,
            prices: p,
            tentative,
            seed,
            verify,
        } => cmd_auction(
            &instance,
            oracle,
            prices(p)?,
            tentative.into(),
            seed,
            verify,
        ),
        Command::Mechanism {
            config,
            seed,
            trials,
            out,
            csv,
        } => cmd_mechanism(&config, seed, trials, out.as_deref(), csv.as_deref()),
        Command::Verify {
            suite,
            seed,
            trials,
            out,
            execution,
        } => cmd_verify(&suite, seed, trials, out.as_deref(), execution.into()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{}", out.text);
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
