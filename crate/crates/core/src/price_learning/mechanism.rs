use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{build_price_tree, next_prices, Parity, PriceTree, TreeParams};
use super::PriceLearningError;
use crate::auctions::{
    fixed_price_auction, second_price_grand_bundle, AuctionContext, AuctionOutcome, Bidder,
    SpaOutcome,
};
use crate::demand::PriceVector;
use crate::rng::SeedTree;
use crate::valuations::{ItemSet, Valuation};

/// Bracket `[psi_min, psi_max]` for the nonzero supporting prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiRange {
    pub psi_min: f64,
    pub psi_max: f64,
    /// The grand-bundle welfare it was derived from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spa: Option<f64>,
}

impl PsiRange {
    pub fn explicit(psi_min: f64, psi_max: f64) -> Self {
        PsiRange {
            psi_min,
            psi_max,
            spa: None,
        }
    }

    /// `psi_min = SPA / (4 m^2)` and `psi_max = 4 m SPA`.
    pub fn from_spa(spa: f64, m: usize) -> Self {
        let m = m as f64;
        PsiRange {
            psi_min: spa / (4.0 * m * m),
            psi_max: 4.0 * m * spa,
            spa: Some(spa),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismParams {
    pub alpha: usize,
    pub beta: usize,
    /// Overrides the default accuracy factor.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Price discount of the bidders' demand oracle.
    pub d: f64,
}

impl MechanismParams {
    pub fn new(alpha: usize, beta: usize, gamma: Option<f64>, d: f64) -> Self {
        MechanismParams {
            alpha,
            beta,
            gamma,
            d,
        }
    }

    fn check_d(&self) -> Result<(), PriceLearningError> {
        if !(self.d > 0.0 && self.d <= 1.0) {
            return Err(PriceLearningError::BadDiscount(self.d));
        }
        Ok(())
    }
}

/// Where the returned allocation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeSource {
    GrandBundle,
    /// Auction `auction` (from 1) of iteration `iteration` (from 1).
    EarlyStop {
        iteration: usize,
        auction: usize,
    },
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MechanismOutcome {
    pub allocation: Vec<ItemSet>,
    pub payments: Vec<f64>,
    pub welfare: f64,
    pub source: OutcomeSource,
}

impl MechanismOutcome {
    fn from_auction(out: &AuctionOutcome, source: OutcomeSource) -> Self {
        MechanismOutcome {
            allocation: out.allocation.clone(),
            payments: out.payments.clone(),
            welfare: out.welfare,
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub group: Vec<usize>,
    /// `p^(i)`.
    pub prices: Vec<f64>,
    /// `p^(i)_j` for `j = 1..=alpha`; auction `j` posts `d p^(i)_j / 2`.
    pub candidates: Vec<Vec<f64>>,
    pub auctions: Vec<AuctionOutcome>,
    pub early_stop: bool,
    /// Chosen auction (from 1) when stopping early.
    pub j_star: Option<usize>,
    /// `p^(i+1)` when continuing.
    pub updated: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearningTrace {
    pub parity: Parity,
    pub tree: TreeParams,
    pub groups: Vec<Vec<usize>>,
    pub iterations: Vec<IterationTrace>,
    /// Base prices `p^(beta+1)` and the auction over the last group.
    pub final_prices: Option<Vec<f64>>,
    pub final_auction: Option<AuctionOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatTrace {
    pub n_stat: Vec<usize>,
    pub n_mech: Vec<usize>,
    /// Winner is a global bidder index.
    pub spa: Option<SpaOutcome>,
    pub returned: bool,
    /// `N_stat` was empty or `SPA = 0`; the fallback range was used.
    pub degenerate: bool,
    pub psi: PsiRange,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MechanismTrace {
    pub stat: Option<StatTrace>,
    pub learning: Option<LearningTrace>,
    pub outcome: MechanismOutcome,
}

impl MechanismTrace {
    /// Every fixed-price auction that ran, in order.
    pub fn auctions(&self) -> impl Iterator<Item = &AuctionOutcome> {
        self.learning.iter().flat_map(|l| {
            l.iterations
                .iter()
                .flat_map(|it| it.auctions.iter())
                .chain(l.final_auction.iter())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("traces contain only finite numbers")
    }
}

/// Shuffles the bidders, then moves `max(1, floor(n / (10 beta)))` of them
/// (fewer if fewer remain) into each of the first `beta` groups; the rest
/// form group `beta + 1`.
pub fn partition<R: Rng + ?Sized>(bidders: &[usize], beta: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order = bidders.to_vec();
    order.shuffle(rng);
    let take = (bidders.len() / (10 * beta.max(1))).max(1);
    let mut rest = order.as_slice();
    let mut groups = Vec::with_capacity(beta + 1);
    for _ in 0..beta {
        let (group, tail) = rest.split_at(take.min(rest.len()));
        groups.push(group.to_vec());
        rest = tail;
    }
    groups.push(rest.to_vec());
    groups
}

/// Each item takes its price from the highest-indexed auction that sold it,
/// or from `prices[0]` if none did.
pub fn price_update(
    outcomes: &[AuctionOutcome],
    prices: &[PriceVector],
) -> Result<PriceVector, PriceLearningError> {
    let first = prices.first().ok_or(PriceLearningError::NoAuctions)?;
    if outcomes.len() != prices.len() {
        return Err(PriceLearningError::NoAuctions);
    }
    let updated = (0..first.universe_size())
        .map(|item| {
            outcomes
                .iter()
                .rposition(|o| o.sold.contains(item))
                .map_or(first[item], |j| prices[j][item])
        })
        .collect();
    Ok(PriceVector::new(updated)?)
}

/// Convenience: every valuation as an advice-following bidder.
pub fn advised_bidders(
    vals: &[Valuation],
    oracle: crate::demand::OracleKind,
    policy: crate::auctions::TentativePolicy,
) -> Vec<Bidder> {
    vals.iter()
        .map(|v| Bidder::advised(v.clone(), oracle, policy))
        .collect()
}

fn auction_seeds(seeds: SeedTree, id: u64) -> AuctionContext {
    AuctionContext::new(id, seeds.child("auction", id))
}

/// Learns posted prices over `beta` iterations of `alpha` fixed-price
/// auctions, stopping early with probability `1/beta` per iteration, then
/// sells to the last group at the learned prices.
///
/// `participants` are global bidder indices; auction `j` of iteration `i`
/// runs with context id `(i - 1) alpha + j - 1` and the final auction with
/// `beta alpha`.
pub fn price_learning_mechanism(
    bidders: &[Bidder],
    participants: &[usize],
    items: ItemSet,
    psi: PsiRange,
    params: MechanismParams,
    seeds: SeedTree,
) -> Result<(MechanismOutcome, LearningTrace), PriceLearningError> {
    params.check_d()?;
    let m = items.universe_size();
    let parity = if seeds.stream("parity", 0).gen_bool(0.5) {
        Parity::Odd
    } else {
        Parity::Even
    };
    let tree_params = TreeParams::new(
        params.alpha,
        params.beta,
        params.gamma,
        psi.psi_min,
        psi.psi_max,
        parity,
    )?;
    let tree = build_price_tree(tree_params)?;
    for &b in participants {
        if b >= bidders.len() {
            return Err(PriceLearningError::UnknownBidder(b));
        }
    }
    let groups = partition(participants, params.beta, &mut seeds.stream("partition", 0));
    let mut trace = LearningTrace {
        parity,
        tree: tree_params,
        groups: groups.clone(),
        iterations: Vec::with_capacity(params.beta),
        final_prices: None,
        final_auction: None,
    };

    let mut p = tree.root_vector(m)?;
    for i in 1..=params.beta {
        let (candidates, auctions) =
            run_iteration(&tree, i, &p, bidders, &groups[i - 1], items, params, seeds)?;
        let mut record = IterationTrace {
            iteration: i,
            group: groups[i - 1].clone(),
            prices: p.as_slice().to_vec(),
            candidates: candidates.iter().map(|c| c.as_slice().to_vec()).collect(),
            auctions,
            early_stop: false,
            j_star: None,
            updated: None,
        };
        if seeds
            .stream("early_stop", i as u64)
            .gen_bool(1.0 / params.beta as f64)
        {
            let j_star = seeds.stream("jstar", i as u64).gen_range(1..=params.alpha);
            let outcome = MechanismOutcome::from_auction(
                &record.auctions[j_star - 1],
                OutcomeSource::EarlyStop {
                    iteration: i,
                    auction: j_star,
                },
            );
            record.early_stop = true;
            record.j_star = Some(j_star);
            trace.iterations.push(record);
            return Ok((outcome, trace));
        }
        p = price_update(&record.auctions, &candidates)?;
        record.updated = Some(p.as_slice().to_vec());
        trace.iterations.push(record);
    }

    let posted = p.scaled(params.d / 2.0);
    let id = (params.beta * params.alpha) as u64;
    let last = &groups[params.beta];
    let out = fixed_price_auction(items, bidders, last, &posted, auction_seeds(seeds, id))?;
    let outcome = MechanismOutcome::from_auction(&out, OutcomeSource::Final);
    trace.final_prices = Some(p.into_vec());
    trace.final_auction = Some(out);
    Ok((outcome, trace))
}

#[allow(clippy::too_many_arguments)]
fn run_iteration(
    tree: &PriceTree,
    i: usize,
    p: &PriceVector,
    bidders: &[Bidder],
    group: &[usize],
    items: ItemSet,
    params: MechanismParams,
    seeds: SeedTree,
) -> Result<(Vec<PriceVector>, Vec<AuctionOutcome>), PriceLearningError> {
    let mut candidates = Vec::with_capacity(params.alpha);
    let mut auctions = Vec::with_capacity(params.alpha);
    for j in 1..=params.alpha {
        let pj = next_prices(tree, i, j, p)?;
        let posted = pj.scaled(params.d / 2.0);
        let id = ((i - 1) * params.alpha + j - 1) as u64;
        auctions.push(fixed_price_auction(
            items,
            bidders,
            group,
            &posted,
            auction_seeds(seeds, id),
        )?);
        candidates.push(pj);
    }
    Ok((candidates, auctions))
}

/// Sends each bidder to a statistics group with probability 1/2 and sells
/// the grand bundle among them in a second-price auction. With probability
/// 1/2 that sale is final; otherwise its welfare sets the price range for
/// price learning over the remaining bidders.
///
/// If the statistics group is empty or its auction has zero welfare, the
/// run skips straight to learning over the remaining bidders with
/// `fallback` and is flagged degenerate.
pub fn generalized_mechanism(
    bidders: &[Bidder],
    items: ItemSet,
    params: MechanismParams,
    fallback: PsiRange,
    seeds: SeedTree,
) -> Result<(MechanismOutcome, MechanismTrace), PriceLearningError> {
    if bidders.is_empty() {
        return Err(PriceLearningError::NoBidders);
    }
    params.check_d()?;
    let m = items.universe_size();
    let (n_stat, n_mech): (Vec<usize>, Vec<usize>) =
        (0..bidders.len()).partition(|&b| seeds.stream("stat_coin", b as u64).gen_bool(0.5));

    let spa = if n_stat.is_empty() {
        None
    } else {
        let vals: Vec<&Valuation> = n_stat.iter().map(|&b| &bidders[b].valuation).collect();
        let mut out = second_price_grand_bundle(&vals, items)?;
        out.winner = n_stat[out.winner];
        Some(out)
    };
    let degenerate = spa.is_none_or(|s| s.welfare <= 0.0);
    let mut stat = StatTrace {
        n_stat,
        n_mech: n_mech.clone(),
        spa,
        returned: false,
        degenerate,
        psi: fallback,
    };

    if let (false, Some(s)) = (degenerate, spa) {
        if seeds.stream("spa_return", 0).gen_bool(0.5) {
            let mut allocation = vec![ItemSet::from_bits_unchecked(m, 0); bidders.len()];
            let mut payments = vec![0.0; bidders.len()];
            allocation[s.winner] = items;
            payments[s.winner] = s.price;
            let outcome = MechanismOutcome {
                allocation,
                payments,
                welfare: s.welfare,
                source: OutcomeSource::GrandBundle,
            };
            stat.returned = true;
            stat.psi = PsiRange::from_spa(s.welfare, items.len());
            let trace = MechanismTrace {
                stat: Some(stat),
                learning: None,
                outcome: outcome.clone(),
            };
            return Ok((outcome, trace));
        }
        stat.psi = PsiRange::from_spa(s.welfare, items.len());
    }

    let (outcome, learning) = price_learning_mechanism(
        bidders,
        &n_mech,
        items,
        stat.psi,
        params,
        seeds.child("learning", 0),
    )?;
    let trace = MechanismTrace {
        stat: Some(stat),
        learning: Some(learning),
        outcome: outcome.clone(),
    };
    Ok((outcome, trace))
}
