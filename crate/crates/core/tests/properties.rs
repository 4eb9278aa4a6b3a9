use proptest::prelude::*;

use auctionlab::auctions::{advise, fixed_price_auction, AuctionContext, Bidder, TentativePolicy};
use auctionlab::demand::{demand_via_welfare, exact_demand, utility, OracleKind, PriceVector};
use auctionlab::exec::Execution;
use auctionlab::experiments::{parse_config, run_experiment, Aggregates, Report};
use auctionlab::price_learning::{
    build_price_tree, next_prices, partition, price_update, Parity, PsiRange, TreeParams,
};
use auctionlab::rng::SeedTree;
use auctionlab::valuations::{
    check_class, supporting_prices, verify_supporting, ItemSet, Valuation, ValuationClass,
};
use auctionlab::verifier::{optimal_welfare, optimal_welfare_with};

fn values(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..10.0f64, m)
}

/// Submodular valuations from the closed-form families.
fn submodular(m: usize) -> impl Strategy<Value = Valuation> {
    prop_oneof![
        values(m).prop_map(|v| Valuation::additive(v).unwrap()),
        values(m).prop_map(|v| Valuation::unit_demand(v).unwrap()),
        (values(m), 0.0..30.0f64).prop_map(|(v, b)| Valuation::budget_additive(v, b).unwrap()),
    ]
}

fn xos(m: usize) -> impl Strategy<Value = Valuation> {
    prop::collection::vec(values(m), 1..=3).prop_map(|c| Valuation::xos(c).unwrap())
}

fn any_valuation(m: usize) -> impl Strategy<Value = Valuation> {
    prop_oneof![submodular(m), xos(m)]
}

fn instance(max_n: usize, max_m: usize) -> impl Strategy<Value = (Vec<Valuation>, Vec<f64>)> {
    (1..=max_n, 1..=max_m).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(any_valuation(m), n),
            prop::collection::vec(0.0..6.0f64, m),
        )
    })
}

fn oracle() -> impl Strategy<Value = OracleKind> {
    prop::sample::select(OracleKind::ALL.to_vec())
}

fn policy() -> impl Strategy<Value = TentativePolicy> {
    prop::sample::select(vec![
        TentativePolicy::Empty,
        TentativePolicy::Random,
        TentativePolicy::AdversarialWorst,
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn advice_is_idempotent(
        v in (1..=7usize).prop_flat_map(any_valuation),
        oracle in oracle(),
        seed in any::<u64>(),
    ) {
        let m = v.universe_size();
        let mut rng = SeedTree::new(seed).rng();
        let p = PriceVector::new((0..m).map(|_| rng.gen_range(0.0..6.0)).collect()).unwrap();
        let available = ItemSet::from_bits(m, rng.gen_range(0..1u32 << m)).unwrap();
        let tentative = ItemSet::from_bits(m, rng.gen_range(0..1u32 << m) & available.bits()).unwrap();
        let once = advise(oracle, &v, &p, available, tentative).unwrap();
        prop_assert!(once.is_subset_of(available));
        prop_assert!(utility(&v, &p, once) >= utility(&v, &p, tentative));
        prop_assert_eq!(advise(oracle, &v, &p, available, once).unwrap(), once);
    }

    #[test]
    fn auctions_are_feasible_and_follow_advice(
        (vals, prices) in instance(3, 6),
        oracle in oracle(),
        policy in policy(),
        seed in any::<u64>(),
    ) {
        let m = vals[0].universe_size();
        let items = ItemSet::full(m).unwrap();
        let p = PriceVector::new(prices).unwrap();
        let bidders: Vec<Bidder> = vals.iter().map(|v| Bidder::advised(v.clone(), oracle, policy)).collect();
        let order: Vec<usize> = (0..vals.len()).rev().collect();
        let out = fixed_price_auction(items, &bidders, &order, &p, AuctionContext::new(0, SeedTree::new(seed))).unwrap();
        let mut union = 0u32;
        for (b, s) in out.allocation.iter().enumerate() {
            prop_assert_eq!(union & s.bits(), 0);
            union |= s.bits();
            prop_assert!((out.payments[b] - p.price_of(*s)).abs() <= 1e-12);
        }
        prop_assert_eq!(union, out.sold.bits());
        prop_assert!(out.turns.iter().all(|t| t.follows_advice()));
        let opt = optimal_welfare(&vals, items).unwrap().opt_welfare;
        prop_assert!(out.welfare <= opt + 1e-9 * opt.max(1.0));
    }

    #[test]
    fn exact_demand_matches_welfare_reduction(v in (1..=8usize).prop_flat_map(any_valuation), seed in any::<u64>()) {
        let m = v.universe_size();
        let mut rng = SeedTree::new(seed).rng();
        let p = PriceVector::new((0..m).map(|_| rng.gen_range(0.0..6.0)).collect()).unwrap();
        let a = exact_demand(&v, &p).unwrap();
        let b = demand_via_welfare(&v, &p).unwrap();
        prop_assert!((a.utility - b.utility).abs() <= 1e-12);
    }

    #[test]
    fn greedy_oracles_are_competitive_on_submodular(v in (1..=8usize).prop_flat_map(submodular), seed in any::<u64>()) {
        let m = v.universe_size();
        let mut rng = SeedTree::new(seed).rng();
        let p = PriceVector::new((0..m).map(|_| rng.gen_range(0.0..6.0)).collect()).unwrap();
        for oracle in [OracleKind::SimpleGreedy, OracleKind::MeetInMiddle] {
            let r = oracle.query(&v, &p, ItemSet::full(m).unwrap()).unwrap();
            prop_assert!(r.utility >= -1e-12);
            prop_assert!(auctionlab::demand::is_cd_competitive(r.chosen, &v, &p, 0.5, 0.5).unwrap());
        }
    }

    #[test]
    fn opt_agrees_with_partition_loop((vals, _) in instance(2, 8)) {
        let m = vals[0].universe_size();
        let got = optimal_welfare(&vals, ItemSet::full(m).unwrap()).unwrap();
        let full = (1u32 << m) - 1;
        let brute = if vals.len() == 1 {
            vals[0].value_of_bits(full)
        } else {
            (0..=full)
                .map(|s| vals[0].value_of_bits(s) + vals[1].value_of_bits(full & !s))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        prop_assert_eq!(got.opt_welfare, brute);
        let attained: f64 = vals.iter().zip(&got.allocation).map(|(v, s)| v.value_of_bits(s.bits())).sum();
        prop_assert_eq!(attained, got.opt_welfare);
    }

    #[test]
    fn opt_is_the_same_in_every_execution_mode((vals, _) in instance(4, 7)) {
        let items = ItemSet::full(vals[0].universe_size()).unwrap();
        let seq = optimal_welfare_with(&vals, items, Execution::Sequential).unwrap();
        prop_assert_eq!(&seq, &optimal_welfare_with(&vals, items, Execution::Parallel).unwrap());
        prop_assert_eq!(&seq, &optimal_welfare_with(&vals, items, Execution::Auto).unwrap());
    }

    #[test]
    fn supporting_prices_round_trip((vals, _) in instance(3, 8)) {
        let items = ItemSet::full(vals[0].universe_size()).unwrap();
        for v in &vals {
            prop_assert!(check_class(v, ValuationClass::Xos).unwrap().is_yes());
        }
        let alloc = optimal_welfare(&vals, items).unwrap().allocation;
        let sp = supporting_prices(&vals, &alloc).unwrap();
        prop_assert!(verify_supporting(&sp.q, &vals, &alloc).unwrap().is_valid());
    }

    #[test]
    fn tree_levels_are_geometric(
        alpha in 2..=3usize,
        beta in 1..=3usize,
        odd in any::<bool>(),
        psi_min in 1e-3..1e3f64,
        spread in 1.0..1e6f64,
    ) {
        let parity = if odd { Parity::Odd } else { Parity::Even };
        let params = TreeParams::new(alpha, beta, None, psi_min, psi_min * spread, parity).unwrap();
        let tree = build_price_tree(params).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        for level in 1..=beta + 1 {
            let prices = tree.level_prices(level).unwrap();
            prop_assert_eq!(prices.len(), alpha.pow(level as u32 - 1));
            let step = params.gamma.powi(2 * alpha.pow((beta + 1 - level) as u32) as i32);
            for w in prices.windows(2) {
                prop_assert!(rel(w[1] / w[0], step));
            }
        }
        let leaves = tree.level_prices(beta + 1).unwrap();
        prop_assert!(leaves[leaves.len() - 1] * params.gamma.powi(2) >= psi_min * spread * (1.0 - 1e-12));
        for level in 1..=beta {
            for (pos, &price) in tree.level_prices(level).unwrap().iter().enumerate() {
                let p = PriceVector::uniform(3, price).unwrap();
                for j in 1..=alpha {
                    let want = tree.node_price(level + 1, tree.child(level, pos, j).unwrap()).unwrap();
                    let got = next_prices(&tree, level, j, &p).unwrap();
                    prop_assert!(got.as_slice().iter().all(|&x| rel(x, want)));
                }
            }
        }
    }

    #[test]
    fn partition_covers_every_bidder(n in 0..60usize, beta in 1..=4usize, seed in any::<u64>()) {
        let bidders: Vec<usize> = (0..n).map(|i| i * 3 + 1).collect();
        let groups = partition(&bidders, beta, &mut SeedTree::new(seed).rng());
        prop_assert_eq!(groups.len(), beta + 1);
        let take = (n / (10 * beta)).max(1);
        let mut remaining = n;
        for g in &groups[..beta] {
            prop_assert_eq!(g.len(), take.min(remaining));
            remaining -= g.len();
        }
        let mut all = groups.concat();
        all.sort_unstable();
        prop_assert_eq!(all, bidders);
    }

    #[test]
    fn price_update_takes_the_last_seller(m in 1..=8usize, masks in prop::collection::vec(any::<u32>(), 1..=3)) {
        use auctionlab::auctions::AuctionOutcome;
        let prices: Vec<PriceVector> = (0..masks.len())
            .map(|k| PriceVector::uniform(m, (k + 1) as f64).unwrap())
            .collect();
        let outcomes: Vec<AuctionOutcome> = masks
            .iter()
            .map(|&bits| AuctionOutcome {
                prices: vec![0.0; m],
                allocation: vec![],
                payments: vec![],
                welfare: 0.0,
                sold: ItemSet::from_bits(m, bits & ((1u32 << m) - 1)).unwrap(),
                visit_order: vec![],
                turns: vec![],
            })
            .collect();
        let p = price_update(&outcomes, &prices).unwrap();
        for j in 0..m {
            let want = outcomes.iter().rposition(|o| o.sold.contains(j)).map_or(1.0, |k| (k + 1) as f64);
            prop_assert_eq!(p[j], want);
        }
    }

    #[test]
    fn psi_ratio_is_sixteen_m_cubed(spa in 1e-6..1e6f64, m in 1..=24usize) {
        let r = PsiRange::from_spa(spa, m);
        let target = 16.0 * (m as f64).powi(3);
        prop_assert!((r.psi_max / r.psi_min - target).abs() <= 1e-12 * target);
    }

    #[test]
    fn seed_streams_are_pure(seed in any::<u64>(), name in "[a-z]{1,8}", index in any::<u64>()) {
        use rand::RngCore;
        let a = SeedTree::new(seed).stream(&name, index).next_u64();
        let b = SeedTree::new(seed).stream(&name, index).next_u64();
        prop_assert_eq!(a, b);
        prop_assert_ne!(SeedTree::new(seed).child(&name, index), SeedTree::new(seed).child(&name, index ^ 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reports_replay_and_round_trip(
        seed in any::<u64>(),
        mechanism in prop::sample::select(vec!["fixed_price", "price_learning", "generalized"]),
        class in prop::sample::select(vec!["xos", "submodular"]),
        policy in prop::sample::select(vec!["empty", "random", "adversarial_worst"]),
    ) {
        let config = parse_config(&format!(
            r#"{{"mechanism": "{mechanism}", "oracle": "exact", "trials": 8, "seed": {seed},
                "tentative": "{policy}",
                "instance": {{"generator": {{"class": "{class}", "n": 3, "m": 4}}}}}}"#
        ))
        .unwrap();
        let a = run_experiment(&config, None).unwrap();
        let b = run_experiment(&config, None).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
        prop_assert!(a.passed(), "{:?}", a.records.iter().find(|r| !r.violations.is_empty()));
        let back: Report = serde_json::from_str(&a.to_json()).unwrap();
        prop_assert_eq!(&back.aggregates, &Aggregates::from_records(&back.records));
        prop_assert_eq!(back, a);
    }
}

use rand::Rng;
