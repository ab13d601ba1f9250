//! Property suites on random trees, checked against the plain evaluators in
//! `common`.

mod common;

use common::*;
use proptest::prelude::*;
use skill_luck::game::{Player, Policy, Profile};
use skill_luck::generate::{random_tree, TreeConfig};
use skill_luck::leverage::*;
use skill_luck::rng::stream;
use skill_luck::solvers::*;
use skill_luck::transform::{insert_dominated_sibling, replace_with_chance};
use skill_luck::tree_io::{as_game, emit_tree, parse_tree, ExplicitKind, ExplicitTree};
use skill_luck::volatility::exact_volatility;
use skill_luck::Game;

const H: ConstantHeuristic = ConstantHeuristic(0.5);

fn tree(seed: u64, config: &TreeConfig) -> ExplicitTree {
    random_tree(&mut stream(seed, 0), config)
}

fn small() -> TreeConfig {
    TreeConfig { max_nodes: 200, max_depth: 8, ..TreeConfig::default() }
}

fn metrics(t: &ExplicitTree) -> (LeverageEstimate, LeverageEstimate, SkillLuckIndex) {
    let g = as_game(t.clone(), "t");
    let k = skill_leverage_exact(&g).unwrap();
    let l = luck_leverage_exact(&g, &Profile::uniform()).unwrap();
    let s = skill_luck_index(k.clone(), l.clone()).unwrap();
    (k, l, s)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn leverage_is_bounded_and_extremes_are_exact(seed in any::<u64>()) {
        let t = tree(seed, &TreeConfig::default());
        let (k, l, s) = metrics(&t);
        prop_assert!(k.raw >= -1e-12 && l.raw >= -1e-12);
        prop_assert!(s.s >= -1.0 && s.s <= 1.0);
        if k.point + l.point > 0.0 {
            prop_assert_eq!(l.point == 0.0, s.s == 1.0);
            prop_assert_eq!(k.point == 0.0, s.s == -1.0);
        }
    }

    #[test]
    fn leverage_matches_plain_recursion(seed in any::<u64>()) {
        let t = tree(seed, &small());
        let (k, l, _) = metrics(&t);
        prop_assert!((k.raw - oracle_k(&t)).abs() <= 1e-12);
        prop_assert!((l.raw - oracle_l(&t)).abs() <= 1e-12);
    }

    #[test]
    fn no_chance_means_no_luck_or_volatility(seed in any::<u64>()) {
        let t = tree(seed, &TreeConfig::deterministic());
        let (_, l, _) = metrics(&t);
        prop_assert_eq!(l.point, 0.0);
        prop_assert_eq!(exact_volatility(&as_game(t, "d"), &H).unwrap().sigma_total, 0.0);
    }

    #[test]
    fn no_decisions_means_no_skill(seed in any::<u64>()) {
        let t = tree(seed, &TreeConfig::no_decisions());
        let (k, l, s) = metrics(&t);
        prop_assert_eq!(k.point, 0.0);
        if l.point > 0.0 {
            prop_assert_eq!(s.s, -1.0);
        }
    }

    #[test]
    fn pruning_never_changes_the_value(seed in any::<u64>()) {
        let t = tree(seed, &TreeConfig { max_nodes: 2000, ..TreeConfig::default() });
        let g = as_game(t.clone(), "t");
        let s0 = g.initial_state();
        prop_assert_eq!(expectiminimax(&g, &s0, Depth::Full, &H, 0.0, 1.0).unwrap(), minimax(&t, t.root()));
        for d in [0, 1, 2, 3, 5] {
            let want = depth_limited(&t, t.root(), d, 0.5);
            prop_assert_eq!(expectiminimax(&g, &s0, Depth::Limited(d), &H, 0.0, 1.0).unwrap(), want);
        }
    }

    #[test]
    fn caching_is_transparent(seed in any::<u64>()) {
        let t = tree(seed, &small());
        let g = as_game(t.clone(), "t");
        let s0 = g.initial_state();
        for depth in [Depth::Full, Depth::Limited(2), Depth::Limited(4)] {
            let a = Expectiminimax::new(&g, &H).search(&s0, depth, 0.0, 1.0).unwrap();
            let b = Expectiminimax::new(&g, &H).without_cache().search(&s0, depth, 0.0, 1.0).unwrap();
            prop_assert_eq!(a, b);
            let u = Policy::UniformRandom;
            let a = response_backup(&g, Player::P0, &u, &H).value(&s0, depth).unwrap();
            let b = response_backup(&g, Player::P0, &u, &H).without_cache().value(&s0, depth).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn volatility_matches_path_enumeration(seed in any::<u64>()) {
        let t = tree(seed, &small());
        let v = exact_volatility(&as_game(t.clone(), "t"), &H).unwrap();
        prop_assert!(v.sigma_total >= 0.0);
        prop_assert!(v.sigma_sq_by_ply.iter().all(|p| p.variance >= 0.0));
        prop_assert!((v.sigma_total - oracle_sigma(&t)).abs() <= 1e-12);
    }

    #[test]
    fn mirrored_trees_have_equal_leverage(seed in any::<u64>()) {
        let t = tree(seed, &small());
        let m = mirror(&t);
        let g = as_game(t.clone(), "t");
        let gm = as_game(m, "m");
        let k = skill_leverage_exact(&g).unwrap().raw;
        let km = skill_leverage_for_player(&gm, Player::P1).unwrap().raw;
        prop_assert!((k - km).abs() <= 1e-12);
        let l = luck_leverage_exact(&g, &Profile::uniform()).unwrap().raw;
        let lm = luck_leverage_exact(&gm, &Profile::uniform()).unwrap().raw;
        prop_assert!((l - lm).abs() <= 1e-12);
    }

    #[test]
    fn deep_search_is_exact(seed in any::<u64>()) {
        let t = tree(seed, &small());
        let g = as_game(t.clone(), "t");
        let exact = expectiminimax(&g, &g.initial_state(), Depth::Full, &H, 0.0, 1.0).unwrap();
        let deep = expectiminimax(&g, &g.initial_state(), Depth::Limited(height(&t)), &H, 0.0, 1.0).unwrap();
        prop_assert_eq!(exact, deep);
    }

    #[test]
    fn upper_bound_heuristic_error_shrinks_with_depth(seed in any::<u64>()) {
        // Player 0 alone against nature: an upper-bound leaf value gives
        // depth-d values that decrease towards V*.
        let cfg = small();
        let t = tree(seed, &cfg);
        let nodes = t.nodes().map(|(id, n)| {
            let kind = match n.kind {
                ExplicitKind::Decision { .. } => ExplicitKind::Decision { player: Player::P0 },
                ref k => k.clone(),
            };
            (id, skill_luck::tree_io::ExplicitNode { kind, edges: n.edges.clone() })
        }).collect();
        let t = ExplicitTree::from_parts(nodes, t.root()).unwrap();
        let g = as_game(t.clone(), "t");
        let top = ConstantHeuristic(1.0);
        let exact = minimax(&t, t.root());
        let mut last = f64::INFINITY;
        for d in 0..=height(&t) {
            let v = expectiminimax(&g, &g.initial_state(), Depth::Limited(d), &top, 0.0, 1.0).unwrap();
            let err = (v - exact).abs();
            prop_assert!(err <= last + 1e-12);
            last = err;
        }
        prop_assert!(last <= 1e-12);
    }

    #[test]
    fn trees_round_trip(seed in any::<u64>(), nodes in 1usize..400) {
        let t = tree(seed, &TreeConfig { max_nodes: nodes, ..TreeConfig::default() });
        prop_assert_eq!(parse_tree(&emit_tree(&t)).unwrap(), t);
    }
}

#[test]
fn constant_heuristic_error_is_not_monotone_in_general() {
    // With both players searching and a constant 0.5 frontier, looking
    // deeper can move the root value away from V*. Such trees are common.
    let found = (0..500u64).any(|i| {
        let t = tree(i, &small());
        let g = as_game(t.clone(), "t");
        let exact = minimax(&t, t.root());
        let errs: Vec<f64> = (0..=height(&t))
            .map(|d| (expectiminimax(&g, &g.initial_state(), Depth::Limited(d), &H, 0.0, 1.0).unwrap() - exact).abs())
            .collect();
        errs.windows(2).any(|w| w[1] > w[0] + 1e-9)
    });
    assert!(found);
}

#[test]
fn best_response_beats_random_alternatives() {
    use rand::Rng;
    use std::collections::HashMap;
    for seed in 0..20u64 {
        let t = tree(seed, &small());
        let g = as_game(t.clone(), "t");
        let s0 = g.initial_state();
        let u = Policy::UniformRandom;
        let br = best_response(&g, &u, Player::P0, Depth::Full, &H).unwrap();
        let best = value_under_profile(&g, &s0, &br, &u).unwrap();
        let states = id_states(&g);
        let mut rng = stream(seed, 99);
        for _ in 0..100 {
            let mut dists = HashMap::new();
            for (id, n) in t.nodes() {
                if let ExplicitKind::Decision { player: Player::P0 } = n.kind {
                    let w: Vec<f64> = (0..n.edges.len()).map(|_| rng.random::<f64>() + 1e-3).collect();
                    let total: f64 = w.iter().sum();
                    dists.insert(states[&id].key(), w.iter().map(|x| x / total).collect());
                }
            }
            let alt = Policy::Mixed { player: Player::P0, dists };
            let v = value_under_profile(&g, &s0, &alt, &u).unwrap();
            assert!(best >= v - 1e-12, "seed {seed}: {best} < {v}");
        }
    }
}

#[test]
fn dominated_sibling_never_lowers_skill() {
    use rand::Rng;
    for i in 0..200u64 {
        let t = tree(i, &small());
        let mut rng = stream(77, i);
        let leaves = terminals(&t);
        let (id, p) = leaves[rng.random_range(0..leaves.len())];
        let worse = p * rng.random::<f64>();
        let u = insert_dominated_sibling(&t, id, worse).unwrap();
        let (k0, _, _) = metrics(&t);
        let (k1, _, _) = metrics(&u);
        assert!(k1.raw >= k0.raw - 1e-12, "tree {i}: {} -> {}", k0.raw, k1.raw);
    }
}

#[test]
fn spanning_chance_never_lowers_luck() {
    use rand::Rng;
    for i in 0..200u64 {
        let t = tree(i, &small());
        let mut rng = stream(78, i);
        let leaves = terminals(&t);
        let (id, p) = leaves[rng.random_range(0..leaves.len())];
        let lo = p * rng.random::<f64>();
        let hi = p + (1.0 - p) * rng.random::<f64>();
        let q = rng.random_range(0.05..0.95);
        let u = replace_with_chance(&t, id, &[(q, lo), (1.0 - q, hi)]).unwrap();
        let (_, l0, _) = metrics(&t);
        let (_, l1, _) = metrics(&u);
        assert!(l1.raw >= l0.raw - 1e-12, "tree {i}: {} -> {}", l0.raw, l1.raw);
    }
}

#[test]
fn large_random_tree_round_trips() {
    let t = tree(5, &TreeConfig { max_nodes: 1000, max_depth: 40, leaf_probability: 0.1, ..TreeConfig::default() });
    assert!(t.len() > 500);
    assert_eq!(parse_tree(&emit_tree(&t)).unwrap(), t);
}

#[test]
fn explicit_games_preserve_structure() {
    for i in 0..50u64 {
        let t = tree(i, &TreeConfig { max_nodes: 50, ..TreeConfig::default() });
        let g = as_game(t.clone(), "t");
        let r = skill_luck::game::validate_game(&g);
        assert!(r.is_valid());
        assert_eq!(r.states as usize, t.len());
        let kinds = t.nodes().fold([0u64; 3], |mut acc, (_, n)| {
            acc[match n.kind {
                ExplicitKind::Decision { .. } => 0,
                ExplicitKind::Chance => 1,
                ExplicitKind::Terminal { .. } => 2,
            }] += 1;
            acc
        });
        assert_eq!([r.decision_nodes, r.chance_nodes, r.terminal_nodes], kinds);
        let states = id_states(&g);
        for (id, n) in t.nodes() {
            let s = &states[&id];
            match (&n.kind, g.node_kind(s).unwrap()) {
                (ExplicitKind::Terminal { payoff }, skill_luck::NodeKind::Terminal { payoff: p }) => {
                    assert_eq!(*payoff, p)
                }
                (ExplicitKind::Chance, skill_luck::NodeKind::Chance { probs }) => {
                    assert_eq!(probs, n.edges.iter().map(|e| e.prob.unwrap()).collect::<Vec<_>>())
                }
                (ExplicitKind::Decision { player }, skill_luck::NodeKind::Decision { player: p }) => {
                    assert_eq!(*player, p)
                }
                other => panic!("kind mismatch {other:?}"),
            }
        }
    }
}
