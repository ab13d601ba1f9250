//! Monte-Carlo estimators against exact values, and reproducibility.

mod common;

use skill_luck::game::Profile;
use skill_luck::games::{instantiate, trees, Params};
use skill_luck::generate::TreeConfig;
use skill_luck::leverage::*;
use skill_luck::solvers::{ConstantHeuristic, Depth};
use skill_luck::tree_io::as_game;
use skill_luck::volatility::{exact_volatility, integrated_volatility};

const H: ConstantHeuristic = ConstantHeuristic(0.5);

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn coin_toss_skill_estimate_is_exactly_zero() {
    let g = as_game(trees::coin_toss(), "coin");
    for n in [1, 10, 1000] {
        let e = skill_leverage_mc(&g, n, 4, Depth::Full, &H).unwrap();
        assert_eq!(e.point, 0.0);
        assert_eq!(e.raw, 0.0);
    }
}

#[test]
fn coin_toss_single_luck_rollout_is_one() {
    let g = as_game(trees::coin_toss(), "coin");
    let e = luck_leverage_mc(&g, &Profile::uniform(), 1, 0, Depth::Full, &H).unwrap();
    assert_eq!(e.estimate.point, 1.0);
}

#[test]
fn lottery_luck_estimate_is_one() {
    let g = as_game(trees::lottery_choice(), "lottery");
    let e = luck_leverage_mc(&g, &Profile::uniform(), 500, 0, Depth::Full, &H).unwrap();
    assert_eq!(e.estimate.point, 1.0);
}

#[test]
fn toy_estimates_converge() {
    let g = as_game(trees::toy(), "toy");
    let k = skill_leverage_mc(&g, 100_000, 1, Depth::Full, &H).unwrap();
    assert!((k.point - 0.25).abs() <= 3.0 * k.standard_error, "{k:?}");
    let l = luck_leverage_mc(&g, &Profile::uniform(), 10_000, 1, Depth::Full, &H).unwrap();
    assert!((l.estimate.point - 0.5).abs() <= 3.0 * l.estimate.standard_error, "{l:?}");
    // Full enumeration of a realisation: A gives 1 - 1, B gives 1 - 0.
    assert!((l.realisation_mean - 0.5).abs() <= 4.0 * l.realisation_se);
}

#[test]
fn realisation_enumeration_bounds_the_exact_value() {
    // Nature can react to the sampled actions, so the enumerated spread is
    // at least the exact L (up to sampling noise).
    let cfg = TreeConfig { max_nodes: 60, max_depth: 6, ..TreeConfig::default() };
    for (i, t) in common::corpus(41, 10, &cfg).into_iter().enumerate() {
        let g = as_game(t, "t");
        let exact = luck_leverage_exact(&g, &Profile::uniform()).unwrap().raw;
        let l = luck_leverage_mc(&g, &Profile::uniform(), 5000, i as u64, Depth::Full, &H).unwrap();
        assert!(l.realisation_mean >= exact - 4.0 * l.realisation_se - 1e-12, "tree {i}");
    }
}

#[test]
fn random_trees_agree_with_exact_values() {
    let cfg = TreeConfig { max_nodes: 60, max_depth: 6, ..TreeConfig::default() };
    for (i, t) in common::corpus(31, 10, &cfg).into_iter().enumerate() {
        let g = as_game(t, "t");
        let k_exact = skill_leverage_exact(&g).unwrap().raw;
        let k = skill_leverage_mc(&g, 20_000, i as u64, Depth::Full, &H).unwrap();
        assert!((k.raw - k_exact).abs() <= 4.0 * k.standard_error + 1e-12, "tree {i}: {k:?} vs {k_exact}");
        let l_exact = luck_leverage_exact(&g, &Profile::uniform()).unwrap().raw;
        let l = luck_leverage_mc(&g, &Profile::uniform(), 20_000, i as u64, Depth::Full, &H).unwrap();
        assert!((l.estimate.raw - l_exact).abs() <= 4.0 * l.estimate.standard_error + 1e-12, "tree {i}");
        let s_exact = exact_volatility(&g, &H).unwrap().sigma_total;
        let s = integrated_volatility(&g, 20_000, i as u64, Depth::Full, &H).unwrap();
        assert!(
            (s.sigma_total - s_exact).abs() <= 4.0 * s.standard_error + 1e-12,
            "tree {i}: {} vs {s_exact}",
            s.sigma_total
        );
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let g = instantiate("dice_race", &Params::new()).unwrap();
    let run = || {
        (
            skill_leverage_mc(g.as_ref(), 5000, 9, Depth::Full, &H).unwrap(),
            luck_leverage_mc(g.as_ref(), &Profile::uniform(), 2000, 9, Depth::Limited(3), &H).unwrap(),
            integrated_volatility(g.as_ref(), 5000, 9, Depth::Full, &H).unwrap(),
        )
    };
    let one = pool(1).install(run);
    let four = pool(4).install(run);
    assert_eq!(one.0, four.0);
    assert_eq!(one.1, four.1);
    assert_eq!(one.1.samples, four.1.samples);
    assert_eq!(one.2, four.2);
}

#[test]
fn prefixes_match_shorter_runs() {
    let g = as_game(trees::toy(), "toy");
    let long = skill_rollouts(&g, 1000, 5, Depth::Full, &H).unwrap();
    let short = skill_rollouts(&g, 100, 5, Depth::Full, &H).unwrap();
    assert_eq!(long.prefix(100), short);
}

#[test]
fn depth_limited_play_converges_to_exact() {
    let g = instantiate("dice_race", &Params::new()).unwrap();
    let exact = skill_rollouts(g.as_ref(), 3000, 2, Depth::Full, &H).unwrap();
    let deep = skill_rollouts(g.as_ref(), 3000, 2, Depth::Limited(g.max_ply()), &H).unwrap();
    assert_eq!(exact, deep);
}

#[test]
fn deterministic_games_have_exactly_zero_sampled_luck_and_volatility() {
    let g = instantiate("tictactoe", &Params::new()).unwrap();
    let l = luck_leverage_mc(g.as_ref(), &Profile::uniform(), 2000, 3, Depth::Full, &H).unwrap();
    assert_eq!(l.estimate.point, 0.0);
    assert_eq!(l.estimate.standard_error, 0.0);
    let s = integrated_volatility(g.as_ref(), 2000, 3, Depth::Full, &H).unwrap();
    assert_eq!(s.sigma_total, 0.0);
}
