//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::Rng;
use skill_luck::game::Profile;
use skill_luck::games::{instantiate, trees, Params};
use skill_luck::generate::{random_tree, TreeConfig};
use skill_luck::leverage::{
    luck_leverage_exact, luck_leverage_mc, skill_leverage_exact, skill_leverage_mc, skill_luck_index, skill_rollouts,
};
use skill_luck::report::{analyze, depth_sweep, design_experiment, AnalysisConfig, GameReport, Mode};
use skill_luck::rng::stream;
use skill_luck::solvers::{ConstantHeuristic, Depth};
use skill_luck::stats::bootstrap_ci;
use skill_luck::transform::{insert_dominated_sibling, replace_with_chance, DesignKind};
use skill_luck::tree_io::{as_game, ExplicitKind, ExplicitTree};
use skill_luck::volatility::{exact_volatility, integrated_volatility};
use skill_luck::Game;

const H: ConstantHeuristic = ConstantHeuristic(0.5);
const EXACT_TOL: f64 = 1e-12;
/// Tic-tac-toe K from the exhaustive enumeration in the core test suite:
/// V(BR, uniform) = 383/384, V(uniform, uniform) = 817/1260.
const TICTACTOE_K: f64 = 383.0 / 384.0 - 817.0 / 1260.0;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    check((got - want).abs() <= tol, || format!("{what} = {got}, expected {want} (tol {tol:e})"))
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let t = started.elapsed();
    check(t <= limit, || format!("took {:.2}s, limit {}s", t.as_secs_f64(), limit.as_secs()))
}

fn exact_report(name: &str, params: &Params) -> Result<GameReport, String> {
    let g = instantiate(name, params).map_err(|e| e.to_string())?;
    let config = AnalysisConfig { mode: Mode::Exact, ..AnalysisConfig::default() };
    analyze(g.as_ref(), params, &config, &H).map_err(|e| e.to_string())
}

fn toy_golden() -> Outcome {
    let t = Instant::now();
    let r = exact_report("toy", &Params::new())?;
    within(Duration::from_secs(1), t)?;
    close("K", r.k.point, 0.25, EXACT_TOL)?;
    close("L", r.l.point, 0.5, EXACT_TOL)?;
    close("S", r.s, -1.0 / 3.0, EXACT_TOL)?;
    close("V*", r.v_star.unwrap_or(f64::NAN), 1.0, EXACT_TOL)?;
    close("V(rnd,rnd)", r.v_random_vs_random.unwrap_or(f64::NAN), 0.75, EXACT_TOL)?;
    Ok(format!("K={} L={} S={:.6} V*=1 V(rnd,rnd)=0.75", r.k.point, r.l.point, r.s))
}

fn toy_variants() -> Outcome {
    let t = Instant::now();
    let luck = exact_report("toy_pure_luck", &Params::new())?;
    let skill = exact_report("toy_pure_skill", &Params::new())?;
    within(Duration::from_secs(1), t)?;
    close("pure-luck K", luck.k.point, 0.0, EXACT_TOL)?;
    close("pure-luck L", luck.l.point, 0.5, EXACT_TOL)?;
    close("pure-luck S", luck.s, -1.0, EXACT_TOL)?;
    close("pure-skill K", skill.k.point, 0.25, EXACT_TOL)?;
    close("pure-skill L", skill.l.point, 0.0, EXACT_TOL)?;
    close("pure-skill S", skill.s, 1.0, EXACT_TOL)?;
    Ok("pure luck (0, 0.5, -1), pure skill (0.25, 0, +1)".into())
}

fn lottery() -> Outcome {
    let t = Instant::now();
    let r = exact_report("lottery_choice", &Params::new())?;
    within(Duration::from_secs(1), t)?;
    close("K", r.k.point, 0.3, EXACT_TOL)?;
    close("L", r.l.point, 1.0, EXACT_TOL)?;
    close("S", r.s, -0.7 / 1.3, EXACT_TOL)?;
    Ok(format!("K=0.3 L=1 S={:.6}", r.s))
}

fn coin_toss() -> Outcome {
    let t = Instant::now();
    let r = exact_report("coin_toss", &Params::new())?;
    within(Duration::from_secs(1), t)?;
    close("K", r.k.point, 0.0, EXACT_TOL)?;
    close("L", r.l.point, 1.0, EXACT_TOL)?;
    close("S", r.s, -1.0, EXACT_TOL)?;
    close("Sigma", r.sigma.sigma, 0.0, EXACT_TOL)?;
    Ok("K=0 L=1 S=-1 Sigma=0".into())
}

fn tictactoe() -> Outcome {
    let t = Instant::now();
    let r = exact_report("tictactoe", &Params::new())?;
    within(Duration::from_secs(60), t)?;
    check(r.l.point == 0.0, || format!("L = {}", r.l.point))?;
    check(r.sigma.sigma == 0.0, || format!("Sigma = {}", r.sigma.sigma))?;
    check(r.s == 1.0, || format!("S = {}", r.s))?;
    check(r.k.point > 0.0, || "K is not positive".into())?;
    close("K", r.k.point, TICTACTOE_K, EXACT_TOL)?;
    Ok(format!("K={:.9} L=0 Sigma=0 S=+1 in {:.2}s", r.k.point, t.elapsed().as_secs_f64()))
}

fn random_corpus(seed: u64, count: u64) -> Vec<ExplicitTree> {
    let cfg = TreeConfig { max_nodes: 1000, ..TreeConfig::default() };
    (0..count).map(|i| random_tree(&mut stream(seed, i), &cfg)).collect()
}

fn bounds_and_extremes() -> Outcome {
    let t = Instant::now();
    let trees = random_corpus(2024, 1000);
    let (mut pure_skill, mut pure_luck) = (0, 0);
    for (i, tree) in trees.iter().enumerate() {
        let g = as_game(tree.clone(), "t");
        let k = skill_leverage_exact(&g).map_err(|e| e.to_string())?;
        let l = luck_leverage_exact(&g, &Profile::uniform()).map_err(|e| e.to_string())?;
        check(k.raw >= -EXACT_TOL && l.raw >= -EXACT_TOL, || format!("tree {i}: K={} L={}", k.raw, l.raw))?;
        let s = skill_luck_index(k.clone(), l.clone()).map_err(|e| e.to_string())?;
        check((-1.0..=1.0).contains(&s.s), || format!("tree {i}: S={}", s.s))?;
        if k.point + l.point > 0.0 {
            check((s.s == 1.0) == (l.point == 0.0), || format!("tree {i}: S={} L={}", s.s, l.point))?;
            check((s.s == -1.0) == (k.point == 0.0), || format!("tree {i}: S={} K={}", s.s, k.point))?;
            pure_skill += usize::from(s.s == 1.0);
            pure_luck += usize::from(s.s == -1.0);
        }
    }
    within(Duration::from_secs(300), t)?;
    Ok(format!("1000 trees, {pure_skill} with S=+1, {pure_luck} with S=-1"))
}

fn terminals(t: &ExplicitTree) -> Vec<(skill_luck::tree_io::NodeId, f64)> {
    t.nodes()
        .filter_map(|(id, n)| match n.kind {
            ExplicitKind::Terminal { payoff } => Some((id, payoff)),
            _ => None,
        })
        .collect()
}

fn monotonicity() -> Outcome {
    let t = Instant::now();
    let cfg = TreeConfig { max_nodes: 300, max_depth: 10, ..TreeConfig::default() };
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let mut worst = (f64::INFINITY, f64::INFINITY);
    for i in 0..500u64 {
        let base = random_tree(&mut stream(500, i), &cfg);
        let g = as_game(base.clone(), "base");
        let k0 = skill_leverage_exact(&g).map_err(|e| err(&e))?.raw;
        let l0 = luck_leverage_exact(&g, &Profile::uniform()).map_err(|e| err(&e))?.raw;
        let leaves = terminals(&base);
        let mut rng = stream(501, i);

        let (id, p) = leaves[rng.random_range(0..leaves.len())];
        let deeper = insert_dominated_sibling(&base, id, p * rng.random::<f64>()).map_err(|e| err(&e))?;
        let k1 = skill_leverage_exact(&as_game(deeper, "d")).map_err(|e| err(&e))?.raw;
        check(k1 >= k0 - EXACT_TOL, || format!("pair {i}: K {k0} -> {k1}"))?;

        let (id, p) = leaves[rng.random_range(0..leaves.len())];
        let lo = p * rng.random::<f64>();
        let hi = p + (1.0 - p) * rng.random::<f64>();
        let q = rng.random_range(0.05..0.95);
        let spread = replace_with_chance(&base, id, &[(q, lo), (1.0 - q, hi)]).map_err(|e| err(&e))?;
        let l1 = luck_leverage_exact(&as_game(spread, "c"), &Profile::uniform()).map_err(|e| err(&e))?.raw;
        check(l1 >= l0 - EXACT_TOL, || format!("pair {i}: L {l0} -> {l1}"))?;
        worst = (worst.0.min(k1 - k0), worst.1.min(l1 - l0));
    }
    within(Duration::from_secs(300), t)?;
    Ok(format!("500 dominated-sibling and 500 spanning-chance pairs, min dK={:.1e} min dL={:.1e}", worst.0, worst.1))
}

struct Sampled {
    point: f64,
    se: f64,
}

fn sampled(game: &dyn Game, n: u64, seed: u64) -> Result<[Sampled; 3], String> {
    let e = |e: skill_luck::SolveError| e.to_string();
    let k = skill_leverage_mc(game, n, seed, Depth::Full, &H).map_err(e)?;
    let l = luck_leverage_mc(game, &Profile::uniform(), n, seed, Depth::Full, &H).map_err(e)?;
    let s = integrated_volatility(game, n, seed, Depth::Full, &H).map_err(e)?;
    Ok([
        Sampled { point: k.raw, se: k.standard_error },
        Sampled { point: l.estimate.raw, se: l.estimate.standard_error },
        Sampled { point: s.sigma_total, se: s.standard_error },
    ])
}

fn mc_convergence() -> Outcome {
    let t = Instant::now();
    let games: Vec<(&str, Box<dyn Game>)> = vec![
        ("toy", Box::new(as_game(trees::toy(), "toy"))),
        ("tictactoe", instantiate("tictactoe", &Params::new()).map_err(|e| e.to_string())?),
        ("dice_race", instantiate("dice_race", &Params::new()).map_err(|e| e.to_string())?),
    ];
    let mut notes = Vec::new();
    for (name, g) in &games {
        let g = g.as_ref();
        let e = |e: skill_luck::SolveError| e.to_string();
        let exact = [
            skill_leverage_exact(g).map_err(e)?.raw,
            luck_leverage_exact(g, &Profile::uniform()).map_err(e)?.raw,
            exact_volatility(g, &H).map_err(e)?.sigma_total,
        ];
        let big = sampled(g, 100_000, 8)?;
        let small = sampled(g, 25_000, 8)?;
        for (m, metric) in ["K", "L", "Sigma"].iter().enumerate() {
            let (b, s) = (&big[m], &small[m]);
            check((b.point - exact[m]).abs() <= 4.0 * b.se + EXACT_TOL, || {
                format!("{name} {metric}: MC {} vs exact {} (SE {})", b.point, exact[m], b.se)
            })?;
            if b.se == 0.0 {
                check(s.se == 0.0, || format!("{name} {metric}: SE {} at n/4 but 0 at n", s.se))?;
                continue;
            }
            let ratio = s.se / b.se;
            check((1.4..=2.8).contains(&ratio), || format!("{name} {metric}: SE ratio {ratio:.3}"))?;
            notes.push(format!("{name} {metric} {ratio:.2}"));
        }
    }
    within(Duration::from_secs(600), t)?;
    Ok(format!("n=1e5 within 4 SE; SE ratios per 4x n: {}", notes.join(", ")))
}

fn bootstrap_coverage() -> Outcome {
    let t = Instant::now();
    let g = as_game(trees::toy(), "toy");
    let mut covered = 0;
    for trial in 0..100u64 {
        let runs = skill_rollouts(&g, 2000, 9000 + trial, Depth::Full, &H).map_err(|e| e.to_string())?;
        let ci = bootstrap_ci(&runs.differences(), 1000, 0.95, trial).map_err(|e| e.to_string())?.ci;
        covered += usize::from(ci.0 <= 0.25 && 0.25 <= ci.1);
    }
    within(Duration::from_secs(300), t)?;
    check(covered >= 90, || format!("covered {covered}/100"))?;
    Ok(format!("{covered}/100 intervals cover K=0.25"))
}

fn depth_sweep_converges() -> Outcome {
    let t = Instant::now();
    let mut notes = Vec::new();
    for (name, depths) in [("connect_k", (1..=16).collect::<Vec<u32>>()), ("tictactoe", vec![1, 3, 5, 9])] {
        let g = instantiate(name, &Params::new()).map_err(|e| e.to_string())?;
        let rows = depth_sweep(g.as_ref(), &depths, &H).map_err(|e| e.to_string())?;
        let exact = rows.last().ok_or("empty sweep")?;
        check(exact.depth.is_none(), || "missing exact row".into())?;
        let last = &rows[rows.len() - 2];
        close(&format!("{name} K at depth {:?}", last.depth), last.k, exact.k, 1e-9)?;
        let first = &rows[0];
        notes.push(format!("{name} K {:.3} -> {:.3}", first.k, last.k));
    }
    within(Duration::from_secs(300), t)?;
    Ok(notes.join(", "))
}

fn design_recipes() -> Outcome {
    let t = Instant::now();
    let bases = [
        ("toy", trees::toy()),
        ("toy_pure_skill", trees::toy_pure_skill()),
        ("lottery_choice", trees::lottery_choice()),
    ];
    let kinds = [
        DesignKind::AddEarlyChance,
        DesignKind::AddDecisionDepth,
        DesignKind::AmplifyTerminalVariance,
        DesignKind::ClusterLateChance,
    ];
    let mut n = 0;
    for (name, tree) in &bases {
        for kind in kinds {
            let e = design_experiment(tree, name, kind, 0, &H).map_err(|e| e.to_string())?;
            check(e.s.holds, || format!("{name} {kind:?}: S {} -> {}", e.s.before, e.s.after))?;
            check(e.sigma.holds, || format!("{name} {kind:?}: Sigma {} -> {}", e.sigma.before, e.sigma.after))?;
            n += 1;
        }
    }
    within(Duration::from_secs(60), t)?;
    Ok(format!("{n} cases hold"))
}

fn reproducibility() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let cases: [&[&str]; 6] = [
        &["analyze", "--game", "dice_race", "--mode", "mc", "--n", "20000", "--format", "json"],
        &["analyze", "--game", "tictactoe", "--mode", "mc", "--n", "5000", "--seed", "3"],
        &[
            "analyze",
            "--game",
            "connect_k",
            "--mode",
            "depth-limited",
            "--n",
            "2000",
            "--depth",
            "3",
            "--format",
            "csv",
        ],
        &["table", "--all", "--format", "csv"],
        &["depth-sweep", "--game", "nim", "--format", "json"],
        &["design", "--base", "data/trees/lottery_choice.tree", "--kind", "add-early-chance"],
    ];
    for args in cases {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "1"] {
            let out = Command::new(env!("CARGO_BIN_EXE_skill-luck"))
                .args(args)
                .current_dir(&root)
                .env("SKILL_LUCK_THREADS", threads)
                .output()
                .map_err(|e| e.to_string())?;
            check(out.status.success(), || format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))?;
            outputs.push(out.stdout);
        }
        check(outputs.windows(2).all(|w| w[0] == w[1]), || format!("{args:?} output differs between runs"))?;
    }
    Ok(format!("{} commands byte-identical across runs with 1 and 4 workers", cases.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("toy golden values", toy_golden),
        ("toy variants", toy_variants),
        ("lottery choice", lottery),
        ("coin toss", coin_toss),
        ("tic-tac-toe", tictactoe),
        ("bounds and extreme cases", bounds_and_extremes),
        ("restricted monotonicity", monotonicity),
        ("monte-carlo convergence", mc_convergence),
        ("bootstrap coverage", bootstrap_coverage),
        ("depth sweep", depth_sweep_converges),
        ("design recipe directions", design_recipes),
        ("cli reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = f();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
