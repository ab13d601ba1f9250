//! Plain recursive evaluators over explicit trees, written independently of
//! the library's solvers and used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use skill_luck::game::Player;
use skill_luck::generate::{random_tree, TreeConfig};
use skill_luck::rng::stream;
use skill_luck::tree_io::{ExplicitKind, ExplicitNode, ExplicitTree, NodeId};

fn node(t: &ExplicitTree, id: NodeId) -> &ExplicitNode {
    t.node(id).unwrap()
}

fn probs(n: &ExplicitNode) -> impl Iterator<Item = (f64, NodeId)> + '_ {
    n.edges.iter().map(|e| (e.prob.unwrap(), e.child))
}

/// Full-width expectiminimax without pruning or caching.
pub fn minimax(t: &ExplicitTree, id: NodeId) -> f64 {
    depth_limited(t, id, u32::MAX, 0.5)
}

pub fn depth_limited(t: &ExplicitTree, id: NodeId, depth: u32, h: f64) -> f64 {
    let n = node(t, id);
    match n.kind {
        ExplicitKind::Terminal { payoff } => payoff,
        _ if depth == 0 => h,
        ExplicitKind::Chance => probs(n).map(|(p, c)| p * depth_limited(t, c, depth - 1, h)).sum(),
        ExplicitKind::Decision { player } => {
            let vals = n.edges.iter().map(|e| depth_limited(t, e.child, depth - 1, h));
            match player {
                Player::P0 => vals.fold(f64::NEG_INFINITY, f64::max),
                Player::P1 => vals.fold(f64::INFINITY, f64::min),
            }
        }
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Value when `optimiser` maximises its own payoff, the other player is
/// uniform and nature follows its probabilities. Payoff to Player 0.
pub fn response_value(t: &ExplicitTree, id: NodeId, optimiser: Player) -> f64 {
    let n = node(t, id);
    match n.kind {
        ExplicitKind::Terminal { payoff } => payoff,
        ExplicitKind::Chance => probs(n).map(|(p, c)| p * response_value(t, c, optimiser)).sum(),
        ExplicitKind::Decision { player } if player == optimiser => {
            let vals = n.edges.iter().map(|e| response_value(t, e.child, optimiser));
            match player {
                Player::P0 => vals.fold(f64::NEG_INFINITY, f64::max),
                Player::P1 => vals.fold(f64::INFINITY, f64::min),
            }
        }
        ExplicitKind::Decision { .. } => mean(n.edges.iter().map(|e| response_value(t, e.child, optimiser))),
    }
}

pub fn uniform_value(t: &ExplicitTree, id: NodeId) -> f64 {
    let n = node(t, id);
    match n.kind {
        ExplicitKind::Terminal { payoff } => payoff,
        ExplicitKind::Chance => probs(n).map(|(p, c)| p * uniform_value(t, c)).sum(),
        ExplicitKind::Decision { .. } => mean(n.edges.iter().map(|e| uniform_value(t, e.child))),
    }
}

/// Uniform decisions, nature picking the best (`favour`) or worst child.
pub fn luck_value(t: &ExplicitTree, id: NodeId, favour: bool) -> f64 {
    let n = node(t, id);
    match n.kind {
        ExplicitKind::Terminal { payoff } => payoff,
        ExplicitKind::Chance => {
            let vals = n.edges.iter().map(|e| luck_value(t, e.child, favour));
            if favour {
                vals.fold(f64::NEG_INFINITY, f64::max)
            } else {
                vals.fold(f64::INFINITY, f64::min)
            }
        }
        ExplicitKind::Decision { .. } => mean(n.edges.iter().map(|e| luck_value(t, e.child, favour))),
    }
}

pub fn oracle_k(t: &ExplicitTree) -> f64 {
    response_value(t, t.root(), Player::P0) - uniform_value(t, t.root())
}

pub fn oracle_l(t: &ExplicitTree) -> f64 {
    luck_value(t, t.root(), true) - luck_value(t, t.root(), false)
}

/// Σ by enumerating every trajectory of (P0 best response, P1 uniform)
/// with its probability.
pub fn oracle_sigma(t: &ExplicitTree) -> f64 {
    let mut by_ply: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    paths(t, t.root(), 1.0, false, 0, &mut by_ply);
    by_ply
        .values()
        .map(|xs| {
            let m: f64 = xs.iter().map(|(p, _)| p).sum();
            let mu = xs.iter().map(|(p, d)| p * d).sum::<f64>() / m;
            xs.iter().map(|(p, d)| p * (d - mu).powi(2)).sum::<f64>() / m
        })
        .sum()
}

fn paths(t: &ExplicitTree, id: NodeId, prob: f64, decided: bool, ply: u32, out: &mut BTreeMap<u32, Vec<(f64, f64)>>) {
    let n = node(t, id);
    let v = |c: NodeId| response_value(t, c, Player::P0);
    match n.kind {
        ExplicitKind::Terminal { .. } => {}
        ExplicitKind::Chance => {
            let here = v(id);
            for (p, c) in probs(n) {
                if decided {
                    out.entry(ply).or_default().push((prob * p, v(c) - here));
                }
                paths(t, c, prob * p, decided, ply + 1, out);
            }
        }
        ExplicitKind::Decision { player: Player::P0 } => {
            let vals: Vec<f64> = n.edges.iter().map(|e| v(e.child)).collect();
            let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let i = vals.iter().position(|&x| x == best).unwrap();
            paths(t, n.edges[i].child, prob, true, ply + 1, out);
        }
        ExplicitKind::Decision { player: Player::P1 } => {
            let k = n.edges.len() as f64;
            for e in &n.edges {
                paths(t, e.child, prob / k, true, ply + 1, out);
            }
        }
    }
}

/// The same game seen from the other side: players swapped, payoffs
/// complemented.
pub fn mirror(t: &ExplicitTree) -> ExplicitTree {
    let nodes: BTreeMap<NodeId, ExplicitNode> = t
        .nodes()
        .map(|(id, n)| {
            let kind = match n.kind {
                ExplicitKind::Decision { player } => ExplicitKind::Decision { player: player.other() },
                ExplicitKind::Terminal { payoff } => ExplicitKind::Terminal { payoff: 1.0 - payoff },
                ExplicitKind::Chance => ExplicitKind::Chance,
            };
            (id, ExplicitNode { kind, edges: n.edges.clone() })
        })
        .collect();
    ExplicitTree::from_parts(nodes, t.root()).unwrap()
}

pub fn terminals(t: &ExplicitTree) -> Vec<(NodeId, f64)> {
    t.preorder()
        .into_iter()
        .filter_map(|id| match node(t, id).kind {
            ExplicitKind::Terminal { payoff } => Some((id, payoff)),
            _ => None,
        })
        .collect()
}

pub fn height(t: &ExplicitTree) -> u32 {
    t.depths().values().copied().max().unwrap_or(0)
}

/// Deterministic corpus of random trees; tree `i` uses stream `(seed, i)`.
pub fn corpus(seed: u64, count: u64, config: &TreeConfig) -> Vec<ExplicitTree> {
    (0..count).map(|i| random_tree(&mut stream(seed, i), config)).collect()
}

/// Maps explicit node ids to library states of `as_game(tree)`.
pub fn id_states(game: &skill_luck::tree_io::ExplicitGame) -> HashMap<NodeId, skill_luck::State> {
    use skill_luck::Game;
    let t = game.tree();
    let mut out = HashMap::new();
    let mut stack = vec![(t.root(), game.initial_state())];
    while let Some((id, s)) = stack.pop() {
        let succ = game.successors(&s).unwrap();
        for (e, edge) in node(t, id).edges.iter().zip(succ) {
            stack.push((e.child, edge.state));
        }
        out.insert(id, s);
    }
    out
}
