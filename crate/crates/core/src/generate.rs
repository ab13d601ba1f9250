//! Random explicit trees for property tests and experiments.

use rand::Rng;

use crate::game::Player;
use crate::tree_io::{ExplicitTree, NodeId, TreeBuilder};

#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    /// Upper bound on the node count (at least 1).
    pub max_nodes: usize,
    pub max_depth: u32,
    pub max_branching: usize,
    pub decisions: bool,
    pub chance: bool,
    /// Probability that a non-root node below the limits is a leaf.
    pub leaf_probability: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_nodes: 1000,
            max_depth: 12,
            max_branching: 3,
            decisions: true,
            chance: true,
            leaf_probability: 0.3,
        }
    }
}

impl TreeConfig {
    pub fn deterministic() -> Self {
        TreeConfig { chance: false, ..Self::default() }
    }

    pub fn no_decisions() -> Self {
        TreeConfig { decisions: false, ..Self::default() }
    }
}

/// Half the payoffs come from a coarse grid so that ties and exact zeros
/// are common; the rest are uniform on [0, 1].
pub fn random_payoff<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random_bool(0.5) {
        rng.random_range(0..=4) as f64 / 4.0
    } else {
        rng.random::<f64>()
    }
}

pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, config: &TreeConfig) -> ExplicitTree {
    let mut b = TreeBuilder::new();
    // Nodes still available beyond those already reserved.
    let mut budget = config.max_nodes.max(1) - 1;
    let root = grow(&mut b, rng, config, 0, &mut budget);
    b.finish(root).expect("generated tree is well formed")
}

fn grow<R: Rng + ?Sized>(b: &mut TreeBuilder, rng: &mut R, cfg: &TreeConfig, depth: u32, budget: &mut usize) -> NodeId {
    let inner = cfg.decisions || cfg.chance;
    let leaf = !inner
        || *budget == 0
        || depth >= cfg.max_depth
        || cfg.max_branching == 0
        || (depth > 0 && rng.random_bool(cfg.leaf_probability));
    if leaf {
        return b.terminal(random_payoff(rng));
    }
    let arity = rng.random_range(1..=cfg.max_branching).min(*budget);
    *budget -= arity;
    let children: Vec<NodeId> = (0..arity).map(|_| grow(b, rng, cfg, depth + 1, budget)).collect();
    let chance = match (cfg.decisions, cfg.chance) {
        (true, true) => rng.random_bool(1.0 / 3.0),
        (false, _) => true,
        (true, false) => false,
    };
    if chance {
        let weights: Vec<f64> = (0..arity).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        b.chance(children.iter().enumerate().map(|(i, &c)| (format!("o{i}"), weights[i] / total, c)))
    } else {
        let player = if rng.random_bool(0.5) { Player::P0 } else { Player::P1 };
        b.decision(player, children.iter().enumerate().map(|(i, &c)| (format!("a{i}"), c)))
    }
}
