//! Structural edits on explicit trees used by the design experiments and
//! the monotonicity checks.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::game::Player;
use crate::tree_io::{ExplicitEdge, ExplicitKind, ExplicitNode, ExplicitTree, NodeId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("node {0} is not a terminal")]
    NotTerminal(NodeId),
    #[error("node {0} does not exist")]
    NoSuchNode(NodeId),
    #[error("{0}")]
    Inapplicable(String),
    #[error("hidden information needs information sets, which this tool does not model")]
    Unsupported,
}

/// Replaces terminal `id` (payoff p) by a Player 0 decision between the
/// original outcome and a new outcome worth `sibling_payoff` (≤ p).
pub fn insert_dominated_sibling(
    tree: &ExplicitTree,
    id: NodeId,
    sibling_payoff: f64,
) -> Result<ExplicitTree, TransformError> {
    let p = terminal_payoff(tree, id)?;
    if !(0.0..=p).contains(&sibling_payoff) {
        return Err(TransformError::Inapplicable(format!("sibling payoff {sibling_payoff} is not dominated by {p}")));
    }
    let (mut nodes, root) = tree.clone().into_parts();
    let keep = tree.max_id() + 1;
    let worse = keep + 1;
    nodes.insert(keep, leaf(p));
    nodes.insert(worse, leaf(sibling_payoff));
    nodes.insert(
        id,
        ExplicitNode {
            kind: ExplicitKind::Decision { player: Player::P0 },
            edges: vec![edge("keep", None, keep), edge("worse", None, worse)],
        },
    );
    rebuild(nodes, root)
}

/// Replaces terminal `id` by a chance node over new terminals, given as
/// (probability, payoff) pairs.
pub fn replace_with_chance(
    tree: &ExplicitTree,
    id: NodeId,
    outcomes: &[(f64, f64)],
) -> Result<ExplicitTree, TransformError> {
    terminal_payoff(tree, id)?;
    if outcomes.is_empty() {
        return Err(TransformError::Inapplicable("chance node needs at least one outcome".into()));
    }
    let (mut nodes, root) = tree.clone().into_parts();
    let mut next = tree.max_id() + 1;
    let mut edges = Vec::with_capacity(outcomes.len());
    for (i, &(prob, payoff)) in outcomes.iter().enumerate() {
        nodes.insert(next, leaf(payoff));
        edges.push(edge(&format!("o{i}"), Some(prob), next));
        next += 1;
    }
    nodes.insert(id, ExplicitNode { kind: ExplicitKind::Chance, edges });
    rebuild(nodes, root)
}

/// Puts a chance node above the root: with probability `keep` the original
/// game is played, otherwise the game ends at once with `payoff`.
pub fn wrap_root_with_chance(tree: &ExplicitTree, keep: f64, payoff: f64) -> Result<ExplicitTree, TransformError> {
    if !(keep > 0.0 && keep < 1.0) {
        return Err(TransformError::Inapplicable(format!("keep probability {keep} must lie in (0, 1)")));
    }
    let (mut nodes, root) = tree.clone().into_parts();
    let end = tree.max_id() + 1;
    let new_root = end + 1;
    nodes.insert(end, leaf(payoff));
    nodes.insert(
        new_root,
        ExplicitNode {
            kind: ExplicitKind::Chance,
            edges: vec![edge("play", Some(keep), root), edge("end", Some(1.0 - keep), end)],
        },
    );
    rebuild(nodes, new_root)
}

/// The two-outcome spread of payoff `x`: win with probability x, else lose.
/// Sure outcomes become a fair coin.
pub fn spread(x: f64) -> Vec<(f64, f64)> {
    if x > 0.0 && x < 1.0 {
        vec![(x, 1.0), (1.0 - x, 0.0)]
    } else {
        vec![(0.5, 1.0), (0.5, 0.0)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignKind {
    AddEarlyChance,
    AddDecisionDepth,
    AmplifyTerminalVariance,
    ClusterLateChance,
    HiddenInformation,
}

/// Predicted direction of a metric under a design change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
    Variable,
}

impl DesignKind {
    pub const ALL: [DesignKind; 5] = [
        DesignKind::AddEarlyChance,
        DesignKind::AddDecisionDepth,
        DesignKind::AmplifyTerminalVariance,
        DesignKind::ClusterLateChance,
        DesignKind::HiddenInformation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DesignKind::AddEarlyChance => "add-early-chance",
            DesignKind::AddDecisionDepth => "add-decision-depth",
            DesignKind::AmplifyTerminalVariance => "amplify-terminal-variance",
            DesignKind::ClusterLateChance => "cluster-late-chance",
            DesignKind::HiddenInformation => "hidden-information",
        }
    }

    /// Predicted (S, Σ) directions.
    pub fn predicted(self) -> (Direction, Direction) {
        use Direction::*;
        match self {
            DesignKind::AddEarlyChance => (Decrease, Increase),
            DesignKind::AddDecisionDepth => (Increase, Variable),
            DesignKind::AmplifyTerminalVariance => (Decrease, Increase),
            DesignKind::ClusterLateChance => (Decrease, Increase),
            DesignKind::HiddenInformation => (Increase, Decrease),
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DesignKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown design kind '{s}'"))
    }
}

/// Applies a design change:
///
/// - `add-early-chance`: a root chance node that ends the game as a Player 0
///   win with probability 1/2.
/// - `add-decision-depth`: a dominated sibling (payoff 0) next to the first
///   terminal in pre-order with positive payoff.
/// - `amplify-terminal-variance`: every terminal becomes its spread.
/// - `cluster-late-chance`: the deepest terminals become their spreads.
pub fn apply_design(tree: &ExplicitTree, kind: DesignKind) -> Result<ExplicitTree, TransformError> {
    match kind {
        DesignKind::AddEarlyChance => wrap_root_with_chance(tree, 0.5, 1.0),
        DesignKind::AddDecisionDepth => {
            let target = tree
                .preorder()
                .into_iter()
                .find(|&id| matches!(tree.node(id).map(|n| &n.kind), Some(ExplicitKind::Terminal { payoff }) if *payoff > 0.0))
                .ok_or_else(|| TransformError::Inapplicable("no terminal with positive payoff".into()))?;
            insert_dominated_sibling(tree, target, 0.0)
        }
        DesignKind::AmplifyTerminalVariance => spread_terminals(tree, |_| true),
        DesignKind::ClusterLateChance => {
            let depths = tree.depths();
            let deepest = depths.values().copied().max().unwrap_or(0);
            spread_terminals(tree, |id| depths[&id] == deepest)
        }
        DesignKind::HiddenInformation => Err(TransformError::Unsupported),
    }
}

fn spread_terminals(tree: &ExplicitTree, select: impl Fn(NodeId) -> bool) -> Result<ExplicitTree, TransformError> {
    let targets: Vec<(NodeId, f64)> = tree
        .preorder()
        .into_iter()
        .filter(|&id| select(id))
        .filter_map(|id| match tree.node(id)?.kind {
            ExplicitKind::Terminal { payoff } => Some((id, payoff)),
            _ => None,
        })
        .collect();
    if targets.is_empty() {
        return Err(TransformError::Inapplicable("no terminal to replace".into()));
    }
    let mut out = tree.clone();
    for (id, payoff) in targets {
        out = replace_with_chance(&out, id, &spread(payoff))?;
    }
    Ok(out)
}

fn terminal_payoff(tree: &ExplicitTree, id: NodeId) -> Result<f64, TransformError> {
    match tree.node(id).ok_or(TransformError::NoSuchNode(id))?.kind {
        ExplicitKind::Terminal { payoff } => Ok(payoff),
        _ => Err(TransformError::NotTerminal(id)),
    }
}

fn leaf(payoff: f64) -> ExplicitNode {
    ExplicitNode { kind: ExplicitKind::Terminal { payoff }, edges: Vec::new() }
}

fn edge(label: &str, prob: Option<f64>, child: NodeId) -> ExplicitEdge {
    ExplicitEdge { label: label.into(), prob, child }
}

fn rebuild(
    nodes: std::collections::BTreeMap<NodeId, ExplicitNode>,
    root: NodeId,
) -> Result<ExplicitTree, TransformError> {
    ExplicitTree::from_parts(nodes, root).map_err(|e| TransformError::Inapplicable(e.to_string()))
}
