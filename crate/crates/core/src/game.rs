//! Game model shared by every solver: states, node kinds, successor edges,
//! policies, and the exhaustive structural validator.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::Serialize;
use thiserror::Error;

/// Tolerance on chance probability sums.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Value assigned to a non-terminal state cut off at `max_ply`.
pub const TRUNCATED_VALUE: f64 = 0.5;

/// Draw payoff for both players.
pub const DRAW: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("corrupt state in game '{game}': {reason}")]
    CorruptState { game: String, reason: String },
    #[error("invalid parameter for game '{game}': {reason}")]
    InvalidParameter { game: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Player {
    P0,
    P1,
}

impl Player {
    pub fn index(self) -> usize {
        match self {
            Player::P0 => 0,
            Player::P1 => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Player> {
        match i {
            0 => Some(Player::P0),
            1 => Some(Player::P1),
            _ => None,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::P0 => Player::P1,
            Player::P1 => Player::P0,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// What happens at a state. Payoffs are always to Player 0; Player 1
/// receives `1 - payoff`.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Decision { player: Player },
    Chance { probs: Vec<f64> },
    Terminal { payoff: f64 },
}

impl NodeKind {
    pub fn is_terminal(&self) -> bool {
        matches!(self, NodeKind::Terminal { .. })
    }
}

/// Fixed-width key identifying a state up to subtree equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(pub u64);

/// An opaque game position. The byte encoding is owned by the game; the
/// key is derived from the encoding and the ply, so equal keys imply equal
/// truncation behaviour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    data: Vec<u8>,
    ply: u32,
    key: StateKey,
}

impl State {
    pub fn new(data: Vec<u8>, ply: u32) -> Self {
        let mut h = DefaultHasher::new();
        data.hash(&mut h);
        ply.hash(&mut h);
        State { data, ply, key: StateKey(h.finish()) }
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn ply(&self) -> u32 {
        self.ply
    }

    pub fn key(&self) -> StateKey {
        self.key
    }
}

/// One outgoing edge. `prob` is set on chance edges and only there.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub label: String,
    pub prob: Option<f64>,
    pub state: State,
}

impl Edge {
    pub fn action(label: impl Into<String>, state: State) -> Self {
        Edge { label: label.into(), prob: None, state }
    }

    pub fn chance(label: impl Into<String>, prob: f64, state: State) -> Self {
        Edge { label: label.into(), prob: Some(prob), state }
    }
}

/// A finite two-player zero-sum game with chance.
///
/// Implementations are immutable and must return successors in a stable
/// order: every tie-break in the crate picks the lowest successor index.
pub trait Game: Send + Sync {
    fn name(&self) -> &str;
    fn initial_state(&self) -> State;
    /// Kind of `state` under the rules, ignoring the `max_ply` cut-off.
    fn node_kind(&self, state: &State) -> Result<NodeKind, GameError>;
    fn successors(&self, state: &State) -> Result<Vec<Edge>, GameError>;
    /// Truncation bound: a non-terminal state at this ply is a leaf.
    fn max_ply(&self) -> u32;
}

/// A node kind after applying the `max_ply` truncation rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub kind: NodeKind,
    pub truncated: bool,
}

/// The node kind seen by solvers. Non-terminal states at `max_ply` become
/// terminals worth [`TRUNCATED_VALUE`] and are flagged.
pub fn node_kind(game: &dyn Game, state: &State) -> Result<Resolved, GameError> {
    let kind = game.node_kind(state)?;
    if !kind.is_terminal() && state.ply() >= game.max_ply() {
        return Ok(Resolved { kind: NodeKind::Terminal { payoff: TRUNCATED_VALUE }, truncated: true });
    }
    Ok(Resolved { kind, truncated: false })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    ProbabilitySum { ply: u32, sum: f64 },
    NonPositiveProbability { ply: u32, prob: f64 },
    ProbabilityMismatch { ply: u32 },
    PayoffOutOfRange { ply: u32, payoff: f64 },
    DecisionEdgeWithProbability { ply: u32, label: String },
    ChanceEdgeWithoutProbability { ply: u32, label: String },
    NoSuccessors { ply: u32 },
    PlyNotIncreasing { ply: u32, child_ply: u32 },
    KeyCollision { ply: u32 },
    Truncation { ply: u32 },
    Structural { message: String },
}

impl Finding {
    /// Truncations are warnings; everything else invalidates the game.
    pub fn is_warning(&self) -> bool {
        matches!(self, Finding::Truncation { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub game: String,
    pub states: u64,
    pub decision_nodes: u64,
    pub chance_nodes: u64,
    pub terminal_nodes: u64,
    pub truncations: u64,
    pub findings: Vec<Finding>,
    /// True when the walk stopped early at the state limit.
    pub incomplete: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        !self.incomplete && self.findings.iter().all(Finding::is_warning)
    }

    pub fn warnings(&self) -> usize {
        self.findings.iter().filter(|f| f.is_warning()).count()
    }

    pub fn errors(&self) -> usize {
        self.findings.len() - self.warnings()
    }
}

/// Walks every distinct reachable state (deduplicated by key) and reports
/// structural problems. Revisits of a key are checked against the first
/// visit's kind and edge labels to catch key collisions.
pub fn validate_game(game: &dyn Game) -> ValidationReport {
    validate_game_limited(game, u64::MAX)
}

/// Like [`validate_game`] but stops after `max_states` distinct states.
pub fn validate_game_limited(game: &dyn Game, max_states: u64) -> ValidationReport {
    let mut report = ValidationReport {
        game: game.name().to_string(),
        states: 0,
        decision_nodes: 0,
        chance_nodes: 0,
        terminal_nodes: 0,
        truncations: 0,
        findings: Vec::new(),
        incomplete: false,
    };
    // key -> fingerprint of (kind, labels)
    let mut seen: HashMap<StateKey, u64> = HashMap::new();
    let mut stack = vec![game.initial_state()];
    // Cap on recorded findings; counts keep going.
    const MAX_FINDINGS: usize = 1000;
    let push = |report: &mut ValidationReport, f: Finding| {
        if report.findings.len() < MAX_FINDINGS {
            report.findings.push(f);
        }
    };

    while let Some(state) = stack.pop() {
        let ply = state.ply();
        let resolved = match node_kind(game, &state) {
            Ok(r) => r,
            Err(e) => {
                push(&mut report, Finding::Structural { message: e.to_string() });
                continue;
            }
        };
        let edges = if resolved.kind.is_terminal() {
            Vec::new()
        } else {
            match game.successors(&state) {
                Ok(e) => e,
                Err(e) => {
                    push(&mut report, Finding::Structural { message: e.to_string() });
                    continue;
                }
            }
        };
        let fp = fingerprint(&resolved.kind, &edges);
        if let Some(&prev) = seen.get(&state.key()) {
            if prev != fp {
                push(&mut report, Finding::KeyCollision { ply });
            }
            continue;
        }
        if report.states >= max_states {
            report.incomplete = true;
            break;
        }
        seen.insert(state.key(), fp);
        report.states += 1;

        if resolved.truncated {
            report.truncations += 1;
            push(&mut report, Finding::Truncation { ply });
        }
        match &resolved.kind {
            NodeKind::Terminal { payoff } => {
                report.terminal_nodes += 1;
                if !(0.0..=1.0).contains(payoff) || payoff.is_nan() {
                    push(&mut report, Finding::PayoffOutOfRange { ply, payoff: *payoff });
                }
            }
            NodeKind::Decision { .. } => {
                report.decision_nodes += 1;
                if edges.is_empty() {
                    push(&mut report, Finding::NoSuccessors { ply });
                }
                for e in &edges {
                    if e.prob.is_some() {
                        push(&mut report, Finding::DecisionEdgeWithProbability { ply, label: e.label.clone() });
                    }
                }
            }
            NodeKind::Chance { probs } => {
                report.chance_nodes += 1;
                if edges.is_empty() {
                    push(&mut report, Finding::NoSuccessors { ply });
                }
                let mut sum = 0.0;
                for e in &edges {
                    match e.prob {
                        None => {
                            push(&mut report, Finding::ChanceEdgeWithoutProbability { ply, label: e.label.clone() })
                        }
                        Some(p) => {
                            if !(p > 0.0) {
                                push(&mut report, Finding::NonPositiveProbability { ply, prob: p });
                            }
                            sum += p;
                        }
                    }
                }
                if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
                    push(&mut report, Finding::ProbabilitySum { ply, sum });
                }
                let edge_probs: Vec<Option<f64>> = edges.iter().map(|e| e.prob).collect();
                let kind_probs: Vec<Option<f64>> = probs.iter().copied().map(Some).collect();
                if edge_probs != kind_probs {
                    push(&mut report, Finding::ProbabilityMismatch { ply });
                }
            }
        }
        for e in edges.into_iter().rev() {
            if e.state.ply() <= ply {
                push(&mut report, Finding::PlyNotIncreasing { ply, child_ply: e.state.ply() });
                continue;
            }
            stack.push(e.state);
        }
    }
    report
}

fn fingerprint(kind: &NodeKind, edges: &[Edge]) -> u64 {
    let mut h = DefaultHasher::new();
    match kind {
        NodeKind::Decision { player } => (0u8, player.index()).hash(&mut h),
        NodeKind::Chance { probs } => {
            1u8.hash(&mut h);
            for p in probs {
                p.to_bits().hash(&mut h);
            }
        }
        NodeKind::Terminal { payoff } => (2u8, payoff.to_bits()).hash(&mut h),
    }
    for e in edges {
        e.label.hash(&mut h);
    }
    h.finish()
}

/// Counts distinct reachable states, stopping once `limit` is exceeded.
/// Returns `None` when the game is larger than `limit`.
pub fn count_states(game: &dyn Game, limit: u64) -> Result<Option<u64>, GameError> {
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![game.initial_state()];
    while let Some(s) = stack.pop() {
        if !seen.insert(s.key()) {
            continue;
        }
        if seen.len() as u64 > limit {
            return Ok(None);
        }
        if node_kind(game, &s)?.kind.is_terminal() {
            continue;
        }
        stack.extend(game.successors(&s)?.into_iter().map(|e| e.state));
    }
    Ok(Some(seen.len() as u64))
}

/// Action-selection rule for one or both players.
#[derive(Debug, Clone)]
pub enum Policy {
    /// Equal mass on every legal action.
    UniformRandom,
    /// Deterministic action index per state of `player`.
    Tabular { player: Player, actions: HashMap<StateKey, usize> },
    /// Explicit action distribution per state of `player`.
    Mixed { player: Player, dists: HashMap<StateKey, Vec<f64>> },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("policy undefined at a reachable decision node (ply {ply})")]
    Undefined { ply: u32 },
    #[error("policy for player {expected} queried at a node of player {actual}")]
    WrongPlayer { expected: Player, actual: Player },
    #[error("policy distribution has {got} entries but the node has {expected} actions")]
    Arity { expected: usize, got: usize },
}

impl Policy {
    /// Distribution over the `n_actions` successors of a decision node
    /// owned by `player`.
    pub fn distribution(&self, state: &State, player: Player, n_actions: usize) -> Result<Vec<f64>, PolicyError> {
        match self {
            Policy::UniformRandom => Ok(vec![1.0 / n_actions as f64; n_actions]),
            Policy::Tabular { player: owner, actions } => {
                if *owner != player {
                    return Err(PolicyError::WrongPlayer { expected: *owner, actual: player });
                }
                let a = *actions.get(&state.key()).ok_or(PolicyError::Undefined { ply: state.ply() })?;
                if a >= n_actions {
                    return Err(PolicyError::Arity { expected: n_actions, got: a + 1 });
                }
                let mut d = vec![0.0; n_actions];
                d[a] = 1.0;
                Ok(d)
            }
            Policy::Mixed { player: owner, dists } => {
                if *owner != player {
                    return Err(PolicyError::WrongPlayer { expected: *owner, actual: player });
                }
                let d = dists.get(&state.key()).ok_or(PolicyError::Undefined { ply: state.ply() })?;
                if d.len() != n_actions {
                    return Err(PolicyError::Arity { expected: n_actions, got: d.len() });
                }
                Ok(d.clone())
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Policy::UniformRandom => "uniform",
            Policy::Tabular { .. } => "tabular",
            Policy::Mixed { .. } => "mixed",
        }
    }
}

/// One policy per player.
#[derive(Debug, Clone)]
pub struct Profile {
    pub policies: [Policy; 2],
}

impl Profile {
    pub fn new(p0: Policy, p1: Policy) -> Self {
        Profile { policies: [p0, p1] }
    }

    pub fn uniform() -> Self {
        Profile::new(Policy::UniformRandom, Policy::UniformRandom)
    }

    pub fn policy(&self, player: Player) -> &Policy {
        &self.policies[player.index()]
    }
}
