//! Value computation: expectiminimax with alpha-beta, policy evaluation,
//! best responses, and the generic memoised backup they share.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use dashmap::DashMap;
use thiserror::Error;

use crate::game::{node_kind, Game, GameError, NodeKind, Player, Policy, PolicyError, State, StateKey};

/// Default cap on distinct state expansions for one evaluator.
pub const DEFAULT_NODE_BUDGET: u64 = 20_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(
        "game '{game}' truncates at ply {ply}; exact (unbounded depth) evaluation refused, use depth-limited mode"
    )]
    Truncated { game: String, ply: u32 },
    #[error("game '{game}' exceeded the node budget of {limit} expansions (at least {expanded} states); use mc or depth-limited mode")]
    Budget { game: String, expanded: u64, limit: u64 },
    #[error("contract violation: {0}")]
    Contract(String),
}

/// Search horizon in plies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Depth {
    Full,
    Limited(u32),
}

impl Depth {
    fn child(self) -> Depth {
        match self {
            Depth::Full => Depth::Full,
            Depth::Limited(d) => Depth::Limited(d.saturating_sub(1)),
        }
    }

    fn at_frontier(self) -> bool {
        self == Depth::Limited(0)
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Full => write!(f, "full"),
            Depth::Limited(d) => write!(f, "{d}"),
        }
    }
}

impl FromStr for Depth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" | "inf" | "exact" => Ok(Depth::Full),
            _ => s
                .parse()
                .map(Depth::Limited)
                .map_err(|_| format!("invalid depth '{s}' (expected a non-negative integer or 'full')")),
        }
    }
}

/// Leaf evaluation at the depth frontier. Solvers only call it on
/// non-terminal states; terminals always score their exact payoff.
pub trait Heuristic: Send + Sync {
    fn evaluate(&self, game: &dyn Game, state: &State) -> f64;
    fn name(&self) -> &str;
}

/// Constant leaf value; the default is the symmetric prior 0.5.
#[derive(Debug, Clone, Copy)]
pub struct ConstantHeuristic(pub f64);

impl Default for ConstantHeuristic {
    fn default() -> Self {
        ConstantHeuristic(0.5)
    }
}

impl Heuristic for ConstantHeuristic {
    fn evaluate(&self, _game: &dyn Game, _state: &State) -> f64 {
        self.0
    }

    fn name(&self) -> &str {
        "constant"
    }
}

fn heuristic_value(h: &dyn Heuristic, game: &dyn Game, state: &State) -> f64 {
    h.evaluate(game, state).clamp(0.0, 1.0)
}

/// Which evaluation a cache holds. Caches never mix modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheMode {
    Minimax,
    Profile(String),
    Response { player: Player, opponent: String },
    LuckMax(String),
    LuckMin(String),
}

/// Transposition table from state keys to solved values in [0, 1].
/// Values that never touched the depth frontier are stored depth-free.
#[derive(Debug)]
pub struct ValueCache {
    mode: CacheMode,
    exact: DashMap<StateKey, f64>,
    limited: DashMap<(StateKey, u32), f64>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl ValueCache {
    pub fn new(mode: CacheMode) -> Self {
        ValueCache {
            mode,
            exact: DashMap::new(),
            limited: DashMap::new(),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn mode(&self) -> &CacheMode {
        &self.mode
    }

    pub fn get(&self, key: StateKey, depth: Depth) -> Option<f64> {
        let found = self.exact.get(&key).map(|v| *v).or_else(|| match depth {
            Depth::Full => None,
            Depth::Limited(d) => self.limited.get(&(key, d)).map(|v| *v),
        });
        if found.is_some() {
            self.hits.fetch_add(1, Ordering::Relaxed);
        } else {
            self.misses.fetch_add(1, Ordering::Relaxed);
        }
        found
    }

    /// `exact` marks a value computed without reaching the frontier; such a
    /// value is valid for every depth.
    pub fn insert(&self, key: StateKey, depth: Depth, value: f64, exact: bool) {
        match (exact, depth) {
            (true, _) | (_, Depth::Full) => {
                self.exact.insert(key, value);
            }
            (false, Depth::Limited(d)) => {
                self.limited.insert((key, d), value);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.limited.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}

/// Source of action distributions at decision nodes. Implemented by
/// [`Policy`] and by lazily computed best responses.
pub trait ActionRule: Send + Sync {
    fn distribution(
        &self,
        game: &dyn Game,
        state: &State,
        player: Player,
        n_actions: usize,
    ) -> Result<Vec<f64>, SolveError>;

    fn describe(&self) -> String;
}

impl ActionRule for Policy {
    fn distribution(
        &self,
        _game: &dyn Game,
        state: &State,
        player: Player,
        n_actions: usize,
    ) -> Result<Vec<f64>, SolveError> {
        Ok(Policy::distribution(self, state, player, n_actions)?)
    }

    fn describe(&self) -> String {
        self.kind_name().to_string()
    }
}

/// How a decision node combines its children.
#[derive(Clone, Copy)]
pub enum DecisionRule<'a> {
    Max,
    Min,
    Weighted(&'a dyn ActionRule),
}

/// How a chance node combines its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChanceRule {
    Expect,
    Max,
    Min,
}

/// Memoised backward induction under a per-player decision rule and a
/// chance rule. Every exact quantity in the crate is one instance:
///
/// | quantity               | player 0      | player 1      | chance |
/// |------------------------|---------------|---------------|--------|
/// | value under a profile  | weighted(π0)  | weighted(π1)  | expect |
/// | best response of P0    | max           | weighted(π1)  | expect |
/// | luck-max / luck-min    | weighted(π̃)  | weighted(π̃)  | max/min|
///
/// Zero-weight children are not visited. Ties in max/min pick the lowest
/// successor index.
pub struct Backup<'a> {
    game: &'a dyn Game,
    rules: [DecisionRule<'a>; 2],
    chance: ChanceRule,
    heuristic: &'a dyn Heuristic,
    cache: Option<ValueCache>,
    budget: u64,
    expanded: AtomicU64,
}

impl<'a> Backup<'a> {
    pub fn new(
        game: &'a dyn Game,
        rules: [DecisionRule<'a>; 2],
        chance: ChanceRule,
        heuristic: &'a dyn Heuristic,
        mode: CacheMode,
    ) -> Self {
        Backup {
            game,
            rules,
            chance,
            heuristic,
            cache: Some(ValueCache::new(mode)),
            budget: DEFAULT_NODE_BUDGET,
            expanded: AtomicU64::new(0),
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Disables memoisation (used to check that caching is transparent).
    pub fn without_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn game(&self) -> &'a dyn Game {
        self.game
    }

    pub fn cache(&self) -> Option<&ValueCache> {
        self.cache.as_ref()
    }

    pub fn expanded(&self) -> u64 {
        self.expanded.load(Ordering::Relaxed)
    }

    pub fn value(&self, state: &State, depth: Depth) -> Result<f64, SolveError> {
        self.eval(state, depth).map(|(v, _)| v)
    }

    /// Children of a decision node with their backed-up values, and the
    /// index the node's max/min rule would pick (if it is one).
    pub fn child_values(&self, state: &State, depth: Depth) -> Result<Vec<f64>, SolveError> {
        let edges = self.game.successors(state)?;
        edges.iter().map(|e| self.eval(&e.state, depth.child()).map(|(v, _)| v)).collect()
    }

    // Returns (value, exact) where `exact` means the frontier was never hit.
    fn eval(&self, state: &State, depth: Depth) -> Result<(f64, bool), SolveError> {
        let resolved = node_kind(self.game, state)?;
        if let NodeKind::Terminal { payoff } = resolved.kind {
            if resolved.truncated {
                if depth == Depth::Full {
                    return Err(SolveError::Truncated { game: self.game.name().to_string(), ply: state.ply() });
                }
                return Ok((payoff, false));
            }
            return Ok((payoff, true));
        }
        if depth.at_frontier() {
            return Ok((heuristic_value(self.heuristic, self.game, state), false));
        }
        if let Some(cache) = &self.cache {
            if let Some(v) = cache.get(state.key(), depth) {
                return Ok((v, depth == Depth::Full || cache.exact.contains_key(&state.key())));
            }
        }
        let n = self.expanded.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.budget {
            return Err(SolveError::Budget { game: self.game.name().to_string(), expanded: n, limit: self.budget });
        }
        let edges = self.game.successors(state)?;
        let child_depth = depth.child();
        let mut exact = true;
        let value = match resolved.kind {
            NodeKind::Decision { player } => match self.rules[player.index()] {
                DecisionRule::Max => {
                    let mut best = f64::NEG_INFINITY;
                    for e in &edges {
                        let (v, x) = self.eval(&e.state, child_depth)?;
                        exact &= x;
                        if v > best {
                            best = v;
                        }
                    }
                    best
                }
                DecisionRule::Min => {
                    let mut best = f64::INFINITY;
                    for e in &edges {
                        let (v, x) = self.eval(&e.state, child_depth)?;
                        exact &= x;
                        if v < best {
                            best = v;
                        }
                    }
                    best
                }
                DecisionRule::Weighted(rule) => {
                    let w = rule.distribution(self.game, state, player, edges.len())?;
                    let mut acc = 0.0;
                    for (e, &p) in edges.iter().zip(&w) {
                        if p == 0.0 {
                            continue;
                        }
                        let (v, x) = self.eval(&e.state, child_depth)?;
                        exact &= x;
                        acc += p * v;
                    }
                    acc
                }
            },
            NodeKind::Chance { .. } => {
                let mut acc = match self.chance {
                    ChanceRule::Expect => 0.0,
                    ChanceRule::Max => f64::NEG_INFINITY,
                    ChanceRule::Min => f64::INFINITY,
                };
                for e in &edges {
                    let (v, x) = self.eval(&e.state, child_depth)?;
                    exact &= x;
                    match self.chance {
                        ChanceRule::Expect => acc += e.prob.unwrap_or(0.0) * v,
                        ChanceRule::Max => {
                            if v > acc {
                                acc = v
                            }
                        }
                        ChanceRule::Min => {
                            if v < acc {
                                acc = v
                            }
                        }
                    }
                }
                acc
            }
            NodeKind::Terminal { .. } => unreachable!("terminals return early"),
        };
        if let Some(cache) = &self.cache {
            cache.insert(state.key(), depth, value, exact);
        }
        Ok((value, exact))
    }
}

/// Index of the first maximum (or minimum when `minimise`).
pub fn first_best(values: &[f64], minimise: bool) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        let better = if minimise { v < values[best] } else { v > values[best] };
        if better {
            best = i;
        }
    }
    best
}

/// Exact expected payoff to Player 0 from `state` when both players follow
/// `profile` and chance follows the rules.
pub fn value_under_profile(
    game: &dyn Game,
    state: &State,
    policy0: &dyn ActionRule,
    policy1: &dyn ActionRule,
) -> Result<f64, SolveError> {
    let h = ConstantHeuristic::default();
    let mode = CacheMode::Profile(format!("{}/{}", policy0.describe(), policy1.describe()));
    Backup::new(game, [DecisionRule::Weighted(policy0), DecisionRule::Weighted(policy1)], ChanceRule::Expect, &h, mode)
        .value(state, Depth::Full)
}

/// Best response of `for_player` against a fixed `opponent` rule.
///
/// With [`Depth::Full`] the result is a tabular policy over every reachable
/// decision node of `for_player`. With a finite depth the response is a
/// lookahead evaluated lazily at each queried node.
pub enum BestResponse<'a> {
    Table(Policy),
    Lookahead(Lookahead<'a>),
}

impl ActionRule for BestResponse<'_> {
    fn distribution(
        &self,
        game: &dyn Game,
        state: &State,
        player: Player,
        n_actions: usize,
    ) -> Result<Vec<f64>, SolveError> {
        match self {
            BestResponse::Table(p) => ActionRule::distribution(p, game, state, player, n_actions),
            BestResponse::Lookahead(l) => l.distribution(game, state, player, n_actions),
        }
    }

    fn describe(&self) -> String {
        match self {
            BestResponse::Table(_) => "best-response".into(),
            BestResponse::Lookahead(l) => l.describe(),
        }
    }
}

impl BestResponse<'_> {
    pub fn as_policy(&self) -> Option<&Policy> {
        match self {
            BestResponse::Table(p) => Some(p),
            BestResponse::Lookahead(_) => None,
        }
    }
}

/// Backup evaluator for `player` maximising (P0) or minimising (P1) against
/// `opponent`, treating opponent nodes as weighted chance nodes.
pub fn response_backup<'a>(
    game: &'a dyn Game,
    player: Player,
    opponent: &'a dyn ActionRule,
    heuristic: &'a dyn Heuristic,
) -> Backup<'a> {
    let own = match player {
        Player::P0 => DecisionRule::Max,
        Player::P1 => DecisionRule::Min,
    };
    let mut rules = [DecisionRule::Weighted(opponent), DecisionRule::Weighted(opponent)];
    rules[player.index()] = own;
    Backup::new(
        game,
        rules,
        ChanceRule::Expect,
        heuristic,
        CacheMode::Response { player, opponent: opponent.describe() },
    )
}

pub fn best_response<'a>(
    game: &'a dyn Game,
    opponent: &'a dyn ActionRule,
    for_player: Player,
    depth: Depth,
    heuristic: &'a dyn Heuristic,
) -> Result<BestResponse<'a>, SolveError> {
    match depth {
        Depth::Full => {
            let backup = response_backup(game, for_player, opponent, heuristic);
            let table = response_table(&backup, for_player)?;
            Ok(BestResponse::Table(Policy::Tabular { player: for_player, actions: table }))
        }
        Depth::Limited(d) => Ok(BestResponse::Lookahead(Lookahead {
            backup: response_backup(game, for_player, opponent, heuristic),
            player: for_player,
            depth: d,
            choices: DashMap::new(),
        })),
    }
}

// Walks every reachable state (all edges, not only positive-weight ones) and
// records the best action at each node of `player`.
fn response_table(backup: &Backup<'_>, player: Player) -> Result<HashMap<StateKey, usize>, SolveError> {
    let game = backup.game();
    let mut table = HashMap::new();
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![game.initial_state()];
    while let Some(s) = stack.pop() {
        if !seen.insert(s.key()) {
            continue;
        }
        let resolved = node_kind(game, &s)?;
        if resolved.truncated {
            return Err(SolveError::Truncated { game: game.name().to_string(), ply: s.ply() });
        }
        match resolved.kind {
            NodeKind::Terminal { .. } => continue,
            NodeKind::Decision { player: p } if p == player => {
                let values = backup.child_values(&s, Depth::Full)?;
                table.insert(s.key(), first_best(&values, player == Player::P1));
            }
            _ => {}
        }
        stack.extend(game.successors(&s)?.into_iter().map(|e| e.state));
    }
    Ok(table)
}

/// Depth-limited best response: at each queried node, picks the child with
/// the best depth-`depth` backup (lowest index on ties).
pub struct Lookahead<'a> {
    backup: Backup<'a>,
    player: Player,
    depth: u32,
    choices: DashMap<StateKey, usize>,
}

impl Lookahead<'_> {
    pub fn choose(&self, state: &State) -> Result<usize, SolveError> {
        if let Some(a) = self.choices.get(&state.key()).map(|a| *a) {
            return Ok(a);
        }
        let values = self.backup.child_values(state, Depth::Limited(self.depth))?;
        let a = first_best(&values, self.player == Player::P1);
        self.choices.insert(state.key(), a);
        Ok(a)
    }

    /// Backed-up value of `state` at this lookahead's depth.
    pub fn value(&self, state: &State) -> Result<f64, SolveError> {
        self.backup.value(state, Depth::Limited(self.depth))
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }
}

impl ActionRule for Lookahead<'_> {
    fn distribution(
        &self,
        _game: &dyn Game,
        state: &State,
        player: Player,
        n_actions: usize,
    ) -> Result<Vec<f64>, SolveError> {
        if player != self.player {
            return Err(PolicyError::WrongPlayer { expected: self.player, actual: player }.into());
        }
        let a = self.choose(state)?;
        let mut d = vec![0.0; n_actions];
        d[a] = 1.0;
        Ok(d)
    }

    fn describe(&self) -> String {
        format!("lookahead-{}", self.depth)
    }
}

/// Expectiminimax with fail-soft alpha-beta and a bound-aware
/// transposition table.
///
/// Chance nodes evaluate every child with the full window, so a chance
/// value is always exact and pruning never changes the root value.
pub struct Expectiminimax<'a> {
    game: &'a dyn Game,
    heuristic: &'a dyn Heuristic,
    table: Option<HashMap<(StateKey, Depth), (f64, f64)>>,
    budget: u64,
    expanded: u64,
    hits: u64,
}

impl<'a> Expectiminimax<'a> {
    pub fn new(game: &'a dyn Game, heuristic: &'a dyn Heuristic) -> Self {
        Expectiminimax {
            game,
            heuristic,
            table: Some(HashMap::new()),
            budget: DEFAULT_NODE_BUDGET,
            expanded: 0,
            hits: 0,
        }
    }

    pub fn without_cache(mut self) -> Self {
        self.table = None;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn expanded(&self) -> u64 {
        self.expanded
    }

    pub fn cache_hits(&self) -> u64 {
        self.hits
    }

    pub fn search(&mut self, state: &State, depth: Depth, alpha: f64, beta: f64) -> Result<f64, SolveError> {
        if alpha > beta {
            return Err(SolveError::Contract(format!("alpha {alpha} > beta {beta}")));
        }
        self.ab(state, depth, alpha, beta)
    }

    fn ab(&mut self, state: &State, depth: Depth, mut alpha: f64, mut beta: f64) -> Result<f64, SolveError> {
        let resolved = node_kind(self.game, state)?;
        if let NodeKind::Terminal { payoff } = resolved.kind {
            if resolved.truncated && depth == Depth::Full {
                return Err(SolveError::Truncated { game: self.game.name().to_string(), ply: state.ply() });
            }
            return Ok(payoff);
        }
        if depth.at_frontier() {
            return Ok(heuristic_value(self.heuristic, self.game, state));
        }
        let tt_key = (state.key(), depth);
        if let Some(table) = &self.table {
            if let Some(&(lower, upper)) = table.get(&tt_key) {
                self.hits += 1;
                if lower >= beta {
                    return Ok(lower);
                }
                if upper <= alpha {
                    return Ok(upper);
                }
                if lower == upper {
                    return Ok(lower);
                }
                alpha = alpha.max(lower);
                beta = beta.min(upper);
            }
        }
        self.expanded += 1;
        if self.expanded > self.budget {
            return Err(SolveError::Budget {
                game: self.game.name().to_string(),
                expanded: self.expanded,
                limit: self.budget,
            });
        }
        let edges = self.game.successors(state)?;
        let child_depth = depth.child();
        let g = match resolved.kind {
            NodeKind::Chance { .. } => {
                let mut v = 0.0;
                for e in &edges {
                    v += e.prob.unwrap_or(0.0) * self.ab(&e.state, child_depth, f64::NEG_INFINITY, f64::INFINITY)?;
                }
                v
            }
            NodeKind::Decision { player: Player::P0 } => {
                let mut v = f64::NEG_INFINITY;
                let mut a = alpha;
                for e in &edges {
                    v = v.max(self.ab(&e.state, child_depth, a, beta)?);
                    a = a.max(v);
                    if beta <= a {
                        break;
                    }
                }
                v
            }
            NodeKind::Decision { player: Player::P1 } => {
                let mut v = f64::INFINITY;
                let mut b = beta;
                for e in &edges {
                    v = v.min(self.ab(&e.state, child_depth, alpha, b)?);
                    b = b.min(v);
                    if b <= alpha {
                        break;
                    }
                }
                v
            }
            NodeKind::Terminal { .. } => unreachable!("terminals return early"),
        };
        if let Some(table) = &mut self.table {
            let entry = table.entry(tt_key).or_insert((f64::NEG_INFINITY, f64::INFINITY));
            let chance = matches!(resolved.kind, NodeKind::Chance { .. });
            if chance || (g > alpha && g < beta) {
                *entry = (g, g);
            } else if g <= alpha {
                entry.1 = g;
            } else {
                entry.0 = g;
            }
        }
        Ok(g)
    }
}

/// Game value of `state` by expectiminimax: max at Player 0, min at
/// Player 1, expectation at chance. Depth-limited leaves use `heuristic`.
pub fn expectiminimax(
    game: &dyn Game,
    state: &State,
    depth: Depth,
    heuristic: &dyn Heuristic,
    alpha: f64,
    beta: f64,
) -> Result<f64, SolveError> {
    Expectiminimax::new(game, heuristic).search(state, depth, alpha, beta)
}

/// Shared handle for heuristics chosen at runtime.
pub type SharedHeuristic = Arc<dyn Heuristic>;
