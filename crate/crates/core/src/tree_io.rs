//! Explicit game trees and their line-oriented text format.
//!
//! ```text
//! skill-luck-tree 1
//! root 0
//! 0 chance left@0.5=1 right@0.5=2
//! 1 terminal 1
//! 2 decision 0 A=3 B=4
//! 3 terminal 1
//! 4 terminal 0
//! ```
//!
//! The first non-comment line is the header. Blank lines and lines whose
//! first non-space character is `#` are ignored. Node ids are non-negative
//! integers; labels are any run of characters other than whitespace, `=`,
//! `@` and `#`. The full grammar lives in `docs/tree-format.md`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::game::{Edge, Game, GameError, NodeKind, Player, State, PROB_SUM_TOLERANCE};

pub const FORMAT_HEADER: &str = "skill-luck-tree";
pub const FORMAT_VERSION: u32 = 1;

pub type NodeId = u64;

#[derive(Debug, Clone, PartialEq)]
pub enum ExplicitKind {
    Decision { player: Player },
    Chance,
    Terminal { payoff: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitEdge {
    pub label: String,
    pub prob: Option<f64>,
    pub child: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitNode {
    pub kind: ExplicitKind,
    pub edges: Vec<ExplicitEdge>,
}

/// A finite game tree with explicit node ids. Construct through
/// [`parse_tree`] or [`TreeBuilder`]; both check the tree invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitTree {
    nodes: BTreeMap<NodeId, ExplicitNode>,
    root: NodeId,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("missing or malformed header (expected '{FORMAT_HEADER} {FORMAT_VERSION}')")]
    Header,
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("missing root line")]
    MissingRoot,
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("node {parent} references undefined child {child}")]
    DanglingChild { parent: NodeId, child: NodeId },
    #[error("root {0} is not a defined node")]
    UndefinedRoot(NodeId),
    #[error("cycle through node {0}")]
    Cycle(NodeId),
    #[error("node {0} has more than one parent")]
    MultipleParents(NodeId),
    #[error("node {0} is unreachable from the root")]
    Unreachable(NodeId),
    #[error("chance node {id}: {reason}")]
    Probability { id: NodeId, reason: String },
    #[error("terminal node {id}: payoff {payoff} outside [0, 1]")]
    Payoff { id: NodeId, payoff: f64 },
    #[error("node {0}: non-terminal node without edges")]
    NoEdges(NodeId),
}

/// A tree error with a 1-based source location. Trees built in code carry
/// line and column 0.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct TreeError {
    pub line: usize,
    pub column: usize,
    pub kind: TreeErrorKind,
}

impl TreeError {
    fn at(line: usize, column: usize, kind: TreeErrorKind) -> Self {
        TreeError { line, column, kind }
    }
}

// Source positions per node, used to locate semantic errors.
#[derive(Default)]
struct Positions {
    node_line: HashMap<NodeId, usize>,
    edge_pos: HashMap<(NodeId, usize), (usize, usize)>,
    root_line: usize,
}

impl Positions {
    fn node(&self, id: NodeId) -> (usize, usize) {
        (self.node_line.get(&id).copied().unwrap_or(0), 1)
    }

    fn edge(&self, id: NodeId, idx: usize) -> (usize, usize) {
        self.edge_pos.get(&(id, idx)).copied().unwrap_or((0, 0))
    }
}

fn valid_label(label: &str) -> bool {
    !label.is_empty() && !label.chars().any(|c| c.is_whitespace() || c == '=' || c == '@' || c == '#')
}

/// Parses the text format into a checked tree.
pub fn parse_tree(text: &str) -> Result<ExplicitTree, TreeError> {
    let mut header_seen = false;
    let mut root: Option<NodeId> = None;
    let mut nodes: BTreeMap<NodeId, ExplicitNode> = BTreeMap::new();
    let mut pos = Positions::default();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens = tokenize(raw);
        let syntax = |col: usize, msg: String| TreeError::at(line_no, col, TreeErrorKind::Syntax(msg));

        if !header_seen {
            if tokens.len() != 2 || tokens[0].1 != FORMAT_HEADER {
                return Err(TreeError::at(line_no, 1, TreeErrorKind::Header));
            }
            let version: u32 =
                tokens[1].1.parse().map_err(|_| TreeError::at(line_no, tokens[1].0, TreeErrorKind::Header))?;
            if version != FORMAT_VERSION {
                return Err(TreeError::at(line_no, tokens[1].0, TreeErrorKind::Version(version)));
            }
            header_seen = true;
            continue;
        }

        let (col0, first) = tokens[0];
        if first == "root" {
            if tokens.len() != 2 {
                return Err(syntax(col0, "expected 'root <id>'".into()));
            }
            if root.is_some() {
                return Err(syntax(col0, "duplicate root line".into()));
            }
            root = Some(
                parse_id(tokens[1].1)
                    .ok_or_else(|| syntax(tokens[1].0, format!("invalid node id '{}'", tokens[1].1)))?,
            );
            pos.root_line = line_no;
            continue;
        }

        let id = parse_id(first).ok_or_else(|| syntax(col0, format!("invalid node id '{first}'")))?;
        if nodes.contains_key(&id) {
            return Err(TreeError::at(line_no, col0, TreeErrorKind::DuplicateId(id)));
        }
        let Some(&(kcol, kind)) = tokens.get(1) else {
            return Err(syntax(col0 + first.len(), "missing node kind".into()));
        };
        let mut edges = Vec::new();
        let node_kind = match kind {
            "terminal" => {
                if tokens.len() != 3 {
                    return Err(syntax(kcol, "expected '<id> terminal <payoff>'".into()));
                }
                let (pcol, ptxt) = tokens[2];
                let payoff: f64 = ptxt.parse().map_err(|_| syntax(pcol, format!("invalid payoff '{ptxt}'")))?;
                if !(0.0..=1.0).contains(&payoff) {
                    return Err(TreeError::at(line_no, pcol, TreeErrorKind::Payoff { id, payoff }));
                }
                ExplicitKind::Terminal { payoff }
            }
            "decision" => {
                let Some(&(pcol, ptxt)) = tokens.get(2) else {
                    return Err(syntax(kcol, "missing player".into()));
                };
                let player = match ptxt {
                    "0" => Player::P0,
                    "1" => Player::P1,
                    _ => return Err(syntax(pcol, format!("player must be 0 or 1, got '{ptxt}'"))),
                };
                for (i, &(ecol, etxt)) in tokens[3..].iter().enumerate() {
                    let (label, child) = etxt
                        .split_once('=')
                        .ok_or_else(|| syntax(ecol, format!("expected '<label>=<child>', got '{etxt}'")))?;
                    if !valid_label(label) {
                        return Err(syntax(ecol, format!("invalid edge label '{label}'")));
                    }
                    let child = parse_id(child)
                        .ok_or_else(|| syntax(ecol + label.len() + 1, format!("invalid child id '{child}'")))?;
                    pos.edge_pos.insert((id, i), (line_no, ecol));
                    edges.push(ExplicitEdge { label: label.to_string(), prob: None, child });
                }
                ExplicitKind::Decision { player }
            }
            "chance" => {
                for (i, &(ecol, etxt)) in tokens[2..].iter().enumerate() {
                    let (lhs, child) = etxt
                        .split_once('=')
                        .ok_or_else(|| syntax(ecol, format!("expected '<label>@<prob>=<child>', got '{etxt}'")))?;
                    let (label, prob) = lhs
                        .split_once('@')
                        .ok_or_else(|| syntax(ecol, format!("chance edge '{etxt}' has no probability")))?;
                    if !valid_label(label) {
                        return Err(syntax(ecol, format!("invalid edge label '{label}'")));
                    }
                    let pcol = ecol + label.len() + 1;
                    let p: f64 = prob.parse().map_err(|_| syntax(pcol, format!("invalid probability '{prob}'")))?;
                    if !(p > 0.0 && p <= 1.0) {
                        return Err(TreeError::at(
                            line_no,
                            pcol,
                            TreeErrorKind::Probability { id, reason: format!("probability {prob} not in (0, 1]") },
                        ));
                    }
                    let child = parse_id(child)
                        .ok_or_else(|| syntax(ecol + lhs.len() + 1, format!("invalid child id '{child}'")))?;
                    pos.edge_pos.insert((id, i), (line_no, ecol));
                    edges.push(ExplicitEdge { label: label.to_string(), prob: Some(p), child });
                }
                ExplicitKind::Chance
            }
            other => return Err(syntax(kcol, format!("unknown node kind '{other}'"))),
        };
        pos.node_line.insert(id, line_no);
        nodes.insert(id, ExplicitNode { kind: node_kind, edges });
    }

    if !header_seen {
        return Err(TreeError::at(1, 1, TreeErrorKind::Header));
    }
    let root = root.ok_or(TreeError::at(0, 0, TreeErrorKind::MissingRoot))?;
    check_tree(&nodes, root, &pos)?;
    Ok(ExplicitTree { nodes, root })
}

fn parse_id(s: &str) -> Option<NodeId> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

// Whitespace-separated tokens with 1-based columns (in chars).
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut col_of = Vec::with_capacity(line.len() + 1);
    let mut col = 1;
    for (b, _) in line.char_indices() {
        col_of.push((b, col));
        col += 1;
    }
    let column = |byte: usize| col_of.iter().find(|(b, _)| *b == byte).map(|(_, c)| *c).unwrap_or(1);
    for (b, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((column(s), &line[s..b]));
            }
        } else if start.is_none() {
            start = Some(b);
        }
    }
    if let Some(s) = start {
        out.push((column(s), &line[s..]));
    }
    out
}

fn check_tree(nodes: &BTreeMap<NodeId, ExplicitNode>, root: NodeId, pos: &Positions) -> Result<(), TreeError> {
    if !nodes.contains_key(&root) {
        return Err(TreeError::at(pos.root_line, 1, TreeErrorKind::UndefinedRoot(root)));
    }
    for (&id, node) in nodes {
        for (i, e) in node.edges.iter().enumerate() {
            if !nodes.contains_key(&e.child) {
                let (l, c) = pos.edge(id, i);
                return Err(TreeError::at(l, c, TreeErrorKind::DanglingChild { parent: id, child: e.child }));
            }
        }
        match node.kind {
            ExplicitKind::Terminal { payoff } => {
                if !(0.0..=1.0).contains(&payoff) {
                    let (l, c) = pos.node(id);
                    return Err(TreeError::at(l, c, TreeErrorKind::Payoff { id, payoff }));
                }
                if !node.edges.is_empty() {
                    let (l, c) = pos.node(id);
                    return Err(TreeError::at(l, c, TreeErrorKind::Syntax(format!("terminal node {id} has edges"))));
                }
            }
            ExplicitKind::Chance => {
                if node.edges.is_empty() {
                    let (l, c) = pos.node(id);
                    return Err(TreeError::at(l, c, TreeErrorKind::NoEdges(id)));
                }
                let mut sum = 0.0;
                for (i, e) in node.edges.iter().enumerate() {
                    match e.prob {
                        Some(p) if p > 0.0 => sum += p,
                        _ => {
                            let (l, c) = pos.edge(id, i);
                            return Err(TreeError::at(
                                l,
                                c,
                                TreeErrorKind::Probability {
                                    id,
                                    reason: "every chance edge needs a positive probability".into(),
                                },
                            ));
                        }
                    }
                }
                if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
                    let (l, c) = pos.node(id);
                    return Err(TreeError::at(
                        l,
                        c,
                        TreeErrorKind::Probability { id, reason: format!("probabilities sum to {sum}") },
                    ));
                }
            }
            ExplicitKind::Decision { .. } => {
                if node.edges.is_empty() {
                    let (l, c) = pos.node(id);
                    return Err(TreeError::at(l, c, TreeErrorKind::NoEdges(id)));
                }
                if let Some(i) = node.edges.iter().position(|e| e.prob.is_some()) {
                    let (l, c) = pos.edge(id, i);
                    return Err(TreeError::at(
                        l,
                        c,
                        TreeErrorKind::Syntax(format!("decision node {id} has a probability on an edge")),
                    ));
                }
            }
        }
    }

    // Cycle detection over the whole graph (iterative three-colour DFS).
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark: HashMap<NodeId, Mark> = nodes.keys().map(|&k| (k, Mark::White)).collect();
    let starts = std::iter::once(root).chain(nodes.keys().copied());
    for start in starts {
        if mark[&start] != Mark::White {
            continue;
        }
        let mut stack: Vec<(NodeId, usize)> = vec![(start, 0)];
        mark.insert(start, Mark::Grey);
        while let Some(&mut (id, ref mut next)) = stack.last_mut() {
            let edges = &nodes[&id].edges;
            if *next < edges.len() {
                let i = *next;
                *next += 1;
                let child = edges[i].child;
                match mark[&child] {
                    Mark::Grey => {
                        let (l, c) = pos.edge(id, i);
                        return Err(TreeError::at(l, c, TreeErrorKind::Cycle(child)));
                    }
                    Mark::White => {
                        mark.insert(child, Mark::Grey);
                        stack.push((child, 0));
                    }
                    Mark::Black => {}
                }
            } else {
                mark.insert(id, Mark::Black);
                stack.pop();
            }
        }
    }

    let mut parents: HashMap<NodeId, usize> = HashMap::new();
    for (&id, node) in nodes {
        for (i, e) in node.edges.iter().enumerate() {
            let n = parents.entry(e.child).or_insert(0);
            *n += 1;
            if *n > 1 || e.child == root {
                let (l, c) = pos.edge(id, i);
                return Err(TreeError::at(l, c, TreeErrorKind::MultipleParents(e.child)));
            }
        }
    }
    for &id in nodes.keys() {
        if id != root && !parents.contains_key(&id) {
            let (l, c) = pos.node(id);
            return Err(TreeError::at(l, c, TreeErrorKind::Unreachable(id)));
        }
    }
    Ok(())
}

/// Renders a tree in canonical form: header, root line, nodes by ascending
/// id. Numbers use the shortest representation that parses back exactly.
pub fn emit_tree(tree: &ExplicitTree) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_HEADER} {FORMAT_VERSION}");
    let _ = writeln!(out, "root {}", tree.root);
    for (id, node) in &tree.nodes {
        match &node.kind {
            ExplicitKind::Terminal { payoff } => {
                let _ = write!(out, "{id} terminal {payoff}");
            }
            ExplicitKind::Decision { player } => {
                let _ = write!(out, "{id} decision {player}");
                for e in &node.edges {
                    let _ = write!(out, " {}={}", e.label, e.child);
                }
            }
            ExplicitKind::Chance => {
                let _ = write!(out, "{id} chance");
                for e in &node.edges {
                    let _ = write!(out, " {}@{}={}", e.label, e.prob.unwrap_or(0.0), e.child);
                }
            }
        }
        out.push('\n');
    }
    out
}

impl ExplicitTree {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&ExplicitNode> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &ExplicitNode)> {
        self.nodes.iter().map(|(&k, v)| (k, v))
    }

    pub fn max_id(&self) -> NodeId {
        self.nodes.keys().next_back().copied().unwrap_or(0)
    }

    /// Depth of every node (root = 0).
    pub fn depths(&self) -> HashMap<NodeId, u32> {
        let mut out = HashMap::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, 0u32)];
        while let Some((id, d)) = stack.pop() {
            out.insert(id, d);
            for e in &self.nodes[&id].edges {
                stack.push((e.child, d + 1));
            }
        }
        out
    }

    /// Node ids in pre-order (parent before children, edges in order).
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            for e in self.nodes[&id].edges.iter().rev() {
                stack.push(e.child);
            }
        }
        out
    }

    pub(crate) fn into_parts(self) -> (BTreeMap<NodeId, ExplicitNode>, NodeId) {
        (self.nodes, self.root)
    }

    /// Re-runs the structural checks on a tree assembled from parts.
    pub fn from_parts(nodes: BTreeMap<NodeId, ExplicitNode>, root: NodeId) -> Result<Self, TreeError> {
        check_tree(&nodes, root, &Positions::default())?;
        Ok(ExplicitTree { nodes, root })
    }
}

/// Incremental construction of trees in code. Ids are allocated in call
/// order, so children are usually created before their parents.
#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: BTreeMap<NodeId, ExplicitNode>,
    next: NodeId,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn add(&mut self, kind: ExplicitKind, edges: Vec<ExplicitEdge>) -> NodeId {
        let id = self.next;
        self.next += 1;
        self.nodes.insert(id, ExplicitNode { kind, edges });
        id
    }

    pub fn terminal(&mut self, payoff: f64) -> NodeId {
        self.add(ExplicitKind::Terminal { payoff }, Vec::new())
    }

    pub fn decision<S: Into<String>>(
        &mut self,
        player: Player,
        edges: impl IntoIterator<Item = (S, NodeId)>,
    ) -> NodeId {
        let edges =
            edges.into_iter().map(|(label, child)| ExplicitEdge { label: label.into(), prob: None, child }).collect();
        self.add(ExplicitKind::Decision { player }, edges)
    }

    pub fn chance<S: Into<String>>(&mut self, edges: impl IntoIterator<Item = (S, f64, NodeId)>) -> NodeId {
        let edges = edges
            .into_iter()
            .map(|(label, p, child)| ExplicitEdge { label: label.into(), prob: Some(p), child })
            .collect();
        self.add(ExplicitKind::Chance, edges)
    }

    pub fn finish(self, root: NodeId) -> Result<ExplicitTree, TreeError> {
        ExplicitTree::from_parts(self.nodes, root)
    }
}

/// A [`Game`] over an explicit tree. States are node ids; successors
/// follow edge order.
#[derive(Debug, Clone)]
pub struct ExplicitGame {
    name: String,
    tree: ExplicitTree,
    index: HashMap<NodeId, u32>,
    ids: Vec<NodeId>,
    depth: Vec<u32>,
    height: u32,
}

/// Wraps a checked tree as a game.
pub fn as_game(tree: ExplicitTree, name: impl Into<String>) -> ExplicitGame {
    let order = tree.preorder();
    let depths = tree.depths();
    let index: HashMap<NodeId, u32> = order.iter().enumerate().map(|(i, &id)| (id, i as u32)).collect();
    let depth: Vec<u32> = order.iter().map(|id| depths[id]).collect();
    let height = depth.iter().copied().max().unwrap_or(0);
    ExplicitGame { name: name.into(), tree, index, ids: order, depth, height }
}

impl ExplicitGame {
    pub fn tree(&self) -> &ExplicitTree {
        &self.tree
    }

    fn state_of(&self, id: NodeId) -> State {
        let i = self.index[&id];
        State::new(i.to_le_bytes().to_vec(), self.depth[i as usize])
    }

    fn lookup(&self, state: &State) -> Result<&ExplicitNode, GameError> {
        let corrupt = |reason: &str| GameError::CorruptState { game: self.name.clone(), reason: reason.into() };
        let bytes: [u8; 4] = state.data().try_into().map_err(|_| corrupt("bad encoding"))?;
        let i = u32::from_le_bytes(bytes) as usize;
        let id = *self.ids.get(i).ok_or_else(|| corrupt("node index out of range"))?;
        if self.depth[i] != state.ply() {
            return Err(corrupt("ply does not match node depth"));
        }
        Ok(&self.tree.nodes[&id])
    }
}

impl Game for ExplicitGame {
    fn name(&self) -> &str {
        &self.name
    }

    fn initial_state(&self) -> State {
        self.state_of(self.tree.root)
    }

    fn node_kind(&self, state: &State) -> Result<NodeKind, GameError> {
        let node = self.lookup(state)?;
        Ok(match node.kind {
            ExplicitKind::Decision { player } => NodeKind::Decision { player },
            ExplicitKind::Chance => {
                NodeKind::Chance { probs: node.edges.iter().map(|e| e.prob.unwrap_or(0.0)).collect() }
            }
            ExplicitKind::Terminal { payoff } => NodeKind::Terminal { payoff },
        })
    }

    fn successors(&self, state: &State) -> Result<Vec<Edge>, GameError> {
        let node = self.lookup(state)?;
        Ok(node
            .edges
            .iter()
            .map(|e| Edge { label: e.label.clone(), prob: e.prob, state: self.state_of(e.child) })
            .collect())
    }

    fn max_ply(&self) -> u32 {
        self.height
    }
}
