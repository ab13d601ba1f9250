//! Per-ply volatility σ_t² and integrated volatility Σ along trajectories
//! where Player 0 best-responds to a uniform Player 1 and chance follows the
//! rules.
//!
//! Only chance transitions contribute, and only once some decision node has
//! been passed: chance resolved before the first decision sets the starting
//! state. A ply's σ_t² is the variance of ΔV_t = v_{t+1} − v_t over the
//! trajectories whose step at that ply qualifies.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::game::{node_kind, Game, NodeKind, Player, Policy, State, StateKey};
use crate::rng::{sample_index, stream};
use crate::solvers::{best_response, first_best, response_backup, ActionRule, Backup, Depth, Heuristic, SolveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Decision(Player),
    Chance,
    Terminal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: State,
    pub kind: StepKind,
    /// Index of the edge taken; `None` at the terminal step.
    pub edge: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub payoff: f64,
}

impl Trajectory {
    /// (ply, ΔV) for every chance step that counts towards volatility.
    pub fn in_play_chance_deltas(&self) -> Vec<(u32, f64)> {
        let mut out = Vec::new();
        let mut decided = false;
        for w in self.steps.windows(2) {
            match w[0].kind {
                StepKind::Decision(_) => decided = true,
                StepKind::Chance if decided => out.push((w[0].state.ply(), w[1].value - w[0].value)),
                _ => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlyVariance {
    pub ply: u32,
    pub variance: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolatilityReport {
    pub sigma_sq_by_ply: Vec<PlyVariance>,
    pub sigma_total: f64,
    /// Delta-method standard error of `sigma_total` (0 in exact mode).
    pub standard_error: f64,
    /// 0 in exact mode.
    pub n_trajectories: u64,
    pub seed: Option<u64>,
    pub exact: bool,
}

// (P0 best response, P1 uniform) with v_t read from the response backup.
struct Walker<'a> {
    game: &'a dyn Game,
    br: crate::solvers::BestResponse<'a>,
    uniform: Policy,
    values: Backup<'a>,
    depth: Depth,
}

impl<'a> Walker<'a> {
    fn new(
        game: &'a dyn Game,
        depth: Depth,
        heuristic: &'a dyn Heuristic,
        uniform: &'a Policy,
    ) -> Result<Self, SolveError> {
        Ok(Walker {
            game,
            br: best_response(game, uniform, Player::P0, depth, heuristic)?,
            uniform: Policy::UniformRandom,
            values: response_backup(game, Player::P0, uniform, heuristic),
            depth,
        })
    }

    fn walk(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Trajectory, SolveError> {
        let mut steps = Vec::new();
        let mut s = self.game.initial_state();
        loop {
            let resolved = node_kind(self.game, &s)?;
            let value = match resolved.kind {
                NodeKind::Terminal { payoff } => payoff,
                _ => self.values.value(&s, self.depth)?,
            };
            let edges = match resolved.kind {
                NodeKind::Terminal { payoff } => {
                    steps.push(Step { state: s, kind: StepKind::Terminal, edge: None, value });
                    return Ok(Trajectory { steps, payoff });
                }
                _ => self.game.successors(&s)?,
            };
            let (kind, i) = match resolved.kind {
                NodeKind::Decision { player } => {
                    let rule: &dyn ActionRule = match player {
                        Player::P0 => &self.br,
                        Player::P1 => &self.uniform,
                    };
                    let d = rule.distribution(self.game, &s, player, edges.len())?;
                    (StepKind::Decision(player), sample_index(rng, &d))
                }
                NodeKind::Chance { ref probs } => (StepKind::Chance, sample_index(rng, probs)),
                NodeKind::Terminal { .. } => unreachable!(),
            };
            let next = edges.into_iter().nth(i).expect("index in range").state;
            steps.push(Step { state: s, kind, edge: Some(i), value });
            s = next;
        }
    }
}

/// Samples `n` trajectories; trajectory `i` uses random stream `(seed, i)`.
pub fn sample_trajectories(
    game: &dyn Game,
    n: u64,
    seed: u64,
    depth: Depth,
    heuristic: &dyn Heuristic,
) -> Result<Vec<Trajectory>, SolveError> {
    if n == 0 {
        return Err(SolveError::Contract("need at least one trajectory".into()));
    }
    let uniform = Policy::UniformRandom;
    let walker = Walker::new(game, depth, heuristic, &uniform)?;
    (0..n).into_par_iter().map(|i| walker.walk(&mut stream(seed, i))).collect()
}

/// Monte-Carlo Σ from `n` sampled trajectories.
pub fn integrated_volatility(
    game: &dyn Game,
    n: u64,
    seed: u64,
    depth: Depth,
    heuristic: &dyn Heuristic,
) -> Result<VolatilityReport, SolveError> {
    if n < 2 {
        return Err(SolveError::Contract("integrated volatility needs at least 2 trajectories".into()));
    }
    let uniform = Policy::UniformRandom;
    let walker = Walker::new(game, depth, heuristic, &uniform)?;
    let per_traj: Vec<Vec<(u32, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| walker.walk(&mut stream(seed, i)).map(|t| t.in_play_chance_deltas()))
        .collect::<Result<_, _>>()?;

    let mut buckets: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for deltas in &per_traj {
        for &(ply, d) in deltas {
            buckets.entry(ply).or_default().push(d);
        }
    }
    let mut by_ply = Vec::with_capacity(buckets.len());
    let mut total = 0.0;
    let mut se_sq = 0.0;
    for (ply, xs) in buckets {
        let m = xs.len() as u64;
        let (var, var_of_var) = if m < 2 {
            (0.0, 0.0)
        } else {
            let mf = m as f64;
            let mean = xs.iter().sum::<f64>() / mf;
            let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
            let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / mf;
            let var = m2 / (mf - 1.0);
            let pop = m2 / mf;
            (var, ((m4 - pop * pop) / mf).max(0.0))
        };
        total += var;
        se_sq += var_of_var;
        by_ply.push(PlyVariance { ply, variance: var, samples: m });
    }
    Ok(VolatilityReport {
        sigma_sq_by_ply: by_ply,
        sigma_total: total,
        standard_error: se_sq.sqrt(),
        n_trajectories: n,
        seed: Some(seed),
        exact: false,
    })
}

// Sparse per-ply moments of qualifying ΔV, weighted by probability mass.
type PlyMoments = Vec<(u32, [f64; 3])>;

fn add_scaled(into: &mut BTreeMap<u32, [f64; 3]>, from: &PlyMoments, w: f64) {
    for &(ply, m) in from {
        let e = into.entry(ply).or_insert([0.0; 3]);
        e[0] += w * m[0];
        e[1] += w * m[1];
        e[2] += w * m[2];
    }
}

/// Exact Σ by enumerating the trajectory distribution (memoised per state).
pub fn exact_volatility(game: &dyn Game, heuristic: &dyn Heuristic) -> Result<VolatilityReport, SolveError> {
    let uniform = Policy::UniformRandom;
    let values = response_backup(game, Player::P0, &uniform, heuristic);
    let mut memo: HashMap<(StateKey, bool), PlyMoments> = HashMap::new();
    let root = moments(game, &values, &game.initial_state(), true, &mut memo)?;
    let mut by_ply = Vec::new();
    let mut total = 0.0;
    for (ply, [mass, s1, s2]) in root {
        let variance = if mass > 0.0 {
            let mean = s1 / mass;
            (s2 / mass - mean * mean).max(0.0)
        } else {
            0.0
        };
        total += variance;
        by_ply.push(PlyVariance { ply, variance, samples: 0 });
    }
    Ok(VolatilityReport {
        sigma_sq_by_ply: by_ply,
        sigma_total: total,
        standard_error: 0.0,
        n_trajectories: 0,
        seed: None,
        exact: true,
    })
}

fn moments(
    game: &dyn Game,
    values: &Backup<'_>,
    s: &State,
    pre_play: bool,
    memo: &mut HashMap<(StateKey, bool), PlyMoments>,
) -> Result<PlyMoments, SolveError> {
    let resolved = node_kind(game, s)?;
    if resolved.truncated {
        return Err(SolveError::Truncated { game: game.name().to_string(), ply: s.ply() });
    }
    if resolved.kind.is_terminal() {
        return Ok(Vec::new());
    }
    if let Some(m) = memo.get(&(s.key(), pre_play)) {
        return Ok(m.clone());
    }
    let edges = game.successors(s)?;
    let mut acc: BTreeMap<u32, [f64; 3]> = BTreeMap::new();
    match resolved.kind {
        NodeKind::Decision { player: Player::P0 } => {
            let vals = values.child_values(s, Depth::Full)?;
            let i = first_best(&vals, false);
            let child = moments(game, values, &edges[i].state, false, memo)?;
            add_scaled(&mut acc, &child, 1.0);
        }
        NodeKind::Decision { player: Player::P1 } => {
            let w = 1.0 / edges.len() as f64;
            for e in &edges {
                let child = moments(game, values, &e.state, false, memo)?;
                add_scaled(&mut acc, &child, w);
            }
        }
        NodeKind::Chance { .. } => {
            let v = values.value(s, Depth::Full)?;
            for e in &edges {
                let p = e.prob.unwrap_or(0.0);
                let child = moments(game, values, &e.state, pre_play, memo)?;
                add_scaled(&mut acc, &child, p);
                if !pre_play {
                    let d = values.value(&e.state, Depth::Full)? - v;
                    let entry = acc.entry(s.ply()).or_insert([0.0; 3]);
                    entry[0] += p;
                    entry[1] += p * d;
                    entry[2] += p * d * d;
                }
            }
        }
        NodeKind::Terminal { .. } => unreachable!(),
    }
    let out: PlyMoments = acc.into_iter().collect();
    memo.insert((s.key(), pre_play), out.clone());
    Ok(out)
}
