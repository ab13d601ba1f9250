//! Skill leverage K, luck leverage L and the Skill–Luck Index S.
//!
//! K is the value a best-responding Player 0 gains over uniform play, both
//! against a uniform Player 1. L is the spread between nature-favourable and
//! nature-adversarial evaluations of a fixed reference profile, where the
//! reference profile is averaged at decision nodes (max-of-expectation).

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::game::{node_kind, Game, NodeKind, Player, Policy, Profile, State, StateKey};
use crate::rng::{sample_index, stream};
use crate::solvers::{
    best_response, response_backup, ActionRule, Backup, CacheMode, ChanceRule, ConstantHeuristic, DecisionRule, Depth,
    Heuristic, SolveError,
};

/// Values within this distance of zero on exact paths are reported as zero.
pub const EXACT_ZERO_TOLERANCE: f64 = 1e-12;

/// Per-rollout node cap for the nature-enumeration diagnostic.
pub const ENUMERATION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo { n: u64, seed: u64 },
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo { .. } => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeverageEstimate {
    pub point: f64,
    pub method: Method,
    pub standard_error: f64,
    pub ci95: Option<(f64, f64)>,
    /// Value before clamping at zero.
    pub raw: f64,
}

impl LeverageEstimate {
    pub fn exact(raw: f64) -> Self {
        let point = if raw.abs() <= EXACT_ZERO_TOLERANCE { 0.0 } else { raw.max(0.0) };
        LeverageEstimate { point, method: Method::Exact, standard_error: 0.0, ci95: None, raw }
    }

    pub fn monte_carlo(raw: f64, standard_error: f64, n: u64, seed: u64) -> Self {
        LeverageEstimate {
            point: raw.max(0.0),
            method: Method::MonteCarlo { n, seed },
            standard_error,
            ci95: None,
            raw,
        }
    }

    /// Attaches a CI, clamped at zero and widened to contain the point.
    pub fn with_ci(mut self, lo: f64, hi: f64) -> Self {
        let lo = lo.max(0.0).min(self.point);
        let hi = hi.max(0.0).max(self.point);
        self.ci95 = Some((lo, hi));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkillLuckIndex {
    pub s: f64,
    pub k: LeverageEstimate,
    pub l: LeverageEstimate,
    pub degenerate: bool,
}

/// S = (K − L)/(K + L), or 0 (degenerate) when both are zero.
///
/// S is exactly +1 iff L = 0 and exactly −1 iff K = 0: when both are
/// positive the quotient is kept strictly inside (−1, 1) even if rounding
/// would land on an endpoint.
pub fn skill_luck_index(k: LeverageEstimate, l: LeverageEstimate) -> Result<SkillLuckIndex, SolveError> {
    let (kp, lp) = (k.point, l.point);
    if !(kp >= 0.0) || !(lp >= 0.0) {
        return Err(SolveError::Contract(format!("leverage must be non-negative, got K = {kp}, L = {lp}")));
    }
    let (s, degenerate) = if kp == 0.0 && lp == 0.0 {
        (0.0, true)
    } else if lp == 0.0 {
        (1.0, false)
    } else if kp == 0.0 {
        (-1.0, false)
    } else {
        let inside = 1.0 - f64::EPSILON / 2.0;
        (((kp - lp) / (kp + lp)).clamp(-inside, inside), false)
    };
    Ok(SkillLuckIndex { s, k, l, degenerate })
}

/// The two values K is the difference of.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkillValues {
    /// V under (BR(uniform), uniform) for the optimising player.
    pub best_vs_random: f64,
    pub random_vs_random: f64,
}

/// Exact values for the asymmetric skill leverage of `player`, measured on
/// that player's own payoff scale.
pub fn skill_values(game: &dyn Game, player: Player) -> Result<SkillValues, SolveError> {
    let h = ConstantHeuristic::default();
    let u = Policy::UniformRandom;
    let s0 = game.initial_state();
    let best = response_backup(game, player, &u, &h).value(&s0, Depth::Full)?;
    let random = Backup::new(
        game,
        [DecisionRule::Weighted(&u), DecisionRule::Weighted(&u)],
        ChanceRule::Expect,
        &h,
        CacheMode::Profile("uniform/uniform".into()),
    )
    .value(&s0, Depth::Full)?;
    Ok(match player {
        Player::P0 => SkillValues { best_vs_random: best, random_vs_random: random },
        Player::P1 => SkillValues { best_vs_random: 1.0 - best, random_vs_random: 1.0 - random },
    })
}

pub fn skill_leverage_exact(game: &dyn Game) -> Result<LeverageEstimate, SolveError> {
    skill_leverage_for_player(game, Player::P0)
}

/// K with `player` optimising and the other player uniform.
pub fn skill_leverage_for_player(game: &dyn Game, player: Player) -> Result<LeverageEstimate, SolveError> {
    let v = skill_values(game, player)?;
    Ok(LeverageEstimate::exact(v.best_vs_random - v.random_vs_random))
}

/// Outcome of one rollout from `state` with per-player rules.
pub fn rollout<R: rand::Rng + ?Sized>(
    game: &dyn Game,
    state: &State,
    rules: [&dyn ActionRule; 2],
    rng: &mut R,
) -> Result<f64, SolveError> {
    let mut s = state.clone();
    loop {
        let resolved = node_kind(game, &s)?;
        let edges = match resolved.kind {
            NodeKind::Terminal { payoff } => return Ok(payoff),
            _ => game.successors(&s)?,
        };
        let i = match resolved.kind {
            NodeKind::Decision { player } => {
                let d = rules[player.index()].distribution(game, &s, player, edges.len())?;
                sample_index(rng, &d)
            }
            NodeKind::Chance { ref probs } => sample_index(rng, probs),
            NodeKind::Terminal { .. } => unreachable!(),
        };
        s = edges.into_iter().nth(i).expect("sampled index in range").state;
    }
}

/// Per-rollout payoffs of the two arms of the skill estimator. Arm `i` of
/// both vectors used the same random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillRollouts {
    pub best: Vec<f64>,
    pub random: Vec<f64>,
    pub seed: u64,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

impl SkillRollouts {
    pub fn n(&self) -> u64 {
        self.best.len() as u64
    }

    /// Paired per-rollout differences.
    pub fn differences(&self) -> Vec<f64> {
        self.best.iter().zip(&self.random).map(|(a, b)| a - b).collect()
    }

    /// Win-rate difference with a binomial standard error propagated from
    /// both arms.
    pub fn estimate(&self) -> LeverageEstimate {
        let n = self.best.len() as f64;
        let pa = mean(&self.best);
        let pb = mean(&self.random);
        let se = ((pa * (1.0 - pa)).max(0.0) / n + (pb * (1.0 - pb)).max(0.0) / n).sqrt();
        LeverageEstimate::monte_carlo(pa - pb, se, self.n(), self.seed)
    }

    /// The first `n` rollouts of this run (identical to a run with `n`).
    pub fn prefix(&self, n: usize) -> SkillRollouts {
        SkillRollouts { best: self.best[..n].to_vec(), random: self.random[..n].to_vec(), seed: self.seed }
    }
}

/// Runs `n` paired rollouts: Player 0 best-responding (exact table for
/// [`Depth::Full`], lookahead otherwise) vs uniform, and uniform vs uniform.
pub fn skill_rollouts(
    game: &dyn Game,
    n: u64,
    seed: u64,
    depth: Depth,
    heuristic: &dyn Heuristic,
) -> Result<SkillRollouts, SolveError> {
    if n == 0 {
        return Err(SolveError::Contract("n_sims must be at least 1".into()));
    }
    let u = Policy::UniformRandom;
    let br = best_response(game, &u, Player::P0, depth, heuristic)?;
    let s0 = game.initial_state();
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = rollout(game, &s0, [&br, &u], &mut stream(seed, i))?;
            let b = rollout(game, &s0, [&u, &u], &mut stream(seed, i))?;
            Ok((a, b))
        })
        .collect::<Result<_, SolveError>>()?;
    let (best, random) = pairs.into_iter().unzip();
    Ok(SkillRollouts { best, random, seed })
}

pub fn skill_leverage_mc(
    game: &dyn Game,
    n_sims: u64,
    seed: u64,
    depth: Depth,
    heuristic: &dyn Heuristic,
) -> Result<LeverageEstimate, SolveError> {
    Ok(skill_rollouts(game, n_sims, seed, depth, heuristic)?.estimate())
}

/// Exact luck-max and luck-min values of the reference profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LuckValues {
    pub luck_max: f64,
    pub luck_min: f64,
}

fn luck_backup<'a>(
    game: &'a dyn Game,
    reference: &'a Profile,
    chance: ChanceRule,
    heuristic: &'a dyn Heuristic,
) -> Backup<'a> {
    let tag = format!("{}/{}", reference.policies[0].kind_name(), reference.policies[1].kind_name());
    let mode = match chance {
        ChanceRule::Max => CacheMode::LuckMax(tag),
        _ => CacheMode::LuckMin(tag),
    };
    Backup::new(
        game,
        [DecisionRule::Weighted(&reference.policies[0]), DecisionRule::Weighted(&reference.policies[1])],
        chance,
        heuristic,
        mode,
    )
}

pub fn luck_values(game: &dyn Game, reference: &Profile) -> Result<LuckValues, SolveError> {
    let h = ConstantHeuristic::default();
    let s0 = game.initial_state();
    Ok(LuckValues {
        luck_max: luck_backup(game, reference, ChanceRule::Max, &h).value(&s0, Depth::Full)?,
        luck_min: luck_backup(game, reference, ChanceRule::Min, &h).value(&s0, Depth::Full)?,
    })
}

pub fn luck_leverage_exact(game: &dyn Game, reference: &Profile) -> Result<LeverageEstimate, SolveError> {
    let v = luck_values(game, reference)?;
    Ok(LeverageEstimate::exact(v.luck_max - v.luck_min))
}

/// Monte-Carlo luck leverage and its per-rollout diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LuckMc {
    pub estimate: LeverageEstimate,
    /// Per-rollout headline samples (mean converges to the exact L).
    #[serde(skip)]
    pub samples: Vec<f64>,
    /// Mean over rollouts of the full nature enumeration of each sampled
    /// policy realisation (expectation-of-max; at least the exact L).
    pub realisation_mean: f64,
    pub realisation_se: f64,
}

/// Estimates L by rollouts.
///
/// Each rollout fixes one deterministic realisation of the reference
/// profile (an action per decision node, drawn on first visit). The
/// headline sample walks that realisation twice, letting nature pick the
/// child with the highest (resp. lowest) luck value of the reference
/// profile, and records the payoff difference; its expectation is the exact
/// L. The realisation is also evaluated by full enumeration of chance
/// children, which is reported as a diagnostic.
pub fn luck_leverage_mc(
    game: &dyn Game,
    reference: &Profile,
    n_sims: u64,
    seed: u64,
    depth: Depth,
    heuristic: &dyn Heuristic,
) -> Result<LuckMc, SolveError> {
    if n_sims == 0 {
        return Err(SolveError::Contract("n_sims must be at least 1".into()));
    }
    let hi = luck_backup(game, reference, ChanceRule::Max, heuristic);
    let lo = luck_backup(game, reference, ChanceRule::Min, heuristic);
    let s0 = game.initial_state();
    let rows: Vec<(f64, f64)> = (0..n_sims)
        .into_par_iter()
        .map(|i| {
            let mut real = Realisation { reference, rng: stream(seed, i), actions: HashMap::new() };
            let up = nature_walk(game, &s0, &mut real, &hi, depth, ChanceRule::Max)?;
            let down = nature_walk(game, &s0, &mut real, &lo, depth, ChanceRule::Min)?;
            let mut budget = ENUMERATION_BUDGET;
            let mut memo = HashMap::new();
            let e_up = enumerate_nature(game, &s0, &mut real, ChanceRule::Max, &mut memo, &mut budget)?;
            memo.clear();
            let e_down = enumerate_nature(game, &s0, &mut real, ChanceRule::Min, &mut memo, &mut budget)?;
            Ok((up - down, e_up - e_down))
        })
        .collect::<Result<_, SolveError>>()?;
    let n = n_sims as f64;
    let (samples, diag): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let m = mean(&samples);
    let se = (sample_variance(&samples) / n).sqrt();
    let dm = mean(&diag);
    let dse = (sample_variance(&diag) / n).sqrt();
    Ok(LuckMc {
        estimate: LeverageEstimate::monte_carlo(m, se, n_sims, seed),
        samples,
        realisation_mean: dm,
        realisation_se: dse,
    })
}

pub(crate) fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

struct Realisation<'a> {
    reference: &'a Profile,
    rng: rand_chacha::ChaCha8Rng,
    actions: HashMap<StateKey, usize>,
}

impl Realisation<'_> {
    fn action(&mut self, game: &dyn Game, state: &State, player: Player, n: usize) -> Result<usize, SolveError> {
        if let Some(&a) = self.actions.get(&state.key()) {
            return Ok(a);
        }
        let d = ActionRule::distribution(self.reference.policy(player), game, state, player, n)?;
        let a = sample_index(&mut self.rng, &d);
        self.actions.insert(state.key(), a);
        Ok(a)
    }
}

fn nature_walk(
    game: &dyn Game,
    start: &State,
    real: &mut Realisation<'_>,
    values: &Backup<'_>,
    depth: Depth,
    rule: ChanceRule,
) -> Result<f64, SolveError> {
    let mut s = start.clone();
    loop {
        let resolved = node_kind(game, &s)?;
        if let NodeKind::Terminal { payoff } = resolved.kind {
            if resolved.truncated && depth == Depth::Full {
                return Err(SolveError::Truncated { game: game.name().to_string(), ply: s.ply() });
            }
            return Ok(payoff);
        }
        let edges = game.successors(&s)?;
        let i = match resolved.kind {
            NodeKind::Decision { player } => real.action(game, &s, player, edges.len())?,
            _ => {
                // In depth-limited mode the horizon is re-centred at every
                // chance node, so the walk itself always reaches a terminal.
                let vals: Vec<f64> = edges.iter().map(|e| values.value(&e.state, depth)).collect::<Result<_, _>>()?;
                crate::solvers::first_best(&vals, rule == ChanceRule::Min)
            }
        };
        s = edges.into_iter().nth(i).expect("index in range").state;
    }
}

// Algorithm-3 style evaluation of one fixed realisation: follow the chosen
// action at decision nodes, take max/min over every chance child.
fn enumerate_nature(
    game: &dyn Game,
    s: &State,
    real: &mut Realisation<'_>,
    rule: ChanceRule,
    memo: &mut HashMap<StateKey, f64>,
    budget: &mut u64,
) -> Result<f64, SolveError> {
    let resolved = node_kind(game, s)?;
    if let NodeKind::Terminal { payoff } = resolved.kind {
        return Ok(payoff);
    }
    if let Some(&v) = memo.get(&s.key()) {
        return Ok(v);
    }
    if *budget == 0 {
        return Err(SolveError::Budget {
            game: game.name().to_string(),
            expanded: ENUMERATION_BUDGET,
            limit: ENUMERATION_BUDGET,
        });
    }
    *budget -= 1;
    let edges = game.successors(s)?;
    let v = match resolved.kind {
        NodeKind::Decision { player } => {
            let a = real.action(game, s, player, edges.len())?;
            enumerate_nature(game, &edges[a].state, real, rule, memo, budget)?
        }
        _ => {
            let mut acc = if rule == ChanceRule::Max { f64::NEG_INFINITY } else { f64::INFINITY };
            for e in &edges {
                let v = enumerate_nature(game, &e.state, real, rule, memo, budget)?;
                acc = if rule == ChanceRule::Max { acc.max(v) } else { acc.min(v) };
            }
            acc
        }
    };
    memo.insert(s.key(), v);
    Ok(v)
}
