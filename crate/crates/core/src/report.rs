//! Per-game reports, comparison tables, depth sweeps, design experiments
//! and feature exports.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::game::Policy;
use crate::game::{count_states, Game, Player, Profile};
use crate::games::Params;
use crate::leverage::{
    luck_leverage_exact, luck_leverage_mc, skill_luck_index, skill_rollouts, skill_values, LeverageEstimate,
};
use crate::solvers::{best_response, expectiminimax, value_under_profile, Depth, Heuristic, SolveError};
use crate::stats::{bootstrap_ci, DEFAULT_LEVEL, DEFAULT_RESAMPLES};
use crate::transform::{apply_design, DesignKind, Direction, TransformError};
use crate::tree_io::{as_game, ExplicitTree};
use crate::volatility::{exact_volatility, integrated_volatility, PlyVariance, VolatilityReport};

/// Games with at most this many distinct states are solved exactly in
/// [`Mode::Auto`].
pub const AUTO_EXACT_STATES: u64 = 1_000_000;
/// Lookahead used by [`Mode::Auto`] when it falls back to depth-limited.
pub const AUTO_DEPTH: u32 = 4;
pub const DEFAULT_SIMS: u64 = 10_000;
/// Slack for direction verdicts on exact values.
pub const VERDICT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Mc,
    DepthLimited,
    Auto,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Mc => "mc",
            Mode::DepthLimited => "depth-limited",
            Mode::Auto => "auto",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Mode::Exact),
            "mc" => Ok(Mode::Mc),
            "depth-limited" => Ok(Mode::DepthLimited),
            "auto" => Ok(Mode::Auto),
            _ => Err(format!("unknown mode '{s}' (expected exact, mc, depth-limited or auto)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub mode: Mode,
    pub n: u64,
    pub seed: u64,
    /// Lookahead for depth-limited play; `None` means full depth in `mc`
    /// mode and [`AUTO_DEPTH`] in depth-limited mode.
    pub depth: Option<u32>,
    pub resamples: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            mode: Mode::Auto,
            n: DEFAULT_SIMS,
            seed: crate::rng::DEFAULT_SEED,
            depth: None,
            resamples: DEFAULT_RESAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolatilitySummary {
    pub sigma: f64,
    pub standard_error: f64,
    pub exact: bool,
    pub n_trajectories: Option<u64>,
    pub seed: Option<u64>,
    pub by_ply: Vec<PlyVariance>,
}

impl From<VolatilityReport> for VolatilitySummary {
    fn from(r: VolatilityReport) -> Self {
        VolatilitySummary {
            sigma: r.sigma_total,
            standard_error: r.standard_error,
            exact: r.exact,
            n_trajectories: (!r.exact).then_some(r.n_trajectories),
            seed: r.seed,
            by_ply: r.sigma_sq_by_ply,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameReport {
    pub game: String,
    pub params: Params,
    /// `exact`, `mc` or `depth-limited`.
    pub method: String,
    pub k: LeverageEstimate,
    pub l: LeverageEstimate,
    pub s: f64,
    pub degenerate: bool,
    pub sigma: VolatilitySummary,
    /// Root value under optimal play (exact) or at the lookahead depth.
    pub v_star: Option<f64>,
    pub v_best_vs_random: Option<f64>,
    pub v_random_vs_random: Option<f64>,
    /// Lookahead depth used for best responses, if limited.
    pub depth: Option<u32>,
    pub states: Option<u64>,
    pub seed: Option<u64>,
    pub warnings: Vec<String>,
    /// Wall-clock time; left unset unless timings were requested, so that
    /// serialised reports are reproducible byte for byte.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_secs")]
    pub elapsed: Option<Duration>,
}

fn ser_secs<S: serde::Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
    match d {
        Some(d) => s.serialize_f64(d.as_secs_f64()),
        None => s.serialize_none(),
    }
}

/// Computes K, L, S and Σ for one game.
pub fn analyze(
    game: &dyn Game,
    params: &Params,
    config: &AnalysisConfig,
    heuristic: &dyn Heuristic,
) -> Result<GameReport, SolveError> {
    let mut warnings = Vec::new();
    let mut states = None;
    let mode = match config.mode {
        Mode::Auto => match count_states(game, AUTO_EXACT_STATES)? {
            Some(n) => {
                states = Some(n);
                Mode::Exact
            }
            None => {
                warnings.push(format!("more than {AUTO_EXACT_STATES} states; using depth-limited mode"));
                Mode::DepthLimited
            }
        },
        m => m,
    };
    match mode {
        Mode::Exact => {
            let states = match states {
                Some(n) => Some(n),
                None => count_states(game, crate::solvers::DEFAULT_NODE_BUDGET)?,
            };
            analyze_exact(game, params, heuristic, states, warnings)
        }
        Mode::Mc => {
            analyze_sampled(game, params, config, config.depth.map_or(Depth::Full, Depth::Limited), heuristic, warnings)
        }
        Mode::DepthLimited | Mode::Auto => {
            let d = config.depth.unwrap_or(AUTO_DEPTH);
            analyze_sampled(game, params, config, Depth::Limited(d), heuristic, warnings)
        }
    }
}

fn analyze_exact(
    game: &dyn Game,
    params: &Params,
    heuristic: &dyn Heuristic,
    states: Option<u64>,
    warnings: Vec<String>,
) -> Result<GameReport, SolveError> {
    let v = skill_values(game, Player::P0)?;
    let k = LeverageEstimate::exact(v.best_vs_random - v.random_vs_random);
    let l = luck_leverage_exact(game, &Profile::uniform())?;
    let idx = skill_luck_index(k.clone(), l.clone())?;
    let sigma = exact_volatility(game, heuristic)?;
    let v_star = expectiminimax(game, &game.initial_state(), Depth::Full, heuristic, 0.0, 1.0)?;
    Ok(GameReport {
        game: game.name().to_string(),
        params: params.clone(),
        method: "exact".into(),
        k,
        l,
        s: idx.s,
        degenerate: idx.degenerate,
        sigma: sigma.into(),
        v_star: Some(v_star),
        v_best_vs_random: Some(v.best_vs_random),
        v_random_vs_random: Some(v.random_vs_random),
        depth: None,
        states,
        seed: None,
        warnings,
        elapsed: None,
    })
}

fn analyze_sampled(
    game: &dyn Game,
    params: &Params,
    config: &AnalysisConfig,
    depth: Depth,
    heuristic: &dyn Heuristic,
    warnings: Vec<String>,
) -> Result<GameReport, SolveError> {
    let (n, seed) = (config.n, config.seed);
    let runs = skill_rollouts(game, n, seed, depth, heuristic)?;
    let kb = bootstrap_ci(&runs.differences(), config.resamples, DEFAULT_LEVEL, seed)?;
    let k = runs.estimate().with_ci(kb.ci.0, kb.ci.1);
    let luck = luck_leverage_mc(game, &Profile::uniform(), n, seed, depth, heuristic)?;
    let lb = bootstrap_ci(&luck.samples, config.resamples, DEFAULT_LEVEL, seed)?;
    let l = luck.estimate.clone().with_ci(lb.ci.0, lb.ci.1);
    let idx = skill_luck_index(k.clone(), l.clone())?;
    let sigma = if n >= 2 {
        integrated_volatility(game, n, seed, depth, heuristic)?.into()
    } else {
        VolatilitySummary {
            sigma: 0.0,
            standard_error: 0.0,
            exact: false,
            n_trajectories: Some(n),
            seed: Some(seed),
            by_ply: Vec::new(),
        }
    };
    let v_star = match depth {
        Depth::Full => None,
        d => Some(expectiminimax(game, &game.initial_state(), d, heuristic, 0.0, 1.0)?),
    };
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    Ok(GameReport {
        game: game.name().to_string(),
        params: params.clone(),
        method: if depth == Depth::Full { "mc".into() } else { "depth-limited".into() },
        k,
        l,
        s: idx.s,
        degenerate: idx.degenerate,
        sigma,
        v_star,
        v_best_vs_random: Some(mean(&runs.best)),
        v_random_vs_random: Some(mean(&runs.random)),
        depth: match depth {
            Depth::Full => None,
            Depth::Limited(d) => Some(d),
        },
        states: None,
        seed: Some(seed),
        warnings,
        elapsed: None,
    })
}

/// One table row: a report or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub game: String,
    #[serde(flatten)]
    pub outcome: RowOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOutcome {
    Report(Box<GameReport>),
    Error(String),
}

/// Analyses every game (in parallel) and sorts rows by S descending, ties
/// by name; failed rows go last.
pub fn table(
    games: &[(String, Params, Box<dyn Game>)],
    config: &AnalysisConfig,
    heuristic: &dyn Heuristic,
) -> Vec<TableRow> {
    let mut rows: Vec<TableRow> = games
        .par_iter()
        .map(|(name, params, g)| TableRow {
            game: name.clone(),
            outcome: match analyze(g.as_ref(), params, config, heuristic) {
                Ok(r) => RowOutcome::Report(Box::new(r)),
                Err(e) => RowOutcome::Error(e.to_string()),
            },
        })
        .collect();
    rows.sort_by(|a, b| match (&a.outcome, &b.outcome) {
        (RowOutcome::Report(x), RowOutcome::Report(y)) => y.s.total_cmp(&x.s).then_with(|| a.game.cmp(&b.game)),
        (RowOutcome::Report(_), RowOutcome::Error(_)) => std::cmp::Ordering::Less,
        (RowOutcome::Error(_), RowOutcome::Report(_)) => std::cmp::Ordering::Greater,
        _ => a.game.cmp(&b.game),
    });
    rows
}

/// Three decimals, without a negative sign on zero.
pub fn fmt3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

pub const TABLE_HEADER: [&str; 6] = ["game", "K", "L", "S", "Sigma", "method"];

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER).expect("in-memory write");
    for row in rows {
        let record = match &row.outcome {
            RowOutcome::Report(r) => {
                vec![
                    row.game.clone(),
                    fmt3(r.k.point),
                    fmt3(r.l.point),
                    fmt3(r.s),
                    fmt3(r.sigma.sigma),
                    r.method.clone(),
                ]
            }
            RowOutcome::Error(e) => vec![
                row.game.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("error: {e}"),
            ],
        };
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn table_text(rows: &[TableRow]) -> String {
    let mut out = format!("{:<16} {:>7} {:>7} {:>7} {:>7}  {}\n", "game", "K", "L", "S", "Sigma", "method");
    for row in rows {
        match &row.outcome {
            RowOutcome::Report(r) => out.push_str(&format!(
                "{:<16} {:>7} {:>7} {:>7} {:>7}  {}\n",
                row.game,
                fmt3(r.k.point),
                fmt3(r.l.point),
                fmt3(r.s),
                fmt3(r.sigma.sigma),
                r.method
            )),
            RowOutcome::Error(e) => out.push_str(&format!("{:<16} error: {e}\n", row.game)),
        }
    }
    out
}

/// Feature matrix for external plotting, one row per successful report.
pub fn export_features(reports: &[GameReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["game", "K", "L", "S", "Sigma"]).expect("in-memory write");
    for r in reports {
        w.write_record([r.game.clone(), fmt3(r.k.point), fmt3(r.l.point), fmt3(r.s), fmt3(r.sigma.sigma)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// `None` marks the exact row.
    pub depth: Option<u32>,
    pub v_star: f64,
    pub k: f64,
}

/// Depth-limited root value and skill leverage at each depth, followed by
/// the exact row. K at depth d is the exact value of the depth-d lookahead
/// policy against a uniform opponent, minus the uniform-vs-uniform value.
pub fn depth_sweep(game: &dyn Game, depths: &[u32], heuristic: &dyn Heuristic) -> Result<Vec<SweepRow>, SolveError> {
    if depths.windows(2).any(|w| w[0] > w[1]) {
        return Err(SolveError::Contract("depths must be nondecreasing".into()));
    }
    let s0 = game.initial_state();
    let uniform = Policy::UniformRandom;
    let base = skill_values(game, Player::P0)?;
    let mut rows = Vec::with_capacity(depths.len() + 1);
    for &d in depths {
        let depth = Depth::Limited(d);
        let br = best_response(game, &uniform, Player::P0, depth, heuristic)?;
        let v = value_under_profile(game, &s0, &br, &uniform)?;
        rows.push(SweepRow {
            depth: Some(d),
            v_star: expectiminimax(game, &s0, depth, heuristic, 0.0, 1.0)?,
            k: LeverageEstimate::exact(v - base.random_vs_random).point,
        });
    }
    rows.push(SweepRow {
        depth: None,
        v_star: expectiminimax(game, &s0, Depth::Full, heuristic, 0.0, 1.0)?,
        k: LeverageEstimate::exact(base.best_vs_random - base.random_vs_random).point,
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub predicted: Direction,
    pub before: f64,
    pub after: f64,
    /// Whether the change agrees with the prediction (weakly).
    pub holds: bool,
}

fn verdict(predicted: Direction, before: f64, after: f64) -> Verdict {
    let holds = match predicted {
        Direction::Increase => after >= before - VERDICT_TOLERANCE,
        Direction::Decrease => after <= before + VERDICT_TOLERANCE,
        Direction::Variable => true,
    };
    Verdict { predicted, before, after, holds }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignExperiment {
    pub base: String,
    pub kind: DesignKind,
    pub seed: u64,
    pub before: GameReport,
    pub after: GameReport,
    pub s: Verdict,
    pub sigma: Verdict,
}

#[derive(Debug, thiserror::Error)]
pub enum DesignError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Applies a design change to `base` and compares exact metrics before and
/// after. The seed is recorded only; every quantity is exact.
pub fn design_experiment(
    base: &ExplicitTree,
    name: &str,
    kind: DesignKind,
    seed: u64,
    heuristic: &dyn Heuristic,
) -> Result<DesignExperiment, DesignError> {
    let changed = apply_design(base, kind)?;
    let config = AnalysisConfig { mode: Mode::Exact, seed, ..AnalysisConfig::default() };
    let before = analyze(&as_game(base.clone(), name), &Params::new(), &config, heuristic)?;
    let after_name = format!("{name}+{kind}");
    let after = analyze(&as_game(changed, after_name), &Params::new(), &config, heuristic)?;
    let (ps, pv) = kind.predicted();
    Ok(DesignExperiment {
        base: name.to_string(),
        kind,
        seed,
        s: verdict(ps, before.s, after.s),
        sigma: verdict(pv, before.sigma.sigma, after.sigma.sigma),
        before,
        after,
    })
}
