//! Built-in catalog of desk-scale games.

mod connect;
mod dice_race;
mod nim;
mod tictactoe;
pub mod trees;
mod war;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use connect::ConnectK;
pub use dice_race::DiceRace;
pub use nim::Nim;
pub use tictactoe::TicTacToe;
pub use war::WarSmall;

use crate::game::{Game, GameError};
use crate::tree_io::as_game;

pub type Params = BTreeMap<String, String>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("unknown game '{0}'")]
    UnknownGame(String),
    #[error(transparent)]
    InvalidParameter(#[from] GameError),
}

/// How an expected value is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Follows by hand from the rules.
    Analytic,
    /// Fixed by this crate's exhaustive solver.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Expected {
    pub value: f64,
    pub basis: Basis,
}

/// Known metric values for a game at its default parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ExpectedMetrics {
    pub k: Option<Expected>,
    pub l: Option<Expected>,
    pub s: Option<Expected>,
    pub sigma: Option<Expected>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

type Factory = fn(&Params) -> Result<Box<dyn Game>, GameError>;

#[derive(Clone, Serialize)]
pub struct GameSpec {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
    pub expected: ExpectedMetrics,
    #[serde(skip)]
    factory: Factory,
}

impl std::fmt::Debug for GameSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GameSpec").field("name", &self.name).field("params", &self.params).finish()
    }
}

impl GameSpec {
    /// Builds the game, filling unset parameters with defaults.
    pub fn build(&self, params: &Params) -> Result<Box<dyn Game>, GameError> {
        for key in params.keys() {
            if !self.params.iter().any(|p| p.name == key) {
                return Err(GameError::InvalidParameter {
                    game: self.name.into(),
                    reason: format!("unknown parameter '{key}'"),
                });
            }
        }
        let mut full = Params::new();
        for p in self.params {
            let v = params.get(p.name).map(String::as_str).unwrap_or(p.default);
            full.insert(p.name.to_string(), v.to_string());
        }
        (self.factory)(&full)
    }
}

fn a(value: f64) -> Option<Expected> {
    Some(Expected { value, basis: Basis::Analytic })
}

fn x(value: f64) -> Option<Expected> {
    Some(Expected { value, basis: Basis::Exhaustive })
}

fn parse<T: std::str::FromStr>(game: &str, params: &Params, key: &str) -> Result<T, GameError> {
    let raw = &params[key];
    raw.trim().parse().map_err(|_| GameError::InvalidParameter {
        game: game.into(),
        reason: format!("parameter '{key}' has invalid value '{raw}'"),
    })
}

fn parse_heaps(params: &Params) -> Result<Vec<u8>, GameError> {
    params["heaps"]
        .split(',')
        .map(|h| {
            h.trim().parse::<u8>().map_err(|_| GameError::InvalidParameter {
                game: "nim".into(),
                reason: format!("heap '{h}' is not a small non-negative integer"),
            })
        })
        .collect()
}

fn tree_game(tree: crate::tree_io::ExplicitTree, name: &str) -> Result<Box<dyn Game>, GameError> {
    Ok(Box::new(as_game(tree, name)))
}

/// The catalog in its fixed listing order.
pub fn list_games() -> Vec<GameSpec> {
    vec![
        GameSpec {
            name: "coin_toss",
            summary: "one fair flip decides the winner",
            params: &[],
            expected: ExpectedMetrics { k: a(0.0), l: a(1.0), s: a(-1.0), sigma: a(0.0) },
            factory: |_| tree_game(trees::coin_toss(), "coin_toss"),
        },
        GameSpec {
            name: "toy",
            summary: "coin flip, then on tails a win/lose choice for Player 0",
            params: &[],
            expected: ExpectedMetrics { k: a(0.25), l: a(0.5), s: a(-1.0 / 3.0), sigma: a(0.0) },
            factory: |_| tree_game(trees::toy(), "toy"),
        },
        GameSpec {
            name: "toy_pure_luck",
            summary: "toy game with the choice collapsed to its uniform-play value",
            params: &[],
            expected: ExpectedMetrics { k: a(0.0), l: a(0.5), s: a(-1.0), sigma: a(0.0) },
            factory: |_| tree_game(trees::toy_pure_luck(), "toy_pure_luck"),
        },
        GameSpec {
            name: "toy_pure_skill",
            summary: "toy game with the flip replaced by a Player 0 choice",
            params: &[],
            expected: ExpectedMetrics { k: a(0.25), l: a(0.0), s: a(1.0), sigma: a(0.0) },
            factory: |_| tree_game(trees::toy_pure_skill(), "toy_pure_skill"),
        },
        GameSpec {
            name: "lottery_choice",
            summary: "choose a 0.8 or a 0.2 lottery",
            params: &[],
            expected: ExpectedMetrics { k: a(0.3), l: a(1.0), s: a(-0.7 / 1.3), sigma: a(0.16) },
            factory: |_| tree_game(trees::lottery_choice(), "lottery_choice"),
        },
        GameSpec {
            name: "tictactoe",
            summary: "3x3 noughts and crosses, X (Player 0) first",
            params: &[],
            expected: ExpectedMetrics { k: x(TICTACTOE_K), l: a(0.0), s: a(1.0), sigma: a(0.0) },
            factory: |_| Ok(Box::new(TicTacToe)),
        },
        GameSpec {
            name: "nim",
            summary: "normal-play Nim, last to take wins",
            params: &[ParamSpec { name: "heaps", default: "3,4,5", help: "comma-separated heap sizes" }],
            expected: ExpectedMetrics { k: None, l: a(0.0), s: a(1.0), sigma: a(0.0) },
            factory: |p| Ok(Box::new(Nim::new(&parse_heaps(p)?)?)),
        },
        GameSpec {
            name: "connect_k",
            summary: "gravity k-in-a-row",
            params: &[
                ParamSpec { name: "w", default: "4", help: "board width" },
                ParamSpec { name: "h", default: "4", help: "board height" },
                ParamSpec { name: "k", default: "3", help: "line length to win" },
            ],
            expected: ExpectedMetrics { k: None, l: a(0.0), s: a(1.0), sigma: a(0.0) },
            factory: |p| {
                Ok(Box::new(ConnectK::new(
                    parse("connect_k", p, "w")?,
                    parse("connect_k", p, "h")?,
                    parse("connect_k", p, "k")?,
                )?))
            },
        },
        GameSpec {
            name: "war_small",
            summary: "War with a small deck and the deal as pre-play chance",
            params: &[ParamSpec { name: "deck", default: "8", help: "even deck size in 4..=12" }],
            expected: ExpectedMetrics { k: a(0.0), l: a(1.0), s: a(-1.0), sigma: a(0.0) },
            factory: |p| Ok(Box::new(WarSmall::new(parse("war_small", p, "deck")?)?)),
        },
        GameSpec {
            name: "dice_race",
            summary: "race to the goal choosing a safe step or a die roll each turn",
            params: &[
                ParamSpec { name: "length", default: "4", help: "squares to the goal" },
                ParamSpec { name: "faces", default: "2", help: "die faces; a roll r advances 2(r-1)" },
            ],
            expected: ExpectedMetrics::default(),
            factory: |p| {
                Ok(Box::new(DiceRace::new(parse("dice_race", p, "length")?, parse("dice_race", p, "faces")?)?))
            },
        },
    ]
}

/// Tic-tac-toe K from exhaustive backward induction.
pub const TICTACTOE_K: f64 = 383.0 / 384.0 - 817.0 / 1260.0;

/// The explicit tree behind a tree-defined catalog game.
pub fn explicit_tree(name: &str) -> Option<crate::tree_io::ExplicitTree> {
    Some(match name {
        "coin_toss" => trees::coin_toss(),
        "toy" => trees::toy(),
        "toy_pure_luck" => trees::toy_pure_luck(),
        "toy_pure_skill" => trees::toy_pure_skill(),
        "lottery_choice" => trees::lottery_choice(),
        _ => return None,
    })
}

pub fn find(name: &str) -> Option<GameSpec> {
    list_games().into_iter().find(|g| g.name == name)
}

/// Builds a catalog game by name.
pub fn instantiate(name: &str, params: &Params) -> Result<Box<dyn Game>, CatalogError> {
    let spec = find(name).ok_or_else(|| CatalogError::UnknownGame(name.into()))?;
    Ok(spec.build(params)?)
}

/// Parses `key=value` pairs.
pub fn parse_params<'a>(pairs: impl IntoIterator<Item = &'a str>) -> Result<Params, String> {
    let mut out = Params::new();
    for p in pairs {
        let (k, v) = p.split_once('=').ok_or_else(|| format!("parameter '{p}' is not key=value"))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}
