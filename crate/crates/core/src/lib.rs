//! Skill and luck measurement for finite two-player zero-sum games with
//! chance: skill leverage K, luck leverage L, the index S = (K - L)/(K + L),
//! and integrated volatility.

pub mod game;
pub mod games;
pub mod generate;
pub mod leverage;
pub mod report;
pub mod rng;
pub mod solvers;
pub mod stats;
pub mod transform;
pub mod tree_io;
pub mod volatility;

pub use game::{Game, NodeKind, Player, Policy, Profile, State};
pub use solvers::{Depth, SolveError};
