//! Small built-in games defined as explicit trees.

use crate::game::Player;
use crate::tree_io::{ExplicitTree, TreeBuilder};

fn finish(b: TreeBuilder, root: u64) -> ExplicitTree {
    b.finish(root).expect("built-in tree is well formed")
}

/// A single fair flip decides the game.
pub fn coin_toss() -> ExplicitTree {
    let mut b = TreeBuilder::new();
    let w = b.terminal(1.0);
    let l = b.terminal(0.0);
    let root = b.chance([("heads", 0.5, w), ("tails", 0.5, l)]);
    finish(b, root)
}

/// Nature flips a coin: on heads Player 0 wins outright, on tails Player 0
/// picks A (win) or B (loss).
pub fn toy() -> ExplicitTree {
    let mut b = TreeBuilder::new();
    let w = b.terminal(1.0);
    let a = b.terminal(1.0);
    let l = b.terminal(0.0);
    let d = b.decision(Player::P0, [("A", a), ("B", l)]);
    let root = b.chance([("W", 0.5, w), ("d", 0.5, d)]);
    finish(b, root)
}

/// The toy game with the decision replaced by its uniform-play outcome, so
/// the only uncertainty is the flip.
pub fn toy_pure_luck() -> ExplicitTree {
    let mut b = TreeBuilder::new();
    let w = b.terminal(1.0);
    let d = b.terminal(0.5);
    let root = b.chance([("W", 0.5, w), ("d", 0.5, d)]);
    finish(b, root)
}

/// The toy game with the flip replaced by a Player 0 choice.
pub fn toy_pure_skill() -> ExplicitTree {
    let mut b = TreeBuilder::new();
    let w = b.terminal(1.0);
    let a = b.terminal(1.0);
    let l = b.terminal(0.0);
    let d = b.decision(Player::P0, [("A", a), ("B", l)]);
    let root = b.decision(Player::P0, [("W", w), ("d", d)]);
    finish(b, root)
}

/// Player 0 chooses lottery A (wins with 0.8) or lottery B (wins with 0.2).
pub fn lottery_choice() -> ExplicitTree {
    let mut b = TreeBuilder::new();
    let aw = b.terminal(1.0);
    let al = b.terminal(0.0);
    let bw = b.terminal(1.0);
    let bl = b.terminal(0.0);
    let a = b.chance([("win", 0.8, aw), ("lose", 0.2, al)]);
    let lb = b.chance([("win", 0.2, bw), ("lose", 0.8, bl)]);
    let root = b.decision(Player::P0, [("A", a), ("B", lb)]);
    finish(b, root)
}
