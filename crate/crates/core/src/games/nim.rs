use crate::game::{Edge, Game, GameError, NodeKind, Player, State};

pub const MAX_HEAPS: usize = 6;
pub const MAX_HEAP: u8 = 15;
/// Bound on the product of (heap + 1), i.e. distinct heap configurations.
pub const MAX_CONFIGURATIONS: u64 = 1_000_000;

/// Normal-play Nim: a move removes one or more objects from one heap and the
/// player who takes the last object wins. Player 0 moves first. Successors
/// are ordered by heap, then by the number taken.
#[derive(Debug, Clone)]
pub struct Nim {
    heaps: Vec<u8>,
    total: u32,
}

impl Nim {
    pub fn new(heaps: &[u8]) -> Result<Self, GameError> {
        let bad = |reason: String| GameError::InvalidParameter { game: "nim".into(), reason };
        if heaps.is_empty() || heaps.len() > MAX_HEAPS {
            return Err(bad(format!("need 1..={MAX_HEAPS} heaps, got {}", heaps.len())));
        }
        if let Some(h) = heaps.iter().find(|&&h| h > MAX_HEAP) {
            return Err(bad(format!("heap size {h} exceeds {MAX_HEAP}")));
        }
        let configs: u64 = heaps.iter().map(|&h| h as u64 + 1).product();
        if configs > MAX_CONFIGURATIONS {
            return Err(bad(format!("{configs} heap configurations exceed {MAX_CONFIGURATIONS}")));
        }
        Ok(Nim { heaps: heaps.to_vec(), total: heaps.iter().map(|&h| h as u32).sum() })
    }

    pub fn heaps(&self) -> &[u8] {
        &self.heaps
    }

    fn check<'a>(&self, s: &'a State) -> Result<&'a [u8], GameError> {
        let d = s.data();
        let ok = d.len() == self.heaps.len()
            && d.iter().zip(&self.heaps).all(|(a, b)| a <= b)
            && self.total - d.iter().map(|&h| h as u32).sum::<u32>() >= s.ply();
        if !ok {
            return Err(GameError::CorruptState { game: "nim".into(), reason: "bad heaps".into() });
        }
        Ok(d)
    }
}

fn mover(s: &State) -> Player {
    if s.ply() % 2 == 0 {
        Player::P0
    } else {
        Player::P1
    }
}

impl Game for Nim {
    fn name(&self) -> &str {
        "nim"
    }

    fn initial_state(&self) -> State {
        State::new(self.heaps.clone(), 0)
    }

    fn node_kind(&self, s: &State) -> Result<NodeKind, GameError> {
        let d = self.check(s)?;
        if d.iter().all(|&h| h == 0) {
            // The previous player took the last object.
            let payoff = if mover(s) == Player::P0 { 0.0 } else { 1.0 };
            return Ok(NodeKind::Terminal { payoff });
        }
        Ok(NodeKind::Decision { player: mover(s) })
    }

    fn successors(&self, s: &State) -> Result<Vec<Edge>, GameError> {
        let d = self.check(s)?;
        let mut out = Vec::new();
        for (i, &h) in d.iter().enumerate() {
            for take in 1..=h {
                let mut next = d.to_vec();
                next[i] -= take;
                out.push(Edge::action(format!("{i}-{take}"), State::new(next, s.ply() + 1)));
            }
        }
        Ok(out)
    }

    fn max_ply(&self) -> u32 {
        self.total.max(1)
    }
}
