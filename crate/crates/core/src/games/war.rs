use crate::game::{Edge, Game, GameError, NodeKind, State, DRAW};

/// A reduced game of War with no decisions. The deck holds ranks
/// `1..=deck/2`, two cards of each. Each round both players reveal one card
/// and the higher rank scores a point; after `deck/2` rounds the higher
/// score wins. The shuffle is dealt lazily: each round is a chance node over
/// ordered rank pairs drawn from the remaining cards, which gives the same
/// distribution over full deals.
///
/// State bytes: remaining count per rank, then the score difference offset
/// by the number of rounds.
#[derive(Debug, Clone)]
pub struct WarSmall {
    deck: usize,
}

impl WarSmall {
    pub fn new(deck: usize) -> Result<Self, GameError> {
        if !(4..=12).contains(&deck) || deck % 2 != 0 {
            return Err(GameError::InvalidParameter {
                game: "war_small".into(),
                reason: format!("deck size {deck} must be even and in 4..=12"),
            });
        }
        Ok(WarSmall { deck })
    }

    pub fn deck(&self) -> usize {
        self.deck
    }

    fn rounds(&self) -> u32 {
        (self.deck / 2) as u32
    }

    fn split<'a>(&self, s: &'a State) -> Result<(&'a [u8], i32), GameError> {
        let d = s.data();
        let ranks = self.deck / 2;
        let corrupt = || GameError::CorruptState { game: "war_small".into(), reason: "bad state".into() };
        if d.len() != ranks + 1 || d[..ranks].iter().any(|&c| c > 2) {
            return Err(corrupt());
        }
        let left: u32 = d[..ranks].iter().map(|&c| c as u32).sum();
        if left + 2 * s.ply() != self.deck as u32 || s.ply() > self.rounds() {
            return Err(corrupt());
        }
        Ok((&d[..ranks], d[ranks] as i32 - self.rounds() as i32))
    }
}

impl Game for WarSmall {
    fn name(&self) -> &str {
        "war_small"
    }

    fn initial_state(&self) -> State {
        let mut d = vec![2u8; self.deck / 2];
        d.push(self.rounds() as u8);
        State::new(d, 0)
    }

    fn node_kind(&self, s: &State) -> Result<NodeKind, GameError> {
        let (_, score) = self.split(s)?;
        if s.ply() == self.rounds() {
            let payoff = match score {
                x if x > 0 => 1.0,
                0 => DRAW,
                _ => 0.0,
            };
            return Ok(NodeKind::Terminal { payoff });
        }
        let probs = self.successors(s)?.iter().map(|e| e.prob.unwrap_or(0.0)).collect();
        Ok(NodeKind::Chance { probs })
    }

    fn successors(&self, s: &State) -> Result<Vec<Edge>, GameError> {
        let (counts, score) = self.split(s)?;
        if s.ply() == self.rounds() {
            return Ok(Vec::new());
        }
        let r: u32 = counts.iter().map(|&c| c as u32).sum();
        let denom = (r * (r - 1)) as f64;
        let mut out = Vec::new();
        for a in 0..counts.len() {
            for b in 0..counts.len() {
                let ways = counts[a] as u32 * (counts[b] as u32).saturating_sub(u32::from(a == b));
                if ways == 0 {
                    continue;
                }
                let mut next = counts.to_vec();
                next[a] -= 1;
                next[b] -= 1;
                let delta = (a as i32 - b as i32).signum();
                next.push((score + delta + self.rounds() as i32) as u8);
                out.push(Edge::chance(
                    format!("{}v{}", a + 1, b + 1),
                    ways as f64 / denom,
                    State::new(next, s.ply() + 1),
                ));
            }
        }
        Ok(out)
    }

    fn max_ply(&self) -> u32 {
        self.rounds()
    }
}
