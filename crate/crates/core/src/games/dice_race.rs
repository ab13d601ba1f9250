use crate::game::{Edge, Game, GameError, NodeKind, Player, State, DRAW};

/// A two-player race to `length` squares. On each turn the mover either
/// steps safely (+1) or rolls a fair die with `faces` faces and advances
/// `2 * (roll - 1)`. Reaching `length` wins at once. After `length` turns
/// each, the further player wins (equal positions draw). Player 0 moves
/// first. Decision successors are `safe` then `risky`; roll outcomes are in
/// face order.
///
/// State bytes: position of each player, turns completed, and a flag set
/// while the mover's risky roll is pending.
#[derive(Debug, Clone)]
pub struct DiceRace {
    length: u8,
    faces: u8,
}

impl DiceRace {
    pub fn new(length: u8, faces: u8) -> Result<Self, GameError> {
        let bad = |reason: String| GameError::InvalidParameter { game: "dice_race".into(), reason };
        if !(1..=20).contains(&length) {
            return Err(bad(format!("length {length} must lie in 1..=20")));
        }
        if !(2..=6).contains(&faces) {
            return Err(bad(format!("faces {faces} must lie in 2..=6")));
        }
        Ok(DiceRace { length, faces })
    }

    pub fn params(&self) -> (u8, u8) {
        (self.length, self.faces)
    }

    fn turn_cap(&self) -> u8 {
        2 * self.length
    }

    fn parse(&self, s: &State) -> Result<[u8; 4], GameError> {
        let d: [u8; 4] = s
            .data()
            .try_into()
            .map_err(|_| GameError::CorruptState { game: "dice_race".into(), reason: "bad encoding".into() })?;
        if d[2] > self.turn_cap() || d[3] > 1 {
            return Err(GameError::CorruptState { game: "dice_race".into(), reason: "bad counters".into() });
        }
        Ok(d)
    }

    fn mover(turns: u8) -> Player {
        if turns % 2 == 0 {
            Player::P0
        } else {
            Player::P1
        }
    }

    fn after_move(&self, d: [u8; 4], advance: u8, ply: u32) -> State {
        let m = Self::mover(d[2]).index();
        let mut next = d;
        next[m] = next[m].saturating_add(advance).min(self.length);
        next[2] += 1;
        next[3] = 0;
        State::new(next.to_vec(), ply + 1)
    }
}

impl Game for DiceRace {
    fn name(&self) -> &str {
        "dice_race"
    }

    fn initial_state(&self) -> State {
        State::new(vec![0, 0, 0, 0], 0)
    }

    fn node_kind(&self, s: &State) -> Result<NodeKind, GameError> {
        let d = self.parse(s)?;
        if d[0] >= self.length {
            return Ok(NodeKind::Terminal { payoff: 1.0 });
        }
        if d[1] >= self.length {
            return Ok(NodeKind::Terminal { payoff: 0.0 });
        }
        if d[2] == self.turn_cap() {
            let payoff = match d[0].cmp(&d[1]) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => DRAW,
                std::cmp::Ordering::Less => 0.0,
            };
            return Ok(NodeKind::Terminal { payoff });
        }
        if d[3] == 1 {
            return Ok(NodeKind::Chance { probs: vec![1.0 / self.faces as f64; self.faces as usize] });
        }
        Ok(NodeKind::Decision { player: Self::mover(d[2]) })
    }

    fn successors(&self, s: &State) -> Result<Vec<Edge>, GameError> {
        let d = self.parse(s)?;
        Ok(match self.node_kind(s)? {
            NodeKind::Terminal { .. } => Vec::new(),
            NodeKind::Decision { .. } => {
                let mut pending = d;
                pending[3] = 1;
                vec![
                    Edge::action("safe", self.after_move(d, 1, s.ply())),
                    Edge::action("risky", State::new(pending.to_vec(), s.ply() + 1)),
                ]
            }
            NodeKind::Chance { .. } => (1..=self.faces)
                .map(|roll| {
                    Edge::chance(roll.to_string(), 1.0 / self.faces as f64, self.after_move(d, 2 * (roll - 1), s.ply()))
                })
                .collect(),
        })
    }

    fn max_ply(&self) -> u32 {
        4 * self.length as u32
    }
}
