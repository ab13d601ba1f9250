use crate::game::{Edge, Game, GameError, NodeKind, Player, State, DRAW};

pub const MAX_CELLS: usize = 42;

/// Gravity k-in-a-row on a `width` x `height` board (Connect Four is
/// 7x6, k = 4). Player 0 moves first. Successors are the non-full columns
/// from left to right.
#[derive(Debug, Clone)]
pub struct ConnectK {
    width: usize,
    height: usize,
    k: usize,
}

impl ConnectK {
    pub fn new(width: usize, height: usize, k: usize) -> Result<Self, GameError> {
        let bad = |reason: String| GameError::InvalidParameter { game: "connect_k".into(), reason };
        if width == 0 || height == 0 {
            return Err(bad("board dimensions must be positive".into()));
        }
        if width * height > MAX_CELLS {
            return Err(bad(format!("{width}x{height} board exceeds {MAX_CELLS} cells")));
        }
        if k < 2 || k > width.max(height) {
            return Err(bad(format!("k = {k} must lie in 2..={}", width.max(height))));
        }
        Ok(ConnectK { width, height, k })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.k)
    }

    fn board<'a>(&self, s: &'a State) -> Result<&'a [u8], GameError> {
        let b = s.data();
        let marks = b.iter().filter(|&&c| c != 0).count();
        if b.len() != self.width * self.height || b.iter().any(|&c| c > 2) || marks != s.ply() as usize {
            return Err(GameError::CorruptState { game: "connect_k".into(), reason: "bad board".into() });
        }
        Ok(b)
    }

    fn at(&self, b: &[u8], r: isize, c: isize) -> u8 {
        if r < 0 || c < 0 || r >= self.height as isize || c >= self.width as isize {
            0
        } else {
            b[r as usize * self.width + c as usize]
        }
    }

    fn winner(&self, b: &[u8]) -> Option<u8> {
        for r in 0..self.height as isize {
            for c in 0..self.width as isize {
                let m = self.at(b, r, c);
                if m == 0 {
                    continue;
                }
                for (dr, dc) in [(0, 1), (1, 0), (1, 1), (1, -1)] {
                    if (1..self.k as isize).all(|i| self.at(b, r + dr * i, c + dc * i) == m) {
                        return Some(m);
                    }
                }
            }
        }
        None
    }
}

impl Game for ConnectK {
    fn name(&self) -> &str {
        "connect_k"
    }

    fn initial_state(&self) -> State {
        State::new(vec![0; self.width * self.height], 0)
    }

    fn node_kind(&self, s: &State) -> Result<NodeKind, GameError> {
        let b = self.board(s)?;
        Ok(match self.winner(b) {
            Some(1) => NodeKind::Terminal { payoff: 1.0 },
            Some(_) => NodeKind::Terminal { payoff: 0.0 },
            None if b.iter().all(|&c| c != 0) => NodeKind::Terminal { payoff: DRAW },
            None => NodeKind::Decision { player: if s.ply() % 2 == 0 { Player::P0 } else { Player::P1 } },
        })
    }

    fn successors(&self, s: &State) -> Result<Vec<Edge>, GameError> {
        let b = self.board(s)?;
        if self.winner(b).is_some() {
            return Ok(Vec::new());
        }
        let mark = if s.ply() % 2 == 0 { 1 } else { 2 };
        let mut out = Vec::new();
        for c in 0..self.width {
            if let Some(r) = (0..self.height).find(|&r| b[r * self.width + c] == 0) {
                let mut next = b.to_vec();
                next[r * self.width + c] = mark;
                out.push(Edge::action(c.to_string(), State::new(next, s.ply() + 1)));
            }
        }
        Ok(out)
    }

    fn max_ply(&self) -> u32 {
        (self.width * self.height) as u32
    }
}
