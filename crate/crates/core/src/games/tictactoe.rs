use crate::game::{Edge, Game, GameError, NodeKind, Player, State, DRAW};

const LINES: [[usize; 3]; 8] = [[0, 1, 2], [3, 4, 5], [6, 7, 8], [0, 3, 6], [1, 4, 7], [2, 5, 8], [0, 4, 8], [2, 4, 6]];

/// Tic-tac-toe. X is Player 0 and moves first. Cells are numbered 0..9 row
/// by row; successors follow cell order.
#[derive(Debug, Clone, Default)]
pub struct TicTacToe;

impl TicTacToe {
    fn board<'a>(&self, s: &'a State) -> Result<&'a [u8], GameError> {
        let b = s.data();
        let marks = b.iter().filter(|&&c| c != 0).count();
        if b.len() != 9 || b.iter().any(|&c| c > 2) || marks != s.ply() as usize {
            return Err(GameError::CorruptState { game: "tictactoe".into(), reason: "bad board".into() });
        }
        Ok(b)
    }
}

fn winner(b: &[u8]) -> Option<u8> {
    LINES.iter().find(|l| b[l[0]] != 0 && b[l[0]] == b[l[1]] && b[l[1]] == b[l[2]]).map(|l| b[l[0]])
}

impl Game for TicTacToe {
    fn name(&self) -> &str {
        "tictactoe"
    }

    fn initial_state(&self) -> State {
        State::new(vec![0; 9], 0)
    }

    fn node_kind(&self, s: &State) -> Result<NodeKind, GameError> {
        let b = self.board(s)?;
        Ok(match winner(b) {
            Some(1) => NodeKind::Terminal { payoff: 1.0 },
            Some(_) => NodeKind::Terminal { payoff: 0.0 },
            None if s.ply() == 9 => NodeKind::Terminal { payoff: DRAW },
            None => NodeKind::Decision { player: if s.ply() % 2 == 0 { Player::P0 } else { Player::P1 } },
        })
    }

    fn successors(&self, s: &State) -> Result<Vec<Edge>, GameError> {
        let b = self.board(s)?;
        if winner(b).is_some() {
            return Ok(Vec::new());
        }
        let mark = if s.ply() % 2 == 0 { 1 } else { 2 };
        Ok((0..9)
            .filter(|&i| b[i] == 0)
            .map(|i| {
                let mut next = b.to_vec();
                next[i] = mark;
                Edge::action(i.to_string(), State::new(next, s.ply() + 1))
            })
            .collect())
    }

    fn max_ply(&self) -> u32 {
        9
    }
}
