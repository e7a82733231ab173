use std::fmt;

use smallvec::SmallVec;

use super::{Action, Outcome, Player};

pub const LINES: [[usize; 3]; 8] =
    [[0, 1, 2], [3, 4, 5], [6, 7, 8], [0, 3, 6], [1, 4, 7], [2, 5, 8], [0, 4, 8], [2, 4, 6]];

/// 3x3 board, row-major. P1 plays X and moves first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TicTacToe {
    cells: [Option<Player>; 9],
    to_move: Player,
    ply: u8,
}

impl Default for TicTacToe {
    fn default() -> Self {
        Self::new()
    }
}

impl TicTacToe {
    pub fn new() -> Self {
        TicTacToe { cells: [None; 9], to_move: Player::P1, ply: 0 }
    }

    /// Builds a position from a 9-character string of `X`, `O` and `.`.
    /// The player to move is inferred from the piece counts. Returns `None`
    /// if the counts are impossible.
    pub fn from_cells(board: &str) -> Option<TicTacToe> {
        let mut cells = [None; 9];
        let chars: Vec<char> = board.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.len() != 9 {
            return None;
        }
        for (cell, ch) in cells.iter_mut().zip(chars) {
            *cell = match ch {
                'X' | 'x' => Some(Player::P1),
                'O' | 'o' => Some(Player::P2),
                '.' | '-' | '_' => None,
                _ => return None,
            };
        }
        let xs = cells.iter().filter(|c| **c == Some(Player::P1)).count();
        let os = cells.iter().filter(|c| **c == Some(Player::P2)).count();
        let to_move = match xs.checked_sub(os)? {
            0 => Player::P1,
            1 => Player::P2,
            _ => return None,
        };
        Some(TicTacToe { cells, to_move, ply: (xs + os) as u8 })
    }

    pub fn cells(&self) -> &[Option<Player>; 9] {
        &self.cells
    }

    pub fn to_move(&self) -> Player {
        self.to_move
    }

    pub fn ply(&self) -> u32 {
        u32::from(self.ply)
    }

    pub fn winner(&self) -> Option<Player> {
        LINES.iter().find_map(|&[a, b, c]| match self.cells[a] {
            Some(p) if self.cells[b] == Some(p) && self.cells[c] == Some(p) => Some(p),
            _ => None,
        })
    }

    pub fn outcome(&self) -> Option<Outcome> {
        if let Some(p) = self.winner() {
            Some(Outcome::Win(p))
        } else if self.cells.iter().all(Option::is_some) {
            Some(Outcome::Draw)
        } else {
            None
        }
    }

    pub(crate) fn actions(&self) -> Vec<Action> {
        (0..9u8).filter(|&c| self.cells[c as usize].is_none()).map(Action::Cell).collect()
    }

    pub(crate) fn play(&self, action: Action) -> TicTacToe {
        let Action::Cell(c) = action else { unreachable!("validated by legal_actions") };
        let mut next = self.clone();
        next.cells[c as usize] = Some(self.to_move);
        next.to_move = self.to_move.opponent();
        next.ply += 1;
        next
    }

    pub(crate) fn encode(&self, out: &mut SmallVec<[u8; 16]>) {
        out.push(self.to_move.index() as u8);
        out.extend(self.cells.iter().map(|c| match c {
            None => 0,
            Some(Player::P1) => 1,
            Some(Player::P2) => 2,
        }));
    }
}

impl fmt::Display for TicTacToe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 0..3 {
            for col in 0..3 {
                let ch = match self.cells[row * 3 + col] {
                    None => '.',
                    Some(Player::P1) => 'X',
                    Some(Player::P2) => 'O',
                };
                write!(f, "{ch}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
