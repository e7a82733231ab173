//! Nine Men's Morris on the standard 24-point board.
//!
//! ```text
//!  0-----------1-----------2
//!  |           |           |
//!  |   3-------4-------5   |
//!  |   |       |       |   |
//!  |   |   6---7---8   |   |
//!  |   |   |       |   |   |
//!  9--10--11      12--13--14
//!  |   |   |       |   |   |
//!  |   |  15--16--17   |   |
//!  |   |       |       |   |
//!  |  18------19------20   |
//!  |           |           |
//! 21----------22----------23
//! ```
//!
//! There is no flying phase: pieces always move along board lines. A game
//! that reaches [`MAX_PLY`] plies without a winner is a draw.

use std::fmt;

use smallvec::SmallVec;

use super::{Action, Outcome, Player};

pub const POINTS: usize = 24;
pub const PIECES: u8 = 9;
pub const MAX_PLY: u32 = 200;

pub const MILLS: [[u8; 3]; 16] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [9, 10, 11],
    [12, 13, 14],
    [15, 16, 17],
    [18, 19, 20],
    [21, 22, 23],
    [0, 9, 21],
    [3, 10, 18],
    [6, 11, 15],
    [1, 4, 7],
    [16, 19, 22],
    [8, 12, 17],
    [5, 13, 20],
    [2, 14, 23],
];

/// Neighbours of each point, ascending.
pub const ADJACENT: [&[u8]; POINTS] = [
    &[1, 9],
    &[0, 2, 4],
    &[1, 14],
    &[4, 10],
    &[1, 3, 5, 7],
    &[4, 13],
    &[7, 11],
    &[4, 6, 8],
    &[7, 12],
    &[0, 10, 21],
    &[3, 9, 11, 18],
    &[6, 10, 15],
    &[8, 13, 17],
    &[5, 12, 14, 20],
    &[2, 13, 23],
    &[11, 16],
    &[15, 17, 19],
    &[12, 16],
    &[10, 19],
    &[16, 18, 20, 22],
    &[13, 19],
    &[9, 22],
    &[19, 21, 23],
    &[14, 22],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Placement,
    Movement,
    /// The named player just closed a mill and must take a piece. The
    /// owner is always the player to move.
    Removal(Player),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Morris {
    points: [Option<Player>; POINTS],
    in_hand: [u8; 2],
    captured: [u8; 2],
    phase: Phase,
    to_move: Player,
    ply: u32,
    protect_mills: bool,
}

impl Morris {
    pub fn new(protect_mills: bool) -> Self {
        Morris {
            points: [None; POINTS],
            in_hand: [PIECES; 2],
            captured: [0; 2],
            phase: Phase::Placement,
            to_move: Player::P1,
            ply: 0,
            protect_mills,
        }
    }

    pub fn points(&self) -> &[Option<Player>; POINTS] {
        &self.points
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn in_hand(&self, p: Player) -> u8 {
        self.in_hand[p.index()]
    }

    pub fn captured(&self, p: Player) -> u8 {
        self.captured[p.index()]
    }

    pub fn on_board(&self, p: Player) -> u8 {
        self.points.iter().filter(|&&x| x == Some(p)).count() as u8
    }

    /// Pieces still in play: on the board or in hand.
    pub fn pieces(&self, p: Player) -> u8 {
        self.on_board(p) + self.in_hand(p)
    }

    pub fn to_move(&self) -> Player {
        self.to_move
    }

    pub fn ply(&self) -> u32 {
        self.ply
    }

    /// Whether `point` is part of a complete mill of its owner.
    pub fn in_mill(&self, point: u8) -> bool {
        let Some(owner) = self.points[point as usize] else {
            return false;
        };
        MILLS.iter().filter(|m| m.contains(&point)).any(|m| m.iter().all(|&q| self.points[q as usize] == Some(owner)))
    }

    pub fn mill_count(&self, p: Player) -> usize {
        MILLS.iter().filter(|m| m.iter().all(|&q| self.points[q as usize] == Some(p))).count()
    }

    fn has_step(&self, p: Player) -> bool {
        (0..POINTS).any(|from| {
            self.points[from] == Some(p) && ADJACENT[from].iter().any(|&to| self.points[to as usize].is_none())
        })
    }

    pub fn outcome(&self) -> Option<Outcome> {
        if matches!(self.phase, Phase::Removal(_)) {
            return None;
        }
        for p in [self.to_move, self.to_move.opponent()] {
            if self.pieces(p) < 3 {
                return Some(Outcome::Win(p.opponent()));
            }
        }
        if self.phase == Phase::Movement && !self.has_step(self.to_move) {
            return Some(Outcome::Win(self.to_move.opponent()));
        }
        if self.ply >= MAX_PLY {
            return Some(Outcome::Draw);
        }
        None
    }

    pub(crate) fn actions(&self) -> Vec<Action> {
        match self.phase {
            Phase::Placement => {
                (0..POINTS as u8).filter(|&p| self.points[p as usize].is_none()).map(Action::Place).collect()
            }
            Phase::Movement => {
                let mut out = Vec::new();
                for (from, neighbours) in ADJACENT.iter().enumerate() {
                    if self.points[from] != Some(self.to_move) {
                        continue;
                    }
                    for &to in *neighbours {
                        if self.points[to as usize].is_none() {
                            out.push(Action::Move { from: from as u8, to });
                        }
                    }
                }
                out
            }
            Phase::Removal(owner) => {
                let victim = owner.opponent();
                let theirs: Vec<u8> = (0..POINTS as u8).filter(|&p| self.points[p as usize] == Some(victim)).collect();
                let open: Vec<u8> = if self.protect_mills {
                    theirs.iter().copied().filter(|&p| !self.in_mill(p)).collect()
                } else {
                    Vec::new()
                };
                let pool = if open.is_empty() { theirs } else { open };
                pool.into_iter().map(Action::Remove).collect()
            }
        }
    }

    pub(crate) fn play(&self, action: Action) -> Morris {
        let mover = self.to_move;
        let mut next = self.clone();
        next.ply += 1;
        let landed = match action {
            Action::Place(p) => {
                next.points[p as usize] = Some(mover);
                next.in_hand[mover.index()] -= 1;
                p
            }
            Action::Move { from, to } => {
                next.points[from as usize] = None;
                next.points[to as usize] = Some(mover);
                to
            }
            Action::Remove(p) => {
                next.points[p as usize] = None;
                next.captured[mover.opponent().index()] += 1;
                next.end_turn();
                return next;
            }
            _ => unreachable!("validated by legal_actions"),
        };
        if next.in_mill(landed) && next.on_board(mover.opponent()) > 0 {
            next.phase = Phase::Removal(mover);
        } else {
            next.end_turn();
        }
        next
    }

    fn end_turn(&mut self) {
        self.to_move = self.to_move.opponent();
        self.phase = if self.in_hand == [0, 0] { Phase::Movement } else { Phase::Placement };
    }

    pub(crate) fn encode(&self, out: &mut SmallVec<[u8; 16]>) {
        let phase = match self.phase {
            Phase::Placement => 0u8,
            Phase::Movement => 1,
            Phase::Removal(_) => 2,
        };
        out.push(self.to_move.index() as u8 | (phase << 1));
        out.push(self.in_hand[0]);
        out.push(self.in_hand[1]);
        for chunk in self.points.chunks(4) {
            let mut byte = 0u8;
            for (i, p) in chunk.iter().enumerate() {
                let v = match p {
                    None => 0,
                    Some(Player::P1) => 1,
                    Some(Player::P2) => 2,
                };
                byte |= v << (2 * i);
            }
            out.push(byte);
        }
    }
}

impl fmt::Display for Morris {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |i: usize| match self.points[i] {
            None => '+',
            Some(Player::P1) => 'X',
            Some(Player::P2) => 'O',
        };
        writeln!(f, "{}-----{}-----{}", c(0), c(1), c(2))?;
        writeln!(f, "| {}---{}---{} |", c(3), c(4), c(5))?;
        writeln!(f, "| | {}-{}-{} | |", c(6), c(7), c(8))?;
        writeln!(f, "{}-{}-{}   {}-{}-{}", c(9), c(10), c(11), c(12), c(13), c(14))?;
        writeln!(f, "| | {}-{}-{} | |", c(15), c(16), c(17))?;
        writeln!(f, "| {}---{}---{} |", c(18), c(19), c(20))?;
        writeln!(f, "{}-----{}-----{}", c(21), c(22), c(23))?;
        writeln!(f, "phase {:?}, in hand {}/{}, to move {}", self.phase, self.in_hand[0], self.in_hand[1], self.to_move)
    }
}
