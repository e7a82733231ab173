//! Rule engines for Tic-Tac-Toe, Nine Men's Morris and Mancala behind one
//! environment interface.
//!
//! A [`GameState`] is an immutable value: [`GameState::apply`] returns the
//! successor and never mutates the receiver. Legal actions are always listed
//! in a fixed canonical order (ascending index), which is what makes the
//! deterministic minimax agent deterministic and what Q-table rows are
//! aligned to.

mod enumerate;
pub mod mancala;
pub mod morris;
mod playout;
pub mod tictactoe;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

pub use enumerate::{enumerate_reachable, enumerate_reachable_to_depth};
pub use mancala::Mancala;
pub use morris::{Morris, Phase};
pub use playout::Playout;
pub use tictactoe::TicTacToe;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameId {
    #[serde(alias = "ttt")]
    TicTacToe,
    #[serde(rename = "morris", alias = "nmm", alias = "ninemensmorris")]
    NineMensMorris,
    #[serde(alias = "kalah")]
    Mancala,
}

impl GameId {
    pub const ALL: [GameId; 3] = [GameId::TicTacToe, GameId::NineMensMorris, GameId::Mancala];

    /// Stable one-byte code used in state keys and snapshot headers.
    pub fn code(self) -> u8 {
        match self {
            GameId::TicTacToe => 1,
            GameId::NineMensMorris => 2,
            GameId::Mancala => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<GameId> {
        GameId::ALL.into_iter().find(|g| g.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            GameId::TicTacToe => "tictactoe",
            GameId::NineMensMorris => "morris",
            GameId::Mancala => "mancala",
        }
    }

    /// Letter used in snapshot agent labels such as `Q-T-10`.
    pub fn letter(self) -> char {
        match self {
            GameId::TicTacToe => 'T',
            GameId::NineMensMorris => 'N',
            GameId::Mancala => 'M',
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GameId {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_', ' ', '\''], "").as_str() {
            "tictactoe" | "ttt" => Ok(GameId::TicTacToe),
            "morris" | "ninemensmorris" | "nmm" => Ok(GameId::NineMensMorris),
            "mancala" | "kalah" => Ok(GameId::Mancala),
            _ => Err(GameError::Parse(format!("unknown game `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    P1,
    P2,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::P1 => Player::P2,
            Player::P2 => Player::P1,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Player::P1 => 0,
            Player::P2 => 1,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::P1 => "p1",
            Player::P2 => "p2",
        })
    }
}

impl FromStr for Player {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p1" | "1" => Ok(Player::P1),
            "p2" | "2" => Ok(Player::P2),
            _ => Err(GameError::Parse(format!("unknown player `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "winner")]
pub enum Outcome {
    Win(Player),
    Draw,
}

impl Outcome {
    /// Outcome value from `player`'s point of view: +1 win, -1 loss, 0 draw.
    pub fn value_for(self, player: Player) -> f64 {
        match self {
            Outcome::Win(p) if p == player => 1.0,
            Outcome::Win(_) => -1.0,
            Outcome::Draw => 0.0,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Win(p) => write!(f, "{p}"),
            Outcome::Draw => f.write_str("draw"),
        }
    }
}

impl FromStr for Outcome {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("draw") {
            Ok(Outcome::Draw)
        } else {
            s.parse().map(Outcome::Win)
        }
    }
}

/// One move. Which variants are meaningful depends on the game; the
/// state's `legal_actions` is the only authority on validity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    /// Tic-Tac-Toe cell 0..9, row-major.
    Cell(u8),
    /// Morris: put a piece from hand on an empty point.
    Place(u8),
    /// Morris: slide a piece to an adjacent empty point.
    Move { from: u8, to: u8 },
    /// Morris: take an opponent piece after closing a mill.
    Remove(u8),
    /// Mancala: sow from one of the mover's own houses, 0..6.
    House(u8),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Action::Cell(c) => write!(f, "{c}"),
            Action::House(h) => write!(f, "{h}"),
            Action::Place(p) => write!(f, "p{p}"),
            Action::Move { from, to } => write!(f, "m{from}-{to}"),
            Action::Remove(p) => write!(f, "r{p}"),
        }
    }
}

impl Action {
    /// Parses the textual form used in playout logs and the HTTP API.
    /// Bare numbers are game-dependent, so the game is required.
    pub fn parse(game: GameId, s: &str) -> Result<Action, GameError> {
        let bad = || GameError::Parse(format!("bad {game} action `{s}`"));
        let s = s.trim();
        let num = |t: &str| t.parse::<u8>().map_err(|_| bad());
        match game {
            GameId::TicTacToe => num(s).map(Action::Cell),
            GameId::Mancala => num(s).map(Action::House),
            GameId::NineMensMorris => {
                if let Some(rest) = s.strip_prefix('p') {
                    num(rest).map(Action::Place)
                } else if let Some(rest) = s.strip_prefix('r') {
                    num(rest).map(Action::Remove)
                } else if let Some(rest) = s.strip_prefix('m') {
                    let (from, to) = rest.split_once('-').ok_or_else(bad)?;
                    Ok(Action::Move { from: num(from)?, to: num(to)? })
                } else {
                    Err(bad())
                }
            }
        }
    }
}

/// Compact byte encoding of everything that distinguishes one decision point
/// from another: game, player to move, board, and for Morris the phase and
/// in-hand counts. The move counter is deliberately not part of the key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(SmallVec<[u8; 16]>);

impl StateKey {
    pub fn from_bytes(bytes: &[u8]) -> StateKey {
        StateKey(SmallVec::from_slice(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn game(&self) -> Option<GameId> {
        self.0.first().copied().and_then(GameId::from_code)
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0.iter() {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("terminal: no actions in a finished game")]
    Terminal,
    #[error("illegal_action: {0}")]
    IllegalAction(Action),
    #[error("cap exceeded after {found} distinct states")]
    CapExceeded { found: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("replay mismatch: {0}")]
    Replay(String),
}

impl GameError {
    /// Short machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            GameError::Terminal => "terminal",
            GameError::IllegalAction(_) => "illegal_action",
            GameError::CapExceeded { .. } => "cap_exceeded",
            GameError::Parse(_) => "parse",
            GameError::Replay(_) => "replay",
        }
    }
}

/// Rule variants that the literature disagrees on. The defaults are the
/// ones every agent and test in this crate uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Variant {
    /// Morris: pieces standing in a mill may only be removed when every
    /// opponent piece is in a mill.
    pub protect_mills: bool,
    /// Mancala: at game end, seeds left in a player's houses count for
    /// that player. When false they are swept to the opponent instead.
    pub leftover_to_owner: bool,
}

impl Default for Variant {
    fn default() -> Self {
        Variant { protect_mills: true, leftover_to_owner: true }
    }
}

/// A full position of one of the three games.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GameState {
    TicTacToe(TicTacToe),
    Morris(Morris),
    Mancala(Mancala),
}

macro_rules! dispatch {
    ($self:expr, $s:ident => $body:expr) => {
        match $self {
            GameState::TicTacToe($s) => $body,
            GameState::Morris($s) => $body,
            GameState::Mancala($s) => $body,
        }
    };
}

impl GameState {
    pub fn initial(game: GameId) -> GameState {
        GameState::initial_with(game, Variant::default())
    }

    pub fn initial_with(game: GameId, variant: Variant) -> GameState {
        match game {
            GameId::TicTacToe => GameState::TicTacToe(TicTacToe::new()),
            GameId::NineMensMorris => GameState::Morris(Morris::new(variant.protect_mills)),
            GameId::Mancala => GameState::Mancala(Mancala::new(variant.leftover_to_owner)),
        }
    }

    pub fn game(&self) -> GameId {
        match self {
            GameState::TicTacToe(_) => GameId::TicTacToe,
            GameState::Morris(_) => GameId::NineMensMorris,
            GameState::Mancala(_) => GameId::Mancala,
        }
    }

    pub fn to_move(&self) -> Player {
        dispatch!(self, s => s.to_move())
    }

    pub fn ply(&self) -> u32 {
        dispatch!(self, s => s.ply())
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome().is_some()
    }

    /// `None` while the game is still running.
    pub fn outcome(&self) -> Option<Outcome> {
        dispatch!(self, s => s.outcome())
    }

    /// Legal actions in canonical order. Errors on terminal states.
    pub fn legal_actions(&self) -> Result<Vec<Action>, GameError> {
        if self.is_terminal() {
            return Err(GameError::Terminal);
        }
        Ok(self.actions_unchecked())
    }

    /// Canonical action list without the terminal check.
    pub(crate) fn actions_unchecked(&self) -> Vec<Action> {
        dispatch!(self, s => s.actions())
    }

    /// Successor state after `action`, which must be legal here.
    pub fn apply(&self, action: Action) -> Result<GameState, GameError> {
        if !self.legal_actions()?.contains(&action) {
            return Err(GameError::IllegalAction(action));
        }
        Ok(self.apply_unchecked(action))
    }

    /// Successor for an action already known to come from `legal_actions`.
    pub(crate) fn apply_unchecked(&self, action: Action) -> GameState {
        match self {
            GameState::TicTacToe(s) => GameState::TicTacToe(s.play(action)),
            GameState::Morris(s) => GameState::Morris(s.play(action)),
            GameState::Mancala(s) => GameState::Mancala(s.play(action)),
        }
    }

    pub fn key(&self) -> StateKey {
        let mut bytes = SmallVec::new();
        bytes.push(self.game().code());
        dispatch!(self, s => s.encode(&mut bytes));
        StateKey(bytes)
    }

    pub fn as_tictactoe(&self) -> Option<&TicTacToe> {
        match self {
            GameState::TicTacToe(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_morris(&self) -> Option<&Morris> {
        match self {
            GameState::Morris(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_mancala(&self) -> Option<&Mancala> {
        match self {
            GameState::Mancala(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for GameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        dispatch!(self, s => fmt::Display::fmt(s, f))
    }
}

/// `initial_state(game)`.
pub fn initial_state(game: GameId) -> GameState {
    GameState::initial(game)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_text_round_trips() {
        let cases = [
            (GameId::TicTacToe, Action::Cell(4)),
            (GameId::Mancala, Action::House(5)),
            (GameId::NineMensMorris, Action::Place(23)),
            (GameId::NineMensMorris, Action::Move { from: 3, to: 4 }),
            (GameId::NineMensMorris, Action::Remove(0)),
        ];
        for (game, action) in cases {
            assert_eq!(Action::parse(game, &action.to_string()).unwrap(), action);
        }
        assert!(Action::parse(GameId::NineMensMorris, "q1").is_err());
        assert!(Action::parse(GameId::TicTacToe, "x").is_err());
    }

    #[test]
    fn game_ids_parse_and_code() {
        for g in GameId::ALL {
            assert_eq!(g.name().parse::<GameId>().unwrap(), g);
            assert_eq!(GameId::from_code(g.code()), Some(g));
        }
        assert_eq!("Nine-Mens-Morris".parse::<GameId>().unwrap(), GameId::NineMensMorris);
        assert!("chess".parse::<GameId>().is_err());
    }

    #[test]
    fn outcome_values_are_zero_sum() {
        for p in [Player::P1, Player::P2] {
            let o = Outcome::Win(p);
            assert_eq!(o.value_for(p) + o.value_for(p.opponent()), 0.0);
        }
        assert_eq!(Outcome::Draw.value_for(Player::P1), 0.0);
    }

    #[test]
    fn terminal_state_has_no_actions() {
        let mut s = GameState::initial(GameId::TicTacToe);
        for c in [0, 3, 1, 4, 2] {
            s = s.apply(Action::Cell(c)).unwrap();
        }
        assert_eq!(s.outcome(), Some(Outcome::Win(Player::P1)));
        assert_eq!(s.legal_actions(), Err(GameError::Terminal));
        assert_eq!(s.apply(Action::Cell(8)), Err(GameError::Terminal));
    }

    #[test]
    fn illegal_action_carries_offender() {
        let s = GameState::initial(GameId::TicTacToe).apply(Action::Cell(4)).unwrap();
        assert_eq!(s.apply(Action::Cell(4)), Err(GameError::IllegalAction(Action::Cell(4))));
        assert_eq!(s.apply(Action::House(1)), Err(GameError::IllegalAction(Action::House(1))));
        assert_eq!(GameError::IllegalAction(Action::Cell(4)).code(), "illegal_action");
    }
}
