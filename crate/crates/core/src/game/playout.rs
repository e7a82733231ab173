//! One-line text record of a finished game:
//! `<game-id> <action;action;...> <outcome>`, e.g. `tictactoe 4;0;8;2;1;7;6;5;3 draw`.

use std::fmt;
use std::str::FromStr;

use super::{Action, GameError, GameId, GameState, Outcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Playout {
    pub game: GameId,
    pub actions: Vec<Action>,
    pub outcome: Outcome,
}

impl Playout {
    /// Replays the actions from the start position and returns every state
    /// visited, start included. Fails if an action is illegal or the
    /// recorded outcome does not match the final position.
    pub fn replay(&self) -> Result<Vec<GameState>, GameError> {
        let mut states = vec![GameState::initial(self.game)];
        for &action in &self.actions {
            let next = states.last().expect("non-empty").apply(action)?;
            states.push(next);
        }
        let last = states.last().expect("non-empty");
        match last.outcome() {
            Some(o) if o == self.outcome => Ok(states),
            other => Err(GameError::Replay(format!(
                "recorded {} but replay ends with {}",
                self.outcome,
                other.map_or("no outcome".to_string(), |o| o.to_string())
            ))),
        }
    }
}

impl fmt::Display for Playout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.game)?;
        for (i, a) in self.actions.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, " {}", self.outcome)
    }
}

impl FromStr for Playout {
    type Err = GameError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let mut parts = line.split_whitespace();
        let (Some(game), Some(actions), Some(outcome), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(GameError::Parse(format!("playout needs 3 fields: `{line}`")));
        };
        let game: GameId = game.parse()?;
        let actions = actions.split(';').map(|a| Action::parse(game, a)).collect::<Result<Vec<_>, _>>()?;
        Ok(Playout { game, actions, outcome: outcome.parse()? })
    }
}
