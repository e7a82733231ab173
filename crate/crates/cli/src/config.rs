//! The experiment file passed with `--config`.
//!
//! ```toml
//! seed = 7
//! out = "runs/ttt-det"
//!
//! [train]
//! game = "tictactoe"
//! teacher = "minmax-det:depth=9"
//! max_episodes = 20000
//!
//! [tournament]
//! game = "tictactoe"
//! roster = [
//!   { name = "M_det", spec = "minmax-det" },
//!   { name = "R", spec = "random" },
//! ]
//! ```
//!
//! `[train]` takes every training parameter by its config name; anything
//! left out keeps its default. Unknown keys are rejected everywhere.

use std::fs;
use std::path::{Path, PathBuf};

use qarena_core::{Entrant, GameId, TrainConfig};
use serde::Deserialize;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub train: Option<toml::Table>,
    pub tournament: Option<TournamentSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TournamentSection {
    pub game: Option<GameId>,
    #[serde(default)]
    pub roster: Vec<Entrant>,
    pub n_trials: Option<u64>,
    pub jobs: Option<usize>,
    pub n1: Option<u64>,
    pub window: Option<u64>,
    pub tolerance: Option<u64>,
    pub batch: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<ConfigFile> {
        let text = fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        ConfigFile::parse(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<ConfigFile, String> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| e.to_string())?;
        // Check the training table up front so typos fail before any work.
        file.train_config()?;
        Ok(file)
    }

    /// The `[train]` table as a config, and whether it named a game.
    pub fn train_config(&self) -> Result<Option<(TrainConfig, bool)>, String> {
        let Some(table) = &self.train else { return Ok(None) };
        let has_game = table.contains_key("game");
        let cfg: TrainConfig = table.clone().try_into().map_err(|e: toml::de::Error| format!("[train]: {e}"))?;
        Ok(Some((cfg, has_game)))
    }
}
