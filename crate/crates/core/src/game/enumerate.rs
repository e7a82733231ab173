use std::collections::{HashSet, VecDeque};

use super::{GameError, GameId, GameState, StateKey};

/// Counts distinct state keys reachable from the start position, terminal
/// positions included. Fails with the partial count once more than `cap`
/// states have been found.
pub fn enumerate_reachable(game: GameId, cap: usize) -> Result<usize, GameError> {
    enumerate_reachable_to_depth(game, cap, None)
}

/// Breadth-first closure limited to `max_depth` plies from the start.
pub fn enumerate_reachable_to_depth(game: GameId, cap: usize, max_depth: Option<u32>) -> Result<usize, GameError> {
    let start = GameState::initial(game);
    let mut seen: HashSet<StateKey> = HashSet::new();
    let mut queue = VecDeque::new();
    if cap == 0 {
        return Err(GameError::CapExceeded { found: 0 });
    }
    seen.insert(start.key());
    queue.push_back((start, 0u32));
    while let Some((state, depth)) = queue.pop_front() {
        if state.is_terminal() || max_depth.is_some_and(|d| depth >= d) {
            continue;
        }
        for action in state.actions_unchecked() {
            let next = state.apply_unchecked(action);
            if seen.insert(next.key()) {
                if seen.len() > cap {
                    return Err(GameError::CapExceeded { found: seen.len() - 1 });
                }
                queue.push_back((next, depth + 1));
            }
        }
    }
    Ok(seen.len())
}
