use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::game::{Action, GameError, GameState, Player, StateKey};

const TIE_EPS: f64 = 1e-9;
const BOUND: f64 = 2.0;
const CACHE_LIMIT: usize = 1 << 19;

/// Leaf evaluator for depth-limited search. Scores lie in [-1, 1]; terminal
/// positions always score their exact outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heuristic {
    pub morris_piece_weight: f64,
    pub morris_mill_weight: f64,
}

impl Default for Heuristic {
    fn default() -> Self {
        Heuristic { morris_piece_weight: 0.08, morris_mill_weight: 0.12 }
    }
}

impl Heuristic {
    pub fn evaluate(&self, state: &GameState, perspective: Player) -> f64 {
        if let Some(o) = state.outcome() {
            return o.value_for(perspective);
        }
        let opp = perspective.opponent();
        match state {
            GameState::TicTacToe(_) => 0.0,
            GameState::Mancala(m) => (f64::from(m.bank_seeds(perspective)) - f64::from(m.bank_seeds(opp))) / 48.0,
            GameState::Morris(m) => {
                let pieces = f64::from(m.pieces(perspective)) - f64::from(m.pieces(opp));
                let mills = m.mill_count(perspective) as f64 - m.mill_count(opp) as f64;
                (self.morris_piece_weight * pieces + self.morris_mill_weight * mills).clamp(-1.0, 1.0)
            }
        }
    }
}

/// Fail-soft alpha-beta negamax from the point of view of the player to
/// move. Turns that do not pass (Mancala extra turns, Morris removals) keep
/// the sign and window.
fn negamax(state: &GameState, depth: u32, mut alpha: f64, beta: f64, h: &Heuristic) -> f64 {
    let me = state.to_move();
    if let Some(o) = state.outcome() {
        return o.value_for(me);
    }
    if depth == 0 {
        return h.evaluate(state, me);
    }
    let mut best = -BOUND;
    for action in state.actions_unchecked() {
        let child = state.apply_unchecked(action);
        let v = child_value(&child, me, depth - 1, alpha, beta, h);
        if v > best {
            best = v;
            if v > alpha {
                alpha = v;
                if alpha >= beta {
                    break;
                }
            }
        }
    }
    best
}

fn child_value(child: &GameState, me: Player, depth: u32, alpha: f64, beta: f64, h: &Heuristic) -> f64 {
    if child.to_move() == me {
        negamax(child, depth, alpha, beta, h)
    } else {
        -negamax(child, depth, -beta, -alpha, h)
    }
}

/// Game value of `state` for `perspective`, searching `depth` plies.
/// Exact whenever the tree bottoms out in terminal positions.
pub fn minimax_value(state: &GameState, depth: u32, h: &Heuristic, perspective: Player) -> f64 {
    let v = negamax(state, depth, -BOUND, BOUND, h);
    if state.to_move() == perspective {
        v
    } else {
        -v
    }
}

/// Minimax move selection. Among the actions with the best value the
/// deterministic variant takes the first in canonical order; the other
/// picks uniformly at random.
#[derive(Debug, Clone)]
pub struct MinMax {
    depth: u32,
    deterministic: bool,
    heuristic: Heuristic,
    // Root tie sets by position. Values depend only on (state, depth,
    // heuristic), all fixed for one agent.
    cache: HashMap<StateKey, Vec<u8>>,
}

impl MinMax {
    pub fn new(depth: u32, deterministic: bool, heuristic: Heuristic) -> Self {
        assert!(depth >= 1, "minimax depth must be at least 1");
        MinMax { depth, deterministic, heuristic, cache: HashMap::new() }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn deterministic(&self) -> bool {
        self.deterministic
    }

    /// Indices into `state.legal_actions()` achieving the best value.
    pub fn best_actions(&mut self, state: &GameState) -> Vec<u8> {
        let key = state.key();
        if let Some(ties) = self.cache.get(&key) {
            return ties.clone();
        }
        let ties = tie_set(state, self.depth, &self.heuristic);
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        self.cache.insert(key, ties.clone());
        ties
    }

    pub fn select<R: Rng + ?Sized>(&mut self, state: &GameState, rng: &mut R) -> Result<Action, GameError> {
        let actions = state.legal_actions()?;
        let ties = self.best_actions(state);
        let pick = if self.deterministic { ties[0] } else { *ties.choose(rng).expect("non-empty") };
        Ok(actions[pick as usize])
    }
}

fn tie_set(state: &GameState, depth: u32, h: &Heuristic) -> Vec<u8> {
    let me = state.to_move();
    let mut best = -BOUND;
    let mut ties = Vec::new();
    for (i, action) in state.actions_unchecked().into_iter().enumerate() {
        let child = state.apply_unchecked(action);
        // Anything at or below `alpha` is strictly worse than the current
        // best; anything above it comes back exact.
        let alpha = (best - TIE_EPS).max(-BOUND);
        let v = child_value(&child, me, depth - 1, alpha, BOUND, h);
        if v > best + TIE_EPS {
            best = v;
            ties.clear();
            ties.push(i as u8);
        } else if v >= best - TIE_EPS {
            ties.push(i as u8);
        }
    }
    ties
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameId, Mancala, Outcome, TicTacToe};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ttt(board: &str) -> GameState {
        GameState::TicTacToe(TicTacToe::from_cells(board).unwrap())
    }

    /// Plain negamax without pruning: the oracle for the pruned search.
    fn plain(state: &GameState, depth: u32, h: &Heuristic) -> f64 {
        let me = state.to_move();
        if let Some(o) = state.outcome() {
            return o.value_for(me);
        }
        if depth == 0 {
            return h.evaluate(state, me);
        }
        state
            .legal_actions()
            .unwrap()
            .into_iter()
            .map(|a| {
                let c = state.apply(a).unwrap();
                let v = plain(&c, depth - 1, h);
                if c.to_move() == me {
                    v
                } else {
                    -v
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn terminal_passthrough() {
        let s = ttt("XXXOO....");
        assert_eq!(s.outcome(), Some(Outcome::Win(Player::P1)));
        let h = Heuristic::default();
        assert_eq!(minimax_value(&s, 3, &h, Player::P1), 1.0);
        assert_eq!(minimax_value(&s, 0, &h, Player::P2), -1.0);
    }

    #[test]
    fn empty_board_is_a_draw() {
        let s = GameState::initial(GameId::TicTacToe);
        assert_eq!(minimax_value(&s, 9, &Heuristic::default(), Player::P1), 0.0);
    }

    #[test]
    fn immediate_win_found() {
        let s = ttt("XX.OO....");
        let h = Heuristic::default();
        assert_eq!(minimax_value(&s, 1, &h, Player::P1), 1.0);
        for det in [true, false] {
            let mut m = MinMax::new(9, det, h);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..20 {
                assert_eq!(m.select(&s, &mut rng).unwrap(), Action::Cell(2));
            }
        }
    }

    #[test]
    fn deterministic_agent_repeats_itself() {
        let s = GameState::initial(GameId::TicTacToe);
        let mut m = MinMax::new(9, true, Heuristic::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let first = m.select(&s, &mut rng).unwrap();
        for _ in 0..100 {
            assert_eq!(m.select(&s, &mut rng).unwrap(), first);
        }
        // Fresh agent, no cache, same answer.
        let mut fresh = MinMax::new(9, true, Heuristic::default());
        assert_eq!(fresh.select(&s, &mut rng).unwrap(), first);
    }

    #[test]
    fn all_openings_tie_at_full_depth() {
        let s = GameState::initial(GameId::TicTacToe);
        let mut m = MinMax::new(9, false, Heuristic::default());
        assert_eq!(m.best_actions(&s), (0..9).collect::<Vec<u8>>());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let distinct: std::collections::HashSet<_> = (0..100).map(|_| m.select(&s, &mut rng).unwrap()).collect();
        assert!(distinct.len() >= 2);
    }

    #[test]
    fn ties_resolve_to_canonical_order() {
        let s = ttt("OO.X.X...");
        assert_eq!(s.to_move(), Player::P1);
        let mut m = MinMax::new(9, true, Heuristic::default());
        // Winning at 4 is immediate; blocking at 2 wins too, through a
        // double threat. Both tie at +1 and the first in order is taken.
        let legal = s.legal_actions().unwrap();
        let ties: Vec<Action> = m.best_actions(&s).iter().map(|&i| legal[i as usize]).collect();
        assert_eq!(ties, vec![Action::Cell(2), Action::Cell(4)]);
        assert_eq!(m.select(&s, &mut ChaCha8Rng::seed_from_u64(0)).unwrap(), Action::Cell(2));
        // O to move: winning at 2 beats blocking X at 5.
        let s = ttt("OO.XX...X");
        let mut m = MinMax::new(9, true, Heuristic::default());
        assert_eq!(m.select(&s, &mut ChaCha8Rng::seed_from_u64(0)).unwrap(), Action::Cell(2));
    }

    #[test]
    fn mancala_extra_turn_keeps_sign() {
        // P1 sowing house 5 (1 seed) reaches the bank and moves again; the
        // position after is a Mancala win only if the sign is kept.
        let mut pits = [0u8; 14];
        pits[5] = 1;
        pits[4] = 2;
        pits[6] = 30;
        pits[13] = 15;
        let s = GameState::Mancala(Mancala::from_pits(pits, Player::P1));
        let h = Heuristic::default();
        let v = minimax_value(&s, 4, &h, Player::P1);
        assert_eq!(v, plain(&s, 4, &h));
        assert_eq!(v, 1.0);
        assert_eq!(minimax_value(&s, 4, &h, Player::P2), -1.0);
    }

    #[test]
    fn heuristic_ranges() {
        let h = Heuristic::default();
        let mut pits = [0u8; 14];
        pits[6] = 12;
        pits[0] = 18;
        pits[7] = 18;
        let s = GameState::Mancala(Mancala::from_pits(pits, Player::P2));
        assert_eq!(h.evaluate(&s, Player::P1), 0.25);
        assert_eq!(h.evaluate(&s, Player::P2), -0.25);
        let start = GameState::initial(GameId::NineMensMorris);
        assert_eq!(h.evaluate(&start, Player::P1), 0.0);
    }

    #[test]
    fn pruned_equals_unpruned_on_random_positions() {
        let h = Heuristic::default();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut checked = 0;
        while checked < 1000 {
            let mut s = GameState::initial(GameId::TicTacToe);
            let plies = rng.random_range(0..9);
            for _ in 0..plies {
                if s.is_terminal() {
                    break;
                }
                let a = *s.legal_actions().unwrap().choose(&mut rng).unwrap();
                s = s.apply(a).unwrap();
            }
            let depth = rng.random_range(0..=9);
            let expected = plain(&s, depth, &h);
            for p in [Player::P1, Player::P2] {
                let sign = if p == s.to_move() { 1.0 } else { -1.0 };
                assert_eq!(minimax_value(&s, depth, &h, p), sign * expected, "{s}");
            }
            checked += 1;
        }
    }

    #[test]
    fn pruned_equals_unpruned_with_heuristic_leaves() {
        let h = Heuristic::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for game in [GameId::Mancala, GameId::NineMensMorris] {
            for _ in 0..30 {
                let mut s = GameState::initial(game);
                for _ in 0..rng.random_range(0..30) {
                    if s.is_terminal() {
                        break;
                    }
                    let a = *s.legal_actions().unwrap().choose(&mut rng).unwrap();
                    s = s.apply(a).unwrap();
                }
                let depth = if game == GameId::Mancala { 4 } else { 2 };
                let v = minimax_value(&s, depth, &h, s.to_move());
                assert!((v - plain(&s, depth, &h)).abs() < 1e-12, "{s}");
            }
        }
    }

    #[test]
    fn tie_set_matches_plain_child_values() {
        let h = Heuristic::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let mut s = GameState::initial(GameId::TicTacToe);
            for _ in 0..rng.random_range(0..7) {
                if s.is_terminal() {
                    break;
                }
                let a = *s.legal_actions().unwrap().choose(&mut rng).unwrap();
                s = s.apply(a).unwrap();
            }
            if s.is_terminal() {
                continue;
            }
            let me = s.to_move();
            let vals: Vec<f64> =
                s.legal_actions().unwrap().into_iter().map(|a| -plain(&s.apply(a).unwrap(), 8, &h)).collect();
            let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let expected: Vec<u8> = (0..vals.len()).filter(|&i| vals[i] == best).map(|i| i as u8).collect();
            let mut m = MinMax::new(9, true, h);
            assert_eq!(m.best_actions(&s), expected, "{s} to move {me}");
        }
    }
}
