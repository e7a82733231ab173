//! Mancala (Kalah family) with 6 houses per side and 4 seeds per house.
//!
//! Pit layout, sowing runs towards higher indices and wraps:
//!
//! ```text
//!   pits 0..=5   P1 houses      pit 6   P1 bank
//!   pits 7..=12  P2 houses      pit 13  P2 bank
//! ```
//!
//! House `i` of P1 faces house `12 - i` of P2.

use std::fmt;

use smallvec::SmallVec;

use super::{Action, Outcome, Player};

pub const HOUSES: usize = 6;
pub const PITS: usize = 14;
pub const SEEDS_PER_HOUSE: u8 = 4;
pub const TOTAL_SEEDS: u32 = 48;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mancala {
    pits: [u8; PITS],
    to_move: Player,
    ply: u32,
    leftover_to_owner: bool,
}

fn base(p: Player) -> usize {
    match p {
        Player::P1 => 0,
        Player::P2 => 7,
    }
}

pub fn bank(p: Player) -> usize {
    base(p) + HOUSES
}

impl Mancala {
    pub fn new(leftover_to_owner: bool) -> Self {
        let mut pits = [SEEDS_PER_HOUSE; PITS];
        pits[bank(Player::P1)] = 0;
        pits[bank(Player::P2)] = 0;
        Mancala { pits, to_move: Player::P1, ply: 0, leftover_to_owner }
    }

    /// Arbitrary position, for tests and hand-built scenarios. The seed
    /// total is not checked.
    pub fn from_pits(pits: [u8; PITS], to_move: Player) -> Self {
        Mancala { pits, to_move, ply: 0, leftover_to_owner: true }
    }

    pub fn pits(&self) -> &[u8; PITS] {
        &self.pits
    }

    pub fn houses(&self, p: Player) -> &[u8] {
        &self.pits[base(p)..base(p) + HOUSES]
    }

    pub fn bank_seeds(&self, p: Player) -> u8 {
        self.pits[bank(p)]
    }

    pub fn to_move(&self) -> Player {
        self.to_move
    }

    pub fn ply(&self) -> u32 {
        self.ply
    }

    pub fn seed_total(&self) -> u32 {
        self.pits.iter().map(|&s| u32::from(s)).sum()
    }

    /// Bank plus seeds still in own houses (or, in the sweep variant,
    /// bank plus the opponent's leftover houses).
    pub fn score(&self, p: Player) -> u32 {
        let houses = |q: Player| self.houses(q).iter().map(|&s| u32::from(s)).sum::<u32>();
        let leftovers = if self.leftover_to_owner { houses(p) } else { houses(p.opponent()) };
        u32::from(self.bank_seeds(p)) + leftovers
    }

    pub fn outcome(&self) -> Option<Outcome> {
        if self.houses(self.to_move).iter().any(|&s| s > 0) {
            return None;
        }
        let (a, b) = (self.score(Player::P1), self.score(Player::P2));
        Some(match a.cmp(&b) {
            std::cmp::Ordering::Greater => Outcome::Win(Player::P1),
            std::cmp::Ordering::Less => Outcome::Win(Player::P2),
            std::cmp::Ordering::Equal => Outcome::Draw,
        })
    }

    pub(crate) fn actions(&self) -> Vec<Action> {
        self.houses(self.to_move)
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0)
            .map(|(h, _)| Action::House(h as u8))
            .collect()
    }

    pub(crate) fn play(&self, action: Action) -> Mancala {
        let Action::House(h) = action else { unreachable!("validated by legal_actions") };
        let mover = self.to_move;
        let own_bank = bank(mover);
        let skip = bank(mover.opponent());
        let mut next = self.clone();
        let mut idx = base(mover) + h as usize;
        let mut seeds = next.pits[idx];
        next.pits[idx] = 0;
        while seeds > 0 {
            idx = (idx + 1) % PITS;
            if idx == skip {
                continue;
            }
            next.pits[idx] += 1;
            seeds -= 1;
        }
        next.ply += 1;
        if idx == own_bank {
            return next;
        }
        let own_side = base(mover)..base(mover) + HOUSES;
        if own_side.contains(&idx) && next.pits[idx] == 1 {
            let opposite = 12 - idx;
            if next.pits[opposite] > 0 {
                next.pits[own_bank] += next.pits[opposite] + 1;
                next.pits[opposite] = 0;
                next.pits[idx] = 0;
            }
        }
        next.to_move = mover.opponent();
        next
    }

    pub(crate) fn encode(&self, out: &mut SmallVec<[u8; 16]>) {
        out.push(self.to_move.index() as u8);
        out.extend_from_slice(&self.pits);
    }
}

impl fmt::Display for Mancala {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // P2 houses drawn right-to-left across the top, as seen from P1.
        write!(f, "   ")?;
        for i in (7..13).rev() {
            write!(f, "{:>3}", self.pits[i])?;
        }
        writeln!(f)?;
        writeln!(f, "{:>3}{:>21}", self.pits[13], self.pits[6])?;
        write!(f, "   ")?;
        for i in 0..6 {
            write!(f, "{:>3}", self.pits[i])?;
        }
        writeln!(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameId, GameState};

    #[test]
    fn start_position_holds_48_seeds() {
        let s = GameState::initial(GameId::Mancala);
        let m = s.as_mancala().unwrap();
        assert!(m.houses(Player::P1).iter().chain(m.houses(Player::P2)).all(|&x| x == 4));
        assert_eq!(m.bank_seeds(Player::P1), 0);
        assert_eq!(m.bank_seeds(Player::P2), 0);
        assert_eq!(m.seed_total(), TOTAL_SEEDS);
        assert_eq!(s.legal_actions().unwrap().len(), 6);
    }

    #[test]
    fn house_two_ends_in_bank_and_grants_extra_turn() {
        // Four seeds from pit 2 land in 3, 4, 5 and the bank at 6.
        let s = GameState::initial(GameId::Mancala).apply(Action::House(2)).unwrap();
        let m = s.as_mancala().unwrap();
        assert_eq!(m.pits()[2], 0);
        assert_eq!(&m.pits()[3..7], &[5, 5, 5, 1]);
        assert_eq!(s.to_move(), Player::P1);
        assert_eq!(m.seed_total(), TOTAL_SEEDS);
    }

    #[test]
    fn sowing_skips_opponent_bank() {
        let mut pits = [0u8; PITS];
        pits[5] = 10;
        pits[2] = 1;
        pits[9] = 37;
        let m = Mancala::from_pits(pits, Player::P1);
        let next = m.play(Action::House(5));
        // 6, 7..=12, skip 13, 0, 1 -> 1 + 6 + 2 = 9, then 2 gets the tenth.
        assert_eq!(next.pits()[13], 0);
        assert_eq!(next.pits()[6], 1);
        assert_eq!(next.pits()[0], 1);
        assert_eq!(next.pits()[1], 1);
        assert_eq!(next.pits()[2], 2);
        assert_eq!(next.seed_total(), 48);
    }

    #[test]
    fn capture_takes_opposite_house() {
        let mut pits = [0u8; PITS];
        pits[0] = 1; // sows into empty house 1
        pits[11] = 5; // faces house 1
        pits[7] = 42;
        let m = Mancala::from_pits(pits, Player::P1);
        let next = m.play(Action::House(0));
        assert_eq!(next.pits()[1], 0);
        assert_eq!(next.pits()[11], 0);
        assert_eq!(next.bank_seeds(Player::P1), 6);
        assert_eq!(next.to_move(), Player::P2);
    }

    #[test]
    fn no_capture_when_opposite_house_empty() {
        let mut pits = [0u8; PITS];
        pits[0] = 1;
        pits[7] = 47;
        let m = Mancala::from_pits(pits, Player::P1);
        let next = m.play(Action::House(0));
        assert_eq!(next.pits()[1], 1);
        assert_eq!(next.bank_seeds(Player::P1), 0);
    }

    #[test]
    fn p2_capture_uses_same_geometry() {
        let mut pits = [0u8; PITS];
        pits[7] = 1; // P2 house 0 sows into pit 8
        pits[4] = 3; // faces pit 8
        pits[0] = 44;
        let m = Mancala::from_pits(pits, Player::P2);
        let next = m.play(Action::House(0));
        assert_eq!(next.bank_seeds(Player::P2), 4);
        assert_eq!(next.pits()[4], 0);
    }

    #[test]
    fn empty_side_to_move_ends_game_with_leftovers_to_owner() {
        let mut pits = [0u8; PITS];
        pits[6] = 25;
        pits[13] = 20;
        pits[8] = 3;
        let m = Mancala::from_pits(pits, Player::P1);
        assert_eq!(m.score(Player::P1), 25);
        assert_eq!(m.score(Player::P2), 23);
        assert_eq!(m.outcome(), Some(Outcome::Win(Player::P1)));
        // Not over while P2 to move still has seeds.
        assert_eq!(Mancala::from_pits(pits, Player::P2).outcome(), None);
    }

    #[test]
    fn sweep_variant_moves_leftovers_to_opponent() {
        let mut pits = [0u8; PITS];
        pits[6] = 22;
        pits[13] = 20;
        pits[8] = 6;
        let mut m = Mancala::from_pits(pits, Player::P1);
        m.leftover_to_owner = false;
        assert_eq!(m.score(Player::P1), 28);
        assert_eq!(m.outcome(), Some(Outcome::Win(Player::P1)));
        m.leftover_to_owner = true;
        assert_eq!(m.outcome(), Some(Outcome::Win(Player::P2)));
        pits[6] = 20;
        pits[13] = 22;
        let mut m = Mancala::from_pits(pits, Player::P1);
        assert_eq!(m.outcome(), Some(Outcome::Win(Player::P2)));
        m.leftover_to_owner = false;
        assert_eq!(m.outcome(), Some(Outcome::Win(Player::P1)));
    }
}
