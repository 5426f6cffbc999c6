//! Full-width fictitious play.

use super::Solver;
use crate::error::Result;
use crate::gradient::Game;
use crate::games::Player;
use crate::treeplex::{greedy_best_response, uniform_sequence_form, SequenceFormStrategy};

/// Running averages of fictitious play. The uniform profile counts as the
/// first iterate; each step mixes in exact best responses to the current
/// averages of the opponent.
pub struct FpState {
    /// Number of iterates in the average, the uniform start included.
    t: u64,
    average: [SequenceFormStrategy; 2],
    last: [SequenceFormStrategy; 2],
}

impl FpState {
    pub fn new(game: &Game) -> Self {
        let average = [
            uniform_sequence_form(game.treeplex(Player::One)),
            uniform_sequence_form(game.treeplex(Player::Two)),
        ];
        Self {
            t: 1,
            last: average.clone(),
            average,
        }
    }
}

impl Solver for FpState {
    fn step(&mut self, game: &Game) -> Result<()> {
        let (g1, g2) = game.gradients(&self.average[0], &self.average[1])?;
        let (br1, _) = greedy_best_response(game.treeplex(Player::One), &g1.values)?;
        let (br2, _) = greedy_best_response(game.treeplex(Player::Two), &g2.values)?;
        let t = self.t as f64;
        for (avg, br) in self.average.iter_mut().zip([&br1, &br2]) {
            for (a, b) in avg.values.iter_mut().zip(&br.values) {
                *a = (t * *a + b) / (t + 1.0);
            }
        }
        self.last = [br1, br2];
        self.t += 1;
        Ok(())
    }

    fn iterations(&self) -> u64 {
        self.t - 1
    }

    fn average(&self, p: usize) -> SequenceFormStrategy {
        self.average[p].clone()
    }

    fn current(&self, p: usize) -> SequenceFormStrategy {
        self.last[p].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{GameSpec, Ruleset};

    #[test]
    fn single_cell_board_is_a_fixed_point() {
        let game = Game::new(&GameSpec::dark_hex(1, Ruleset::Classical).unwrap()).unwrap();
        let mut fp = FpState::new(&game);
        let before = fp.average(0);
        fp.step(&game).unwrap();
        assert_eq!(fp.average(0), before);
        assert_eq!(fp.current(0).values, vec![1.0, 1.0]);
        assert_eq!(fp.iterations(), 1);
    }
}
