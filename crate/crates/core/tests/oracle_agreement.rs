mod common;

use common::{random_pure, random_tabular, small_specs};
use darkgames::games::Player;
use darkgames::gradient::Game;
use darkgames::oracle::{oracle_best_response, oracle_expected_value, OracleLimits};
use darkgames::treeplex::{tabular_to_sequence_form, BoundPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

#[test]
fn pipeline_matches_brute_force_on_random_profiles() {
    let lim = OracleLimits::default();
    for spec in small_specs() {
        let game = Game::new(&spec).unwrap().with_threads(2);
        let tp1 = game.treeplex(Player::One);
        let tp2 = game.treeplex(Player::Two);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..40 {
            let (t1, t2) = if i % 4 == 3 {
                (random_pure(tp1, &mut rng), random_pure(tp2, &mut rng))
            } else {
                (random_tabular(tp1, &mut rng, 0.2), random_tabular(tp2, &mut rng, 0.2))
            };
            let pi1 = BoundPolicy { treeplex: tp1, table: &t1 };
            let pi2 = BoundPolicy { treeplex: tp2, table: &t2 };
            let x = tabular_to_sequence_form(tp1, &t1);
            let y = tabular_to_sequence_form(tp2, &t2);
            let e = game.evaluate(&x, &y).unwrap();

            let v = oracle_expected_value(&spec, &pi1, &pi2, lim).unwrap();
            let b1 = oracle_best_response(&spec, &pi2, Player::One, lim).unwrap().value;
            let b2 = oracle_best_response(&spec, &pi1, Player::Two, lim).unwrap().value;
            assert!((e.value - v).abs() <= TOL, "{spec} #{i}: value {} vs {v}", e.value);
            assert!((e.best_response[0] - b1).abs() <= TOL, "{spec} #{i}: br1");
            assert!((e.best_response[1] - b2).abs() <= TOL, "{spec} #{i}: br2");
            assert!((e.nash_gap - (b1 + b2)).abs() <= TOL);
            assert!((game.exploitability(&pi1, &pi2).unwrap() - (b1 + b2) / 2.0).abs() <= TOL);
        }
    }
}

#[test]
fn oracle_best_response_is_realised_by_its_policy() {
    let lim = OracleLimits::default();
    for spec in small_specs() {
        let game = Game::new(&spec).unwrap();
        let tp2 = game.treeplex(Player::Two);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t2 = random_tabular(tp2, &mut rng, 0.0);
        let pi2 = BoundPolicy { treeplex: tp2, table: &t2 };
        let br = oracle_best_response(&spec, &pi2, Player::One, lim).unwrap();
        let v = game.head_to_head(&br, &pi2).unwrap();
        assert!((v - br.value).abs() <= TOL, "{spec}");
    }
}
