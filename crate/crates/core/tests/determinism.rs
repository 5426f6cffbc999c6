mod common;

use darkgames::games::Player;
use darkgames::gradient::Game;
use darkgames::solvers::{run_solver, Algorithm, SolverConfig, UpdateScheme};
use darkgames::treeplex::tabular_to_sequence_form;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn gradients_identical_across_thread_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for spec in common::small_specs() {
        let base = Game::new(&spec).unwrap();
        let [x, y] = [Player::One, Player::Two]
            .map(|p| tabular_to_sequence_form(base.treeplex(p), &common::random_tabular(base.treeplex(p), &mut rng, 0.1)));
        let mut reference = None;
        for threads in [1, 2, 8, 1, 8] {
            let game = Game::new(&spec).unwrap().with_threads(threads);
            let (g1, g2) = game.gradients(&x, &y).unwrap();
            let got = (bits(&g1.values), bits(&g2.values));
            match &reference {
                None => reference = Some(got),
                Some(r) => assert_eq!(r, &got, "{spec} with {threads} threads"),
            }
        }
    }
}

#[test]
fn solver_logs_identical_across_thread_counts() {
    for spec in common::small_specs() {
        for algo in Algorithm::ALL {
            for scheme in [UpdateScheme::Alternating, UpdateScheme::Simultaneous] {
                let mut config = SolverConfig::new(algo);
                config.scheme = scheme;
                let runs: Vec<_> = [1, 2, 8, 2]
                    .iter()
                    .map(|&t| run_solver(&Game::new(&spec).unwrap().with_threads(t), &config, 60, 7).unwrap())
                    .collect();
                for r in &runs[1..] {
                    assert_eq!(r.log.len(), runs[0].log.len());
                    assert!(r.log.iter().zip(&runs[0].log).all(|(a, b)| a.same_numbers(b)), "{spec} {algo}");
                    assert_eq!(bits(&r.average[0].values), bits(&runs[0].average[0].values));
                    assert_eq!(bits(&r.last[1].values), bits(&runs[0].last[1].values));
                }
            }
        }
    }
}
