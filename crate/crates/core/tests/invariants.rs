mod common;

use darkgames::games::{GameSpec, GameState, Player, Ruleset};
use darkgames::gradient::Game;
use darkgames::treeplex::{tabular_to_sequence_form, SequenceFormStrategy, TabularPolicy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn games() -> &'static [Game] {
    static GAMES: OnceLock<Vec<Game>> = OnceLock::new();
    GAMES.get_or_init(|| common::small_specs().iter().map(|s| Game::new(s).unwrap()).collect())
}

fn profile(game: &Game, seed: u64, zero_p: f64) -> [SequenceFormStrategy; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    [Player::One, Player::Two].map(|p| {
        let tp = game.treeplex(p);
        tabular_to_sequence_form(tp, &common::random_tabular(tp, &mut rng, zero_p))
    })
}

fn mix(a: &SequenceFormStrategy, b: &SequenceFormStrategy, w: f64) -> SequenceFormStrategy {
    SequenceFormStrategy {
        player: a.player,
        values: a.values.iter().zip(&b.values).map(|(p, q)| w * p + (1.0 - w) * q).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn value_is_bilinear(g in 0usize..4, s1 in any::<u64>(), s2 in any::<u64>(), w in 0.0f64..=1.0) {
        let game = &games()[g];
        let [x1, y1] = profile(game, s1, 0.2);
        let [x2, y2] = profile(game, s2, 0.2);
        let v = |x: &SequenceFormStrategy, y: &SequenceFormStrategy| game.expected_value(x, y).unwrap();
        let lhs = v(&mix(&x1, &x2, w), &y1);
        prop_assert!((lhs - (w * v(&x1, &y1) + (1.0 - w) * v(&x2, &y1))).abs() < 1e-12);
        let lhs = v(&x1, &mix(&y1, &y2, w));
        prop_assert!((lhs - (w * v(&x1, &y1) + (1.0 - w) * v(&x1, &y2))).abs() < 1e-12);
    }

    #[test]
    fn gradients_are_antisymmetric(g in 0usize..4, seed in any::<u64>()) {
        let game = &games()[g];
        let [x, y] = profile(game, seed, 0.3);
        let (g1, g2) = game.gradients(&x, &y).unwrap();
        let v1 = x.dot(&g1.values);
        let v2 = y.dot(&g2.values);
        prop_assert!((v1 + v2).abs() < 1e-12, "{} {}", v1, v2);
        prop_assert!((v1 - game.expected_value(&x, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn sequence_form_conserves_flow(g in 0usize..4, seed in any::<u64>(), zero_p in 0.0f64..0.9) {
        let game = &games()[g];
        let [x, y] = profile(game, seed, zero_p);
        prop_assert!(x.flow_residual(game.treeplex(Player::One)) < 1e-12);
        prop_assert!(y.flow_residual(game.treeplex(Player::Two)) < 1e-12);
        prop_assert!(x.values[0] == 1.0 && x.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn best_responses_dominate(g in 0usize..4, seed in any::<u64>()) {
        let game = &games()[g];
        let [x, y] = profile(game, seed, 0.2);
        let e = game.evaluate(&x, &y).unwrap();
        prop_assert!(e.best_response[0] >= e.value - 1e-12);
        prop_assert!(e.best_response[1] >= -e.value - 1e-12);
        prop_assert!(e.nash_gap >= -1e-12);
        prop_assert!((e.exploitability() - e.nash_gap / 2.0).abs() == 0.0);
    }

    #[test]
    fn tabular_round_trip_on_reached_infosets(g in 0usize..4, seed in any::<u64>()) {
        let game = &games()[g];
        let tp = game.treeplex(Player::One);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = common::random_tabular(tp, &mut rng, 0.0);
        let back = tabular_to_sequence_form(tp, &t).to_tabular(tp);
        for (a, b) in t.probs.iter().zip(&back.probs) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

fn sample(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let mut u: f64 = rng.gen();
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    probs.len() - 1
}

#[test]
fn rollouts_agree_with_exact_value() {
    let spec = GameSpec::dark_hex(2, Ruleset::Classical).unwrap();
    let game = Game::new(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tables: [TabularPolicy; 2] = [Player::One, Player::Two].map(|p| common::random_tabular(game.treeplex(p), &mut rng, 0.0));
    let [x, y] = [Player::One, Player::Two].map(|p| tabular_to_sequence_form(game.treeplex(p), &tables[p.index()]));
    let exact = game.expected_value(&x, &y).unwrap();

    let n = 1_000_000u32;
    let (mut sum, mut sq) = (0.0, 0.0);
    let root = GameState::initial(spec).unwrap();
    for _ in 0..n {
        let mut s = root.clone();
        while !s.is_terminal() {
            let p = s.acting_player();
            let tp = game.treeplex(p);
            let id = tp.find(&s.info_state_key(p)).expect("reachable key");
            let probs = tables[p.index()].distribution(tp, id);
            let a = tp.infoset(id).actions().nth(sample(&mut rng, probs)).unwrap();
            s = s.apply_action(a).unwrap();
        }
        let r = s.terminal_reward().unwrap() as f64;
        sum += r;
        sq += r * r;
    }
    let mean = sum / n as f64;
    let sd = (sq / n as f64 - mean * mean).sqrt();
    let err = (mean - exact).abs();
    assert!(err <= 3.0 * sd / (n as f64).sqrt(), "mean {mean} exact {exact} sd {sd}");
}
